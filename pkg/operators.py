# operators.py - операторы B: X -> X, их композиции, степени и кратные
import logging
import math
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from errors import DimensionError, OperatorError
from membership import Point, as_point, check_dimension

logger = logging.getLogger(__name__)


def _to_point(v: np.ndarray) -> Point:
    return tuple(float(c) for c in v)


class Operator:
    """
    Оператор B: R^d -> R^d. dimension = None означает, что оператор
    определен в любой размерности (тождественный, композиции из них).
    """

    def __init__(self, label: str, dimension: Optional[int] = None):
        self.label = label
        self.dimension = dimension

    @property
    def is_linear(self) -> bool:
        return False

    def _apply(self, p: Point) -> Point:
        raise NotImplementedError

    def apply(self, p: Iterable[float]) -> Point:
        p = as_point(p)
        check_dimension(p, self.dimension, f"оператора {self.label}")
        q = self._apply(p)
        if len(q) != len(p):
            raise DimensionError(f"Оператор {self.label} изменил размерность {len(p)} -> {len(q)}")
        return q

    def __call__(self, p: Iterable[float]) -> Point:
        return self.apply(p)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label!r})"


class Identity(Operator):
    def __init__(self):
        super().__init__("I")

    @property
    def is_linear(self) -> bool:
        return True

    def _apply(self, p: Point) -> Point:
        return p


class LinearMatrix(Operator):
    """Линейный оператор, заданный квадратной матрицей d x d."""

    def __init__(self, matrix, label: str = None):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise OperatorError(f"Матрица оператора должна быть квадратной, получена форма {m.shape}")
        if not np.all(np.isfinite(m)):
            raise OperatorError("Элементы матрицы должны быть конечными")
        m.setflags(write=False)
        super().__init__(label or f"matrix{m.tolist()}", dimension=m.shape[0])
        self.matrix = m

    @property
    def is_linear(self) -> bool:
        return True

    def _apply(self, p: Point) -> Point:
        return _to_point(self.matrix @ np.asarray(p))


class Affine(Operator):
    """B(p) = A p + c."""

    def __init__(self, matrix, offset: Sequence[float], label: str = None):
        self.linear = LinearMatrix(matrix)
        off = np.array(as_point(offset), dtype=float)
        if off.shape[0] != self.linear.dimension:
            raise DimensionError(f"Сдвиг размерности {off.shape[0]} не подходит к матрице {self.linear.dimension}")
        off.setflags(write=False)
        super().__init__(label or f"affine({self.linear.label}, {off.tolist()})", dimension=self.linear.dimension)
        self.offset = off

    @property
    def is_linear(self) -> bool:
        return not np.any(self.offset)

    def _apply(self, p: Point) -> Point:
        return _to_point(self.linear.matrix @ np.asarray(p) + self.offset)


class General(Operator):
    """Произвольное чистое отображение Point -> Point (в том числе нелинейное)."""

    def __init__(self, fn: Callable[[Point], Sequence[float]], label: str,
                 dimension: Optional[int] = None, linear: bool = False):
        super().__init__(label, dimension=dimension)
        self.fn = fn
        self._linear = linear

    @property
    def is_linear(self) -> bool:
        return self._linear

    def _apply(self, p: Point) -> Point:
        return as_point(self.fn(p))


def _common_dimension(ops: Sequence[Operator]) -> Optional[int]:
    dims = {op.dimension for op in ops if op.dimension is not None}
    if len(dims) > 1:
        raise DimensionError(f"Несовместимые размерности операторов: {sorted(dims)}")
    return dims.pop() if dims else None


class Composition(Operator):
    """
    Композиция B1 B2 ... Bk, применяется справа налево:
    (B1 B2)(y) = B1(B2(y)). Пустая композиция - тождественный оператор.
    """

    def __init__(self, ops: Sequence[Operator], label: str = None):
        ops = tuple(ops)
        super().__init__(label or ("(" + " ".join(op.label for op in ops) + ")" if ops else "I"),
                         dimension=_common_dimension(ops))
        self.ops = ops

    @property
    def is_linear(self) -> bool:
        return all(op.is_linear for op in self.ops)

    def _apply(self, p: Point) -> Point:
        for op in reversed(self.ops):
            p = op.apply(p)
        return p


class Power(Operator):
    """
    Степень B^n, хранится лениво (база + показатель) и вычисляется
    повторным применением, поэтому работает и для нелинейных операторов.
    """

    def __init__(self, base: Operator, n: int):
        if n < 0:
            raise OperatorError(f"Показатель степени должен быть неотрицательным, получено {n}")
        super().__init__(f"{base.label}^{n}", dimension=base.dimension)
        self.base = base
        self.n = int(n)

    @property
    def is_linear(self) -> bool:
        return self.n == 0 or self.base.is_linear

    def _apply(self, p: Point) -> Point:
        for _ in range(self.n):
            p = self.base.apply(p)
        return p

    def as_matrix(self) -> np.ndarray:
        """Матрица B^n для линейной матричной базы (через numpy.linalg.matrix_power)."""
        if not isinstance(self.base, LinearMatrix):
            raise OperatorError(f"Матрица степени определена только для матричной базы, получено {self.base.label}")
        return np.linalg.matrix_power(self.base.matrix, self.n)


class Scaled(Operator):
    """aB: p -> a * B(p)."""

    def __init__(self, base: Operator, a: float):
        super().__init__(f"{a:g}{base.label}", dimension=base.dimension)
        self.base = base
        self.a = float(a)

    @property
    def is_linear(self) -> bool:
        return self.base.is_linear

    def _apply(self, p: Point) -> Point:
        return _to_point(self.a * np.asarray(self.base.apply(p)))


class PointwiseSum(Operator):
    """(B1 + sign*B2)(y) = B1(y) + sign*B2(y)."""

    def __init__(self, first: Operator, second: Operator, sign: int = 1):
        if sign not in (1, -1):
            raise OperatorError(f"Знак должен быть 1 или -1, получено {sign}")
        op = "+" if sign > 0 else "-"
        super().__init__(f"({first.label}{op}{second.label})", dimension=_common_dimension([first, second]))
        self.first = first
        self.second = second
        self.sign = sign

    @property
    def is_linear(self) -> bool:
        return self.first.is_linear and self.second.is_linear

    def _apply(self, p: Point) -> Point:
        u = np.asarray(self.first.apply(p))
        v = np.asarray(self.second.apply(p))
        return _to_point(u + v if self.sign > 0 else u - v)


IDENTITY = Identity()


def apply(op: Operator, p: Iterable[float]) -> Point:
    return op.apply(p)


def identity() -> Operator:
    return IDENTITY


def power(op: Operator, n: int) -> Operator:
    """B^n с B^0 = I."""
    if n < 0:
        raise OperatorError(f"Показатель степени должен быть неотрицательным, получено {n}")
    if n == 0:
        return IDENTITY
    if n == 1:
        return op
    return Power(op, n)


def scale(op: Operator, a: float) -> Operator:
    """aB для линейного B и a > 0."""
    if not (math.isfinite(a) and a > 0):
        raise OperatorError(f"Множитель a должен быть положительным, получено {a}")
    if not op.is_linear:
        raise OperatorError(f"Оператор {op.label} не линейный, aB вне условий теоремы")
    return Scaled(op, a)


def compose(outer: Operator, inner: Operator) -> Operator:
    _common_dimension([outer, inner])
    return Composition([outer, inner])


def add(first: Operator, second: Operator) -> Operator:
    return PointwiseSum(first, second, 1)


def subtract(first: Operator, second: Operator) -> Operator:
    return PointwiseSum(first, second, -1)


def diag(*entries: float) -> LinearMatrix:
    label = "diag(" + ",".join(f"{e:g}" for e in entries) + ")"
    return LinearMatrix(np.diag(np.array(entries, dtype=float)), label=label)


def zero(dimension: int) -> LinearMatrix:
    return LinearMatrix(np.zeros((dimension, dimension)), label="0")


def rotation(theta: float) -> LinearMatrix:
    """Поворот плоскости на угол theta вокруг начала координат."""
    c, s = math.cos(theta), math.sin(theta)
    return LinearMatrix([[c, -s], [s, c]], label=f"rot({theta:g})")


def projection(axis: int, dimension: int = 2) -> LinearMatrix:
    """Ортогональная проекция на координатную ось axis."""
    if not 0 <= axis < dimension:
        raise OperatorError(f"Ось {axis} вне размерности {dimension}")
    entries = [0.0] * dimension
    entries[axis] = 1.0
    return LinearMatrix(np.diag(entries), label=f"proj({axis})")


def sup_distance(p: Iterable[float], q: Iterable[float]) -> float:
    """Покомпонентное расстояние max |p_i - q_i|."""
    p, q = as_point(p), as_point(q)
    if len(p) != len(q):
        raise DimensionError(f"Точки разной размерности: {len(p)} и {len(q)}")
    return float(np.max(np.abs(np.asarray(p) - np.asarray(q))))


def points_close(p: Iterable[float], q: Iterable[float], tol: float = 1e-9) -> bool:
    return sup_distance(p, q) <= tol
