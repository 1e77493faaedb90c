# membership.py - функции принадлежности и семейства функций принадлежности
import logging
import math
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import DimensionError, MembershipError

logger = logging.getLogger(__name__)

# Точка пространства R^d - неизменяемый кортеж координат
Point = Tuple[float, ...]

# Идентификатор члена семейства: индекс (конечное) или параметр (параметрическое)
MemberId = Union[int, float]


class LambdaCase(Enum):
    ANY_LAMBDA = "any"


# Точка (±r, 0) лежит на каждой кривой семейства
ANY_LAMBDA = LambdaCase.ANY_LAMBDA


def as_point(coords: Iterable[float]) -> Point:
    """
    Преобразует последовательность координат в точку.
    Все координаты должны быть конечными вещественными числами.
    """
    try:
        values = tuple(float(c) for c in coords)
    except (TypeError, ValueError) as e:
        raise DimensionError(f"Некорректные координаты точки: {e}")
    if not values:
        raise DimensionError("Точка должна иметь хотя бы одну координату")
    if not all(math.isfinite(v) for v in values):
        raise DimensionError(f"Координаты точки должны быть конечными: {values}")
    return values


def check_dimension(p: Point, dimension: Optional[int], owner: str = "") -> None:
    if dimension is not None and len(p) != dimension:
        raise DimensionError(
            f"Размерность точки {len(p)} не совпадает с размерностью {dimension} {owner}".rstrip()
        )


def conic_lambda(p: Iterable[float], r: float) -> Union[float, LambdaCase, None]:
    """
    Находит λ > 0, при котором точка p лежит на кривой x^2 + λy^2 = r^2.

    Возвращает ANY_LAMBDA для точек (±r, 0) и None, если точка не лежит
    ни на одной кривой семейства.
    """
    p = as_point(p)
    if len(p) != 2:
        raise DimensionError(f"Коническое семейство определено на плоскости, получена точка размерности {len(p)}")
    if not r > 0:
        raise MembershipError(f"Масштаб кривой r должен быть положительным, получено {r}")

    x, y = p
    x2, r2 = x * x, r * r
    if y != 0.0 and x2 < r2:
        lam = (r2 - x2) / y / y
        # λ вне диапазона float: точка численно не лежит ни на одной кривой
        return lam if 0.0 < lam < math.inf else None
    if y == 0.0 and x2 == r2:
        return ANY_LAMBDA
    return None


class MembershipFunction:
    """
    Функция принадлежности F: R^d -> [0, 1].

    Подклассы реализуют _value (и при необходимости _log_value);
    injective - объявленный, а не проверенный признак инъективности.
    """

    # True - значение выводится из логарифма, отношения считаются через log_value
    log_native = False

    def __init__(self, label: str, injective: Optional[bool] = None, dimension: Optional[int] = None):
        self.label = label
        self.injective = injective
        self.dimension = dimension

    def _value(self, p: Point) -> float:
        raise NotImplementedError

    def _log_value(self, p: Point) -> float:
        v = self._value(p)
        return math.log(v) if v > 0 else -math.inf

    def value(self, p: Iterable[float]) -> float:
        p = as_point(p)
        check_dimension(p, self.dimension, f"функции {self.label}")
        v = self._value(p)
        if not 0.0 <= v <= 1.0:
            raise MembershipError(f"Функция {self.label} вернула значение {v} вне [0, 1]")
        return v

    def log_value(self, p: Iterable[float]) -> float:
        """Логарифм значения принадлежности (-inf для нуля)."""
        p = as_point(p)
        check_dimension(p, self.dimension, f"функции {self.label}")
        return self._log_value(p)

    def __call__(self, p: Iterable[float]) -> float:
        return self.value(p)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label!r})"


class ConicMembership(MembershipFunction):
    """Принадлежность точки кривой c_(mu, r): x^2 + mu*y^2 = r^2."""

    log_native = True

    def __init__(self, mu: float, r: float, injective: Optional[bool] = None):
        if not (math.isfinite(mu) and mu > 0):
            raise MembershipError(f"Параметр mu должен быть положительным, получено {mu}")
        if not (math.isfinite(r) and r > 0):
            raise MembershipError(f"Масштаб r должен быть положительным, получено {r}")
        super().__init__(f"conic(mu={mu:g}, r={r:g})", injective=injective, dimension=2)
        self.mu = float(mu)
        self.r = float(r)

    def _log_value(self, p: Point) -> float:
        lam = conic_lambda(p, self.r)
        if lam is None:
            return -math.inf
        if lam is ANY_LAMBDA or lam == self.mu:
            return 0.0
        d = lam - self.mu
        # умножение дает inf вместо OverflowError при огромном lambda
        return -(d * d)

    def _value(self, p: Point) -> float:
        return math.exp(self._log_value(p))


def conic_membership(f: ConicMembership, p: Iterable[float]) -> float:
    """Значение функции принадлежности конического семейства в точке p."""
    return f.value(p)


class TableMembership(MembershipFunction):
    """
    Табличная функция принадлежности. Вне таблицы значение равно default
    (по умолчанию 0), чтобы функция оставалась всюду определенной.
    """

    def __init__(self, entries: Dict[Sequence[float], float], label: str = "table",
                 injective: Optional[bool] = None, default: float = 0.0):
        table = {}
        dims = set()
        for point, v in entries.items():
            key = as_point(point)
            v = float(v)
            if not 0.0 <= v <= 1.0:
                raise MembershipError(f"Значение {v} в точке {key} вне [0, 1]")
            table[key] = v
            dims.add(len(key))
        if len(dims) > 1:
            raise DimensionError(f"Точки таблицы {label} имеют разную размерность: {sorted(dims)}")
        if not 0.0 <= default <= 1.0:
            raise MembershipError(f"Значение по умолчанию {default} вне [0, 1]")
        super().__init__(label, injective=injective, dimension=dims.pop() if dims else None)
        self.entries = table
        self.default = float(default)

    def _value(self, p: Point) -> float:
        return self.entries.get(p, self.default)


class RadialMembership(MembershipFunction):
    """
    Принадлежность, зависящая только от расстояния до начала координат:
    F(p) = exp(-|p|^2 / scale^2). Не инъективна.
    """

    log_native = True

    def __init__(self, scale: float = 1.0, label: str = None):
        if not scale > 0:
            raise MembershipError(f"Масштаб должен быть положительным, получено {scale}")
        super().__init__(label or f"radial(scale={scale:g})", injective=False)
        self.scale = float(scale)

    def _log_value(self, p: Point) -> float:
        return -float(np.dot(p, p)) / (self.scale * self.scale)

    def _value(self, p: Point) -> float:
        return math.exp(self._log_value(p))


class CallableMembership(MembershipFunction):
    """Обертка над произвольной чистой функцией Point -> [0, 1]."""

    def __init__(self, fn: Callable[[Point], float], label: str,
                 injective: Optional[bool] = None, dimension: Optional[int] = None):
        super().__init__(label, injective=injective, dimension=dimension)
        self.fn = fn

    def _value(self, p: Point) -> float:
        return float(self.fn(p))


def evaluate(f: MembershipFunction, p: Iterable[float]) -> float:
    """Единая точка вычисления значения любой функции принадлежности."""
    return f.value(p)


class MembershipFamily:
    """Непустое семейство функций принадлежности F(X)."""

    label: str = "family"

    def member(self, member_id: MemberId) -> MembershipFunction:
        raise NotImplementedError


class FiniteFamily(MembershipFamily):
    def __init__(self, members: Sequence[MembershipFunction], label: str = "finite"):
        members = tuple(members)
        if not members:
            raise MembershipError("Семейство функций принадлежности не может быть пустым")
        self.members = members
        self.label = label

    def member(self, member_id: MemberId) -> MembershipFunction:
        if isinstance(member_id, float) and member_id.is_integer():
            member_id = int(member_id)
        if not isinstance(member_id, int) or not 0 <= member_id < len(self.members):
            raise MembershipError(f"В семействе {self.label} нет члена с индексом {member_id}")
        return self.members[member_id]

    def subset(self, indices: Iterable[int]) -> "FiniteFamily":
        return FiniteFamily([self.members[i] for i in indices], label=f"{self.label}[subset]")

    def __len__(self) -> int:
        return len(self.members)


class ParametricFamily(MembershipFamily):
    """
    Однопараметрическое семейство {generator(t) | t в области параметра}.
    Область - интервал, возможно открытый на концах или неограниченный сверху.
    """

    def __init__(self, low: float, high: float, generator: Callable[[float], MembershipFunction],
                 open_low: bool = False, open_high: bool = False,
                 parameter_name: str = "t", label: str = "parametric"):
        if not math.isfinite(low):
            raise MembershipError(f"Нижняя граница области параметра должна быть конечной, получено {low}")
        if not low < high:
            raise MembershipError(f"Пустая область параметра [{low}, {high}]")
        self.low = float(low)
        self.high = float(high)
        self.open_low = bool(open_low)
        # Неограниченный конец всегда открыт
        self.open_high = bool(open_high) or math.isinf(high)
        self.generator = generator
        self.parameter_name = parameter_name
        self.label = label

    def contains(self, t: float) -> bool:
        if t < self.low or (self.open_low and t == self.low):
            return False
        if t > self.high or (self.open_high and t == self.high):
            return False
        return True

    def member(self, member_id: MemberId) -> MembershipFunction:
        t = float(member_id)
        if not self.contains(t):
            raise MembershipError(f"Параметр {self.parameter_name}={t} вне области семейства {self.label}")
        return self.generator(t)

    @property
    def is_closed_bounded(self) -> bool:
        return not (self.open_low or self.open_high)

    def restrict(self, low: float, high: float) -> "ParametricFamily":
        """Сужение семейства на замкнутое окно [low, high] внутри области."""
        if not (self.contains(low) and self.contains(high)):
            raise MembershipError(f"Окно [{low}, {high}] не лежит в области семейства {self.label}")
        return ParametricFamily(low, high, self.generator, parameter_name=self.parameter_name,
                                label=f"{self.label}[{low:g},{high:g}]")


class ConicFamily(ParametricFamily):
    """Семейство {F_c(mu, r) | mu > 0} при фиксированном r."""

    def __init__(self, r: float, low: float = 0.0, high: float = math.inf,
                 open_low: bool = True, open_high: bool = True):
        if not (math.isfinite(r) and r > 0):
            raise MembershipError(f"Масштаб r должен быть положительным, получено {r}")
        if low < 0:
            raise MembershipError(f"Область mu должна лежать в (0, inf), получено [{low}, {high}]")
        if low == 0:
            open_low = True
        super().__init__(low, high, lambda mu: ConicMembership(mu, r),
                         open_low=open_low, open_high=open_high,
                         parameter_name="mu", label=f"conic(r={r:g})")
        self.r = float(r)

    @property
    def is_full_domain(self) -> bool:
        """Область совпадает с mu в (0, inf) - тогда применимы замкнутые формулы."""
        return self.low == 0.0 and self.open_low and math.isinf(self.high)

    def lambda_of(self, p: Iterable[float]) -> Union[float, LambdaCase, None]:
        return conic_lambda(p, self.r)

    def restrict(self, low: float, high: float) -> "ConicFamily":
        if not (self.contains(low) and self.contains(high)):
            raise MembershipError(f"Окно [{low}, {high}] не лежит в области семейства {self.label}")
        return ConicFamily(self.r, low, high, open_low=False, open_high=False)


def conic_family(r: float = 1.0) -> ConicFamily:
    return ConicFamily(r)


def family_members(fam: MembershipFamily, window: Optional[Tuple[float, float]] = None,
                   resolution: Optional[int] = None) -> List[Tuple[MemberId, MembershipFunction]]:
    """
    Перечисляет члены семейства.

    Конечное семейство возвращается целиком с индексами. Параметрическое
    дискретизируется: resolution членов в центрах равных ячеек окна, так что
    открытые концы области никогда не попадают в выборку.
    """
    if isinstance(fam, FiniteFamily):
        return list(enumerate(fam.members))

    if not isinstance(fam, ParametricFamily):
        raise MembershipError(f"Неизвестный тип семейства: {type(fam).__name__}")
    if resolution is None or resolution < 2:
        raise MembershipError(f"Для параметрического семейства нужно resolution >= 2, получено {resolution}")

    a, b = window if window is not None else (fam.low, fam.high)
    a, b = float(a), float(b)
    if not a < b:
        raise MembershipError(f"Пустое окно параметра [{a}, {b}]")
    if not (math.isfinite(a) and math.isfinite(b)):
        raise MembershipError(f"Окно [{a}, {b}] должно быть конечным для дискретизации")
    if a < fam.low or b > fam.high:
        raise MembershipError(f"Окно [{a}, {b}] выходит за область [{fam.low}, {fam.high}] семейства {fam.label}")

    step = (b - a) / resolution
    params = a + step * (np.arange(resolution) + 0.5)
    return [(float(t), fam.member(float(t))) for t in params]
