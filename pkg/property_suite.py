# property_suite.py - рандомизированная проверка свойств нечеткой скорости
"""
Каждое свойство проверяется на случайных конечных семействах табличных
функций принадлежности. Генератор строит экземпляры, удовлетворяющие
условию свойства, и проверяется только его заключение; экземпляры, на
которых условие построить не удалось, считаются пропущенными.

Точки, матрицы и множители берутся целочисленными (множитель кратен 1/4),
поэтому образы точек вычисляются без округления и совпадают с ключами таблиц.
"""

import json
import logging
import math
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from dynamics import orbit
from errors import RateError
from membership import FiniteFamily, Point, TableMembership
from operators import IDENTITY, LinearMatrix, Operator, add, compose, scale, subtract
from rate_engine import attained_witness, rate_finite
from settings import DEFAULT_SEARCH

logger = logging.getLogger(__name__)

# Относительный допуск сравнения неравенств
REL_TOL = 1e-9

PROPERTY_IDS = ("T34-1", "T34-2", "T34-3", "T34-4", "T34-5", "T34-6", "T34-7", "T34-8", "T32", "C35")


class InstanceGenerator(BaseModel):
    """
    Параметры генерации экземпляров. Генерация - чистая функция
    (seed, номер свойства, номер испытания).
    """
    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0, lt=2 ** 64)
    dimension: int = Field(2, ge=1, le=4)
    family_size: int = Field(6, ge=2, le=6)
    # Координаты точек - целые числа из [-point_range, point_range]
    point_range: int = Field(5, ge=1)
    value_low: float = Field(0.05, gt=0, le=1)
    value_high: float = Field(1.0, gt=0, le=1)
    max_orbit_steps: int = Field(8, ge=1)

    @model_validator(mode="after")
    def _check_values(self):
        if self.value_low > self.value_high:
            raise ValueError(f"value_low={self.value_low} больше value_high={self.value_high}")
        return self

    def rng(self, property_id: str, trial: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, PROPERTY_IDS.index(property_id), trial])


class Counterexample(BaseModel):
    model_config = ConfigDict(frozen=True)

    trial: int
    details: Dict[str, Any]


class PropertyCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    property_id: str
    trials: int
    failures: List[Counterexample] = []
    passed: bool
    skipped: int = 0
    stated_form: str
    tested_form: str

    @model_validator(mode="after")
    def _passed_iff_no_failures(self):
        if self.passed != (not self.failures):
            raise ValueError("passed должно быть True тогда и только тогда, когда нет контрпримеров")
        return self


class TrialOutcome(NamedTuple):
    status: str  # pass | fail | skip
    details: Dict[str, Any]


def _num(x: Optional[float]) -> Any:
    if x is not None and math.isinf(x):
        return "inf"
    return x


def _leq(a: Optional[float], b: Optional[float], ref: float = 0.0) -> bool:
    """a <= b с относительным допуском REL_TOL; +inf справа всегда выполняет неравенство."""
    if a is None or b is None:
        return False
    if math.isinf(b):
        return True
    if math.isinf(a):
        return False
    return a <= b + REL_TOL * max(abs(a), abs(b), ref)


def _lattice_point(rng: np.random.Generator, gen: InstanceGenerator, nonzero: bool = True) -> Point:
    v = rng.integers(-gen.point_range, gen.point_range + 1, size=gen.dimension)
    if nonzero and not v.any():
        v[0] = 1
    return tuple(float(c) for c in v)


def _matrix(rng: np.random.Generator, gen: InstanceGenerator, label: str) -> LinearMatrix:
    return LinearMatrix(rng.integers(-3, 4, size=(gen.dimension, gen.dimension)).astype(float), label=label)


def _value(rng: np.random.Generator, gen: InstanceGenerator, high: Optional[float] = None) -> float:
    return float(rng.uniform(gen.value_low, gen.value_high if high is None else high))


def _random_member(rng: np.random.Generator, gen: InstanceGenerator, points: Iterable[Point],
                   label: str) -> TableMembership:
    entries = {}
    for p in points:
        entries[p] = _value(rng, gen)
    return TableMembership(entries, label=label)


def _random_family(rng: np.random.Generator, gen: InstanceGenerator, points: Sequence[Point],
                   size: Optional[int] = None) -> FiniteFamily:
    m = size if size is not None else int(rng.integers(1, gen.family_size + 1))
    return FiniteFamily([_random_member(rng, gen, points, f"F{i}") for i in range(m)])


def _dump_family(fam: FiniteFamily) -> List[List[Any]]:
    return [[[list(p), v] for p, v in sorted(f.entries.items())] for f in fam.members]


def _dump_matrix(op: LinearMatrix) -> List[List[float]]:
    return op.matrix.tolist()


def _rate(fam: FiniteFamily, B: Operator, y: Point) -> Optional[float]:
    return rate_finite(fam, B, y).extended()


def _outcome(ok: bool, details: Dict[str, Any]) -> TrialOutcome:
    return TrialOutcome("pass" if ok else "fail", details)


class _Assigner:
    """Набор значений функции в точках с проверкой согласованности при совпадении точек."""

    def __init__(self):
        self.entries: Dict[Point, float] = {}
        self.conflict = False

    def set(self, p: Point, v: float):
        old = self.entries.get(p)
        if old is None:
            self.entries[p] = v
        elif abs(old - v) > 1e-15:
            self.conflict = True


def _trial_positivity(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    B = _matrix(rng, gen, "B")
    y = _lattice_point(rng, gen)
    by = B.apply(y)
    m = max(2, int(rng.integers(1, gen.family_size + 1)))
    members = [TableMembership({by: 0.5}, label="bump"), _random_member(rng, gen, [y, by], "positive")]
    members += [_random_member(rng, gen, [y, by], f"F{i}") for i in range(m - 2)]
    fam = FiniteFamily(members)
    r = _rate(fam, B, y)
    details = {"y": list(y), "B": _dump_matrix(B), "family": _dump_family(fam), "rate": _num(r)}
    return _outcome(r is not None and r > 0, details)


def _trial_identity(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    y = _lattice_point(rng, gen)
    fam = _random_family(rng, gen, [y])
    rate = rate_finite(fam, IDENTITY, y)
    details = {"y": list(y), "family": _dump_family(fam), "rate": _num(rate.extended())}
    return _outcome(rate.is_finite and rate.value == 1.0, details)


def _trial_scaling(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    B1 = _matrix(rng, gen, "B1")
    a = int(rng.integers(1, 17)) / 4.0
    y = _lattice_point(rng, gen)
    aI = scale(IDENTITY, a)
    ay = aI.apply(y)
    fam = _random_family(rng, gen, [y, ay, B1.apply(ay)])
    lhs = _rate(fam, scale(B1, a), y)
    r_b1, r_ai = _rate(fam, B1, ay), _rate(fam, aI, y)
    rhs = None if r_b1 is None or r_ai is None else r_b1 * r_ai
    details = {"y": list(y), "a": a, "B1": _dump_matrix(B1), "family": _dump_family(fam),
               "lhs": _num(lhs), "rhs": _num(rhs)}
    return _outcome(_leq(lhs, rhs), details)


def _trial_dominance(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    B1, B2 = _matrix(rng, gen, "B1"), _matrix(rng, gen, "B2")
    y = _lattice_point(rng, gen)
    u, v = B1.apply(y), B2.apply(y)
    m = int(rng.integers(1, gen.family_size + 1))
    members = []
    for i in range(m):
        values = _Assigner()
        values.set(y, _value(rng, gen))
        fv = _value(rng, gen, high=0.9)
        values.set(v, fv)
        values.set(u, min(1.0, fv + 0.1))
        members.append(TableMembership(values.entries, label=f"F{i}"))
    fam = FiniteFamily(members)
    details = {"y": list(y), "B1": _dump_matrix(B1), "B2": _dump_matrix(B2), "family": _dump_family(fam)}
    if any(f.value(u) < f.value(v) for f in fam.members):
        return TrialOutcome("skip", details)
    r1, r2 = _rate(fam, B1, y), _rate(fam, B2, y)
    details.update(rate_B1=_num(r1), rate_B2=_num(r2))
    return _outcome(_leq(r2, r1), details)


def _trial_subadditivity(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    B1, B2 = _matrix(rng, gen, "B1"), _matrix(rng, gen, "B2")
    y = _lattice_point(rng, gen)
    total = add(B1, B2)
    u, v, s = B1.apply(y), B2.apply(y), total.apply(y)
    m = int(rng.integers(1, gen.family_size + 1))
    members, conflict = [], False
    for i in range(m):
        values = _Assigner()
        fu = 0.0 if not any(u) else _value(rng, gen, high=0.5)
        fv = 0.0 if not any(v) else _value(rng, gen, high=0.5)
        values.set(u, fu)
        values.set(v, fv)
        values.set(s, fu + fv)
        if y not in values.entries:
            values.set(y, _value(rng, gen))
        conflict = conflict or values.conflict or values.entries[y] == 0.0
        members.append(TableMembership(values.entries, label=f"F{i}"))
    fam = FiniteFamily(members)
    details = {"y": list(y), "B1": _dump_matrix(B1), "B2": _dump_matrix(B2), "family": _dump_family(fam)}
    if conflict:
        return TrialOutcome("skip", details)
    lhs, r1, r2 = _rate(fam, total, y), _rate(fam, B1, y), _rate(fam, B2, y)
    rhs = None if r1 is None or r2 is None else r1 + r2
    details.update(lhs=_num(lhs), rhs=_num(rhs))
    return _outcome(_leq(lhs, rhs), details)


def _trial_reverse_triangle(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    B1, B2 = _matrix(rng, gen, "B1"), _matrix(rng, gen, "B2")
    y = _lattice_point(rng, gen)
    diff = subtract(B1, B2)
    u, v, d = B1.apply(y), B2.apply(y), diff.apply(y)
    m = int(rng.integers(1, gen.family_size + 1))
    members, conflict = [], False
    for i in range(m):
        values = _Assigner()
        fv = 0.0 if not any(v) else _value(rng, gen, high=0.5)
        fd = 0.0 if not any(d) else _value(rng, gen, high=0.5)
        values.set(v, fv)
        values.set(d, fd)
        values.set(u, fd + fv)
        if y not in values.entries:
            values.set(y, _value(rng, gen))
        conflict = conflict or values.conflict or values.entries[y] == 0.0
        members.append(TableMembership(values.entries, label=f"F{i}"))
    fam = FiniteFamily(members)
    details = {"y": list(y), "B1": _dump_matrix(B1), "B2": _dump_matrix(B2), "family": _dump_family(fam)}
    if conflict:
        return TrialOutcome("skip", details)
    r1, r2, rd = _rate(fam, B1, y), _rate(fam, B2, y), _rate(fam, diff, y)
    details.update(rate_B1=_num(r1), rate_B2=_num(r2), rate_diff=_num(rd))
    if r1 is None or r2 is None or rd is None:
        return _outcome(False, details)
    ok = _leq(r2, r1) and _leq(r1 - r2, rd, ref=max(r1, r2))
    return _outcome(ok, details)


def _trial_submultiplicativity(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    B1, B2 = _matrix(rng, gen, "B1"), _matrix(rng, gen, "B2")
    y = _lattice_point(rng, gen)
    w = B2.apply(y)
    fam = _random_family(rng, gen, [y, w, B1.apply(w)])
    lhs = _rate(fam, compose(B1, B2), y)
    r1, r2 = _rate(fam, B1, w), _rate(fam, B2, y)
    rhs = None if r1 is None or r2 is None else r1 * r2
    details = {"y": list(y), "B1": _dump_matrix(B1), "B2": _dump_matrix(B2), "family": _dump_family(fam),
               "lhs": _num(lhs), "rhs": _num(rhs)}
    return _outcome(_leq(lhs, rhs), details)


def _trial_family_monotone(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    B = _matrix(rng, gen, "B")
    y = _lattice_point(rng, gen)
    fam = _random_family(rng, gen, [y, B.apply(y)])
    k = int(rng.integers(1, len(fam) + 1))
    indices = sorted(int(i) for i in rng.choice(len(fam), size=k, replace=False))
    sub = fam.subset(indices)
    r_sub, r_full = _rate(sub, B, y), _rate(fam, B, y)
    details = {"y": list(y), "B": _dump_matrix(B), "family": _dump_family(fam), "subset": indices,
               "rate_subset": _num(r_sub), "rate_family": _num(r_full)}
    return _outcome(_leq(r_sub, r_full), details)


def _trial_attainment(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    B = _matrix(rng, gen, "B")
    y = _lattice_point(rng, gen)
    fam = _random_family(rng, gen, [y, B.apply(y)])
    rate = rate_finite(fam, B, y)
    details = {"y": list(y), "B": _dump_matrix(B), "family": _dump_family(fam), "rate": _num(rate.extended())}
    if not rate.is_finite:
        return _outcome(False, details)
    try:
        pair = attained_witness(fam, B, y, rate, DEFAULT_SEARCH.witness_tol)
    except RateError as e:
        details["residual"] = e.residual
        return _outcome(False, details)
    details.update(member=pair.member_id, residual=pair.residual)
    return _outcome(True, details)


def _trial_product_bound(gen: InstanceGenerator, rng: np.random.Generator) -> TrialOutcome:
    B = _matrix(rng, gen, "B")
    y = _lattice_point(rng, gen)
    n = int(rng.integers(1, gen.max_orbit_steps + 1))
    points = [y]
    for _ in range(n):
        points.append(B.apply(points[-1]))
    fam = _random_family(rng, gen, points)
    report = orbit(B, y, n, fam)
    details = {"y": list(y), "B": _dump_matrix(B), "n": n, "family": _dump_family(fam),
               "n_step_rates": [_num(r.extended()) for r in report.n_step_rates],
               "product_bounds": [_num(b) for b in report.product_bounds]}
    return _outcome(all(ok is not False for ok in report.bound_satisfied), details)


class _Property(NamedTuple):
    trial: Callable[[InstanceGenerator, np.random.Generator], TrialOutcome]
    stated_form: str
    tested_form: str


PROPERTIES: Dict[str, _Property] = {
    "T34-1": _Property(_trial_positivity, "||B||_y > 0", "||B||_y > 0 (семейство содержит 0.5-импульс в B(y))"),
    "T34-2": _Property(_trial_identity, "||I||_y = 1", "||I||_y = 1"),
    "T34-3": _Property(_trial_scaling, "||aB1||_y <= ||B1||_(ay) ||aI||_y",
                       "||aB1||_y <= ||B1||_(ay) ||aI||_y"),
    "T34-4": _Property(_trial_dominance, "F(B1(y)) >= F(B2(y)) => ||B1||_y >= ||B2||_y",
                       "F(B1(y)) >= F(B2(y)) => ||B1||_y >= ||B2||_y"),
    "T34-5": _Property(_trial_subadditivity, "||B1+B2||_y <= ||B1||_y + ||B1||_y",
                       "||B1+B2||_y <= ||B1||_y + ||B2||_y"),
    "T34-6": _Property(_trial_reverse_triangle, "0 <= ||B1||_y - ||B1||_y <= ||B1-B2||_y",
                       "0 <= ||B1||_y - ||B2||_y <= ||B1-B2||_y"),
    "T34-7": _Property(_trial_submultiplicativity, "||B1B2||_y <= ||B1||_(B2(y)) ||B2||_y",
                       "||B1B2||_y <= ||B1||_(B2(y)) ||B2||_y"),
    "T34-8": _Property(_trial_family_monotone, "F1 ⊆ F2 => ||B||_(y,F1) <= ||B||_(y,F2)",
                       "F1 ⊆ F2 => ||B||_(y,F1) <= ||B||_(y,F2)"),
    "T32": _Property(_trial_attainment, "||B||_y F(y) = G(B(y)) для некоторых F, G",
                     "|rate F(y) - F(B(y))| <= witness_tol * rate для максимизирующего F"),
    "C35": _Property(_trial_product_bound, "||B^n||_y <= prod_k ||B||_(B^(k-1)(y))",
                     "||B^n||_y <= prod_k ||B||_(B^(k-1)(y)) * (1 + 1e-9)"),
}


def replay_trial(property_id: str, seed: int, trial: int,
                 gen: Optional[InstanceGenerator] = None) -> TrialOutcome:
    """Повторяет одно испытание по (свойство, seed, номер) - контрпример воспроизводится."""
    if property_id not in PROPERTIES:
        raise ValueError(f"Неизвестное свойство {property_id!r}, ожидается одно из {PROPERTY_IDS}")
    gen = InstanceGenerator(seed=seed) if gen is None else gen.model_copy(update={"seed": seed})
    return PROPERTIES[property_id].trial(gen, gen.rng(property_id, trial))


def _run_check(property_id: str, gen: InstanceGenerator, trials: int) -> PropertyCheck:
    if trials < 1:
        raise ValueError(f"Число испытаний должно быть >= 1, получено {trials}")
    prop = PROPERTIES[property_id]
    failures, skipped = [], 0
    for trial in range(trials):
        outcome = prop.trial(gen, gen.rng(property_id, trial))
        if outcome.status == "skip":
            skipped += 1
        elif outcome.status == "fail":
            failures.append(Counterexample(trial=trial, details=outcome.details))
            logger.warning(f"{property_id}: контрпример в испытании {trial} (seed={gen.seed})")
    logger.info(f"{property_id}: {trials} испытаний, {len(failures)} нарушений, {skipped} пропущено")
    return PropertyCheck(property_id=property_id, trials=trials, failures=failures, passed=not failures,
                         skipped=skipped, stated_form=prop.stated_form, tested_form=prop.tested_form)


def check_positivity(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("T34-1", gen, trials)


def check_identity(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("T34-2", gen, trials)


def check_scaling(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("T34-3", gen, trials)


def check_dominance(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("T34-4", gen, trials)


def check_subadditivity(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("T34-5", gen, trials)


def check_reverse_triangle(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("T34-6", gen, trials)


def check_submultiplicativity(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("T34-7", gen, trials)


def check_family_monotone(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("T34-8", gen, trials)


def check_attainment(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("T32", gen, trials)


def check_product_bound(gen: InstanceGenerator, trials: int) -> PropertyCheck:
    return _run_check("C35", gen, trials)


def run_suite(seed: int, trials: int, properties: Optional[Sequence[str]] = None,
              gen: Optional[InstanceGenerator] = None) -> List[PropertyCheck]:
    """Запускает выбранные свойства (по умолчанию все) в фиксированном порядке."""
    selected = PROPERTY_IDS if not properties else tuple(properties)
    unknown = [p for p in selected if p not in PROPERTIES]
    if unknown:
        raise ValueError(f"Неизвестные свойства: {unknown}, ожидаются {PROPERTY_IDS}")
    gen = InstanceGenerator(seed=seed) if gen is None else gen.model_copy(update={"seed": seed})
    ordered = [p for p in PROPERTY_IDS if p in selected]
    checks = [_run_check(p, gen, trials) for p in ordered]
    logger.info(f"Набор проверок завершен: {sum(c.passed for c in checks)}/{len(checks)} свойств выполнено")
    return checks


def suite_report_json(checks: Sequence[PropertyCheck], seed: int, trials: int) -> str:
    """Каноничный JSON отчета: сортированные ключи и никаких меток времени."""
    report = {
        "seed": seed,
        "trials": trials,
        "passed": all(c.passed for c in checks),
        "checks": [c.model_dump(mode="json") for c in checks],
    }
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False)
