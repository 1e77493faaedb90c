# dynamics.py - орбиты оператора, оценка произведением и квазинеподвижные точки
import logging
import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict
from scipy.optimize import root_scalar

from errors import DynamicsError
from membership import (ANY_LAMBDA, ConicFamily, FiniteFamily, MembershipFamily, ParametricFamily,
                        Point, as_point, family_members)
from operators import Operator, power, sup_distance
from rate_engine import (ExtendedReal, FuzzyRate, Witness, _sample, compute_rate, initial_window,
                         scan_and_refine)
from settings import DEFAULT_SEARCH, SearchConfig

logger = logging.getLogger(__name__)

# Допуск сравнения ||B^k||_y с произведением пошаговых скоростей
BOUND_SLACK = 1e-9


class OrbitReport(BaseModel):
    """
    Орбита y, B(y), ..., B^n(y) со скоростями:
    step_rates[k-1] = ||B||_{B^(k-1)(y)}, n_step_rates[k-1] = ||B^k||_y,
    product_bounds[k-1] = произведение первых k пошаговых скоростей.
    None в product_bounds / bound_satisfied - проверка пропущена (Undefined).
    """
    model_config = ConfigDict(frozen=True)

    points: List[Tuple[float, ...]]
    step_rates: List[FuzzyRate]
    n_step_rates: List[FuzzyRate]
    product_bounds: List[Optional[ExtendedReal]]
    bound_satisfied: List[Optional[bool]]

    @property
    def steps(self) -> int:
        return len(self.step_rates)


class QuasiFixedFinding(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    witness: Witness
    ratio_residual: float
    exact: bool = False


class FixedPointCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    candidate: Tuple[float, ...]
    quasi_finding: QuasiFixedFinding
    injective_declared: bool
    operator_residual: float
    certified: bool
    reasons: List[str] = []


class QuasiFixedScan(BaseModel):
    model_config = ConfigDict(frozen=True)

    findings: List[QuasiFixedFinding]
    certificates: List[FixedPointCertificate]


def orbit_points(B: Operator, y: Point, n: int) -> List[Point]:
    points = [as_point(y)]
    for _ in range(n):
        points.append(B.apply(points[-1]))
    return points


def product_bound(step_rates: List[FuzzyRate]) -> List[Optional[float]]:
    """
    Накопленные произведения пошаговых скоростей. +inf поглощает,
    после Undefined все дальнейшие значения пропускаются (None).
    """
    bounds = []
    acc = 1.0
    skipped = False
    for rate in step_rates:
        if skipped or rate.is_undefined:
            skipped = True
            bounds.append(None)
            continue
        if math.isinf(acc) or rate.is_infinite:
            acc = math.inf
        else:
            acc *= rate.value
        bounds.append(acc)
    return bounds


def _bound_holds(n_step: FuzzyRate, bound: Optional[float]) -> Optional[bool]:
    if bound is None or n_step.is_undefined:
        return None
    if math.isinf(bound):
        return True
    if n_step.is_infinite:
        return False
    return n_step.value <= bound * (1 + BOUND_SLACK)


def orbit(B: Operator, y: Point, n: int, fam: MembershipFamily, cfg: SearchConfig = DEFAULT_SEARCH,
          method: str = "auto") -> OrbitReport:
    """Итерирует B из y на n шагов и проверяет оценку ||B^k||_y <= произведения."""
    if n < 1:
        raise DynamicsError(f"Число шагов орбиты должно быть >= 1, получено {n}")
    points = orbit_points(B, y, n)

    step_rates = [compute_rate(fam, B, points[k - 1], cfg, method) for k in range(1, n + 1)]
    n_step_rates = [compute_rate(fam, power(B, k), points[0], cfg, method) for k in range(1, n + 1)]
    bounds = product_bound(step_rates)
    satisfied = [_bound_holds(r, b) for r, b in zip(n_step_rates, bounds)]

    for k, (rate, ok) in enumerate(zip(step_rates, satisfied), start=1):
        if rate.is_undefined:
            logger.warning(f"Шаг {k}: скорость не определена ({rate.reason}), проверка оценки пропущена")
        elif ok is False:
            logger.warning(f"Шаг {k}: ||B^k||_y превышает произведение пошаговых скоростей")
    logger.info(f"Орбита из {len(points)} точек построена, {sum(1 for s in satisfied if s)} оценок выполнено")

    return OrbitReport(points=points, step_rates=step_rates, n_step_rates=n_step_rates,
                       product_bounds=bounds, bound_satisfied=satisfied)


def check_uniform_lower_bound(report: OrbitReport, delta: float, N: int) -> bool:
    """||B^n||_y >= delta при всех n >= N (+inf считается выполнением)."""
    if not 0 < delta <= 1:
        raise DynamicsError(f"delta должно лежать в (0, 1], получено {delta}")
    if not 1 <= N <= report.steps:
        raise DynamicsError(f"N должно лежать в [1, {report.steps}], получено {N}")
    for rate in report.n_step_rates[N - 1:]:
        if rate.is_undefined:
            return False
        if rate.is_finite and rate.value < delta:
            return False
    return True


def step_rate_convergence(report: OrbitReport, eps: float) -> Optional[int]:
    """
    Первый шаг k, начиная с которого все пошаговые скорости конечны и
    лежат в [1 - eps, 1 + eps]; None, если такого шага нет.
    """
    if not eps > 0:
        raise DynamicsError(f"eps должно быть положительным, получено {eps}")
    first = None
    for k in range(report.steps, 0, -1):
        rate = report.step_rates[k - 1]
        if not (rate.is_finite and abs(rate.value - 1.0) <= eps):
            break
        first = k
    return first


def _residual(sample) -> Optional[float]:
    if sample.excluded or math.isinf(sample.ratio):
        return None
    return abs(sample.ratio - 1.0)


def _conic_quasi_fixed(fam: ConicFamily, p: Point, q: Point) -> Optional[float]:
    """
    Параметр mu, при котором F_mu(q) = F_mu(p), из равенства
    (la - mu)^2 = (lb - mu)^2: середина между la и lb.
    """
    la, lb = fam.lambda_of(p), fam.lambda_of(q)
    if la is None or lb is None:
        return None
    if la is ANY_LAMBDA and lb is ANY_LAMBDA:
        return 1.0
    if la is ANY_LAMBDA:
        return lb
    if lb is ANY_LAMBDA:
        return la
    return la if la == lb else (la + lb) / 2.0


def _numeric_quasi_fixed(fam: ParametricFamily, p: Point, q: Point,
                         cfg: SearchConfig) -> List[float]:
    """Кандидаты: корни log-отношения на сетке (brentq) и минимум |ratio - 1|."""

    def log_ratio(t: float) -> Optional[float]:
        lr = _sample(t, fam.member(t), p, q).log_ratio
        return None if lr is None or math.isinf(lr) else lr

    def polish(t0: float, l0: Optional[float], t1: float, l1: Optional[float]) -> Optional[float]:
        if l0 is None or l1 is None:
            return None
        if l0 == 0.0:
            return t0
        if l0 * l1 < 0:
            sol = root_scalar(log_ratio, bracket=[t0, t1], method="brentq", xtol=1e-15)
            if sol.converged:
                return sol.root
        return None

    window = initial_window(fam, cfg)
    grid = [(t, log_ratio(t)) for t, _ in family_members(fam, window, cfg.resolution)]
    candidates = []
    for (t0, l0), (t1, l1) in zip(grid, grid[1:]):
        root = polish(t0, l0, t1, l1)
        if root is not None:
            candidates.append(root)

    def score(t: float) -> Optional[float]:
        lr = log_ratio(t)
        return None if lr is None else -abs(math.expm1(lr))

    best = scan_and_refine(fam, score, window, cfg)
    if best.parameter is not None:
        # корень вне ячеек сетки: уточняем в окрестности шага сетки вокруг лучшей точки
        width = (window[1] - window[0]) / cfg.resolution
        a, b = max(window[0], best.parameter - width), min(window[1], best.parameter + width)
        root = polish(a, log_ratio(a), b, log_ratio(b)) if fam.contains(a) and fam.contains(b) else None
        candidates.append(best.parameter)
        if root is not None:
            candidates.append(root)
    return candidates


def quasi_fixed_search(B: Operator, y: Point, fam: MembershipFamily, k: int, eps: float,
                       cfg: SearchConfig = DEFAULT_SEARCH, method: str = "auto") -> Optional[QuasiFixedFinding]:
    """
    Ищет F0 в семействе с F0(B^k(y)) = F0(B^(k-1)(y)) с точностью eps по |ratio - 1|.
    Из подходящих выбирается наименьшая невязка, затем наименьший индекс/параметр.
    """
    if k < 1:
        raise DynamicsError(f"Номер шага должен быть >= 1, получено {k}")
    if not eps > 0:
        raise DynamicsError(f"eps должно быть положительным, получено {eps}")
    p = power(B, k - 1).apply(y)
    q = B.apply(p)

    exact_ids = set()
    if isinstance(fam, FiniteFamily):
        scored = [(_residual(_sample(i, f, p, q)), i) for i, f in enumerate(fam.members)]
        name = "index"
    elif isinstance(fam, ParametricFamily):
        name = fam.parameter_name
        if isinstance(fam, ConicFamily) and cfg.use_analytic and method != "grid":
            mu = _conic_quasi_fixed(fam, p, q)
            candidates = [] if mu is None or not fam.contains(mu) else [mu]
            exact_ids = set(candidates)
        else:
            candidates = _numeric_quasi_fixed(fam, p, q, cfg)
        scored = [(_residual(_sample(t, fam.member(t), p, q)), t) for t in candidates]
    else:
        raise DynamicsError(f"Неизвестный тип семейства: {type(fam).__name__}")

    scored = [(res, mid) for res, mid in scored if res is not None]
    if not scored:
        logger.info(f"Шаг {k}: нет членов семейства с определенным отношением")
        return None
    residual, member_id = min(scored)
    if residual > eps:
        logger.info(f"Шаг {k}: лучшая невязка {residual:.3g} больше eps={eps:g}")
        return None
    return QuasiFixedFinding(step=k, witness=Witness(name=name, value=member_id),
                             ratio_residual=residual, exact=residual == 0.0 or member_id in exact_ids)


def certify_fixed_point(B: Operator, y: Point, n: int, finding: QuasiFixedFinding,
                        fam: MembershipFamily, tol: Optional[float] = None) -> FixedPointCertificate:
    """
    Проверяет, что B^(n-1)(y) - неподвижная точка B.

    Инъективность F0 только объявляется, поэтому кроме нее проверяется и
    прямая невязка |B(x) - x| в sup-норме. Сертификат - свидетельство, не доказательство.
    """
    tol = DEFAULT_SEARCH.fixed_point_tol if tol is None else tol
    candidate = power(B, n - 1).apply(y)
    image = B.apply(candidate)
    member = fam.member(finding.witness.value)
    injective = bool(member.injective)
    operator_residual = sup_distance(image, candidate)

    reasons = []
    if finding.step != n:
        reasons.append(f"находка относится к шагу {finding.step}, а не {n}")
    if not injective:
        reasons.append(f"функция {member.label} не объявлена инъективной")
    if finding.ratio_residual > tol:
        reasons.append(f"невязка отношения {finding.ratio_residual:.3g} больше {tol:g}")
    if operator_residual > tol:
        reasons.append(f"|B(x) - x| = {operator_residual:.3g} больше {tol:g}")

    certified = not reasons
    if certified:
        logger.info(f"Точка {candidate} подтверждена как неподвижная точка {B.label}")
    else:
        logger.info(f"Точка {candidate} не подтверждена: {'; '.join(reasons)}")
    return FixedPointCertificate(candidate=candidate, quasi_finding=finding, injective_declared=injective,
                                 operator_residual=operator_residual, certified=certified, reasons=reasons)


def find_quasi_fixed_points(B: Operator, y: Point, fam: MembershipFamily, steps: int, eps: float,
                            cfg: SearchConfig = DEFAULT_SEARCH, method: str = "auto") -> QuasiFixedScan:
    """Поиск квазинеподвижных точек на каждом шаге 1..steps и их сертификация."""
    if steps < 1:
        raise DynamicsError(f"Число шагов должно быть >= 1, получено {steps}")
    findings, certificates = [], []
    for k in range(1, steps + 1):
        finding = quasi_fixed_search(B, y, fam, k, eps, cfg, method)
        if finding is None:
            continue
        findings.append(finding)
        certificates.append(certify_fixed_point(B, y, k, finding, fam, cfg.fixed_point_tol))
    return QuasiFixedScan(findings=findings, certificates=certificates)
