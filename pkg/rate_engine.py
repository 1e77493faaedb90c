# rate_engine.py - вычисление нечеткой скорости оператора ||B||_y
"""
Нечеткая скорость оператора B в точке y на семействе F(X):

    ||B||_y = sup_{F in F(X)} F(B(y)) / F(y)

Конечные семейства перебираются точно, для конического семейства есть
замкнутые формулы, для остальных параметрических семейств используется
сеточный поиск с уточнением и расширением окна к открытым концам области.
Отношения сравниваются в логарифмах, чтобы не терять значения при
переполнении/исчезновении экспонент.
"""

import logging
import math
from enum import Enum
from typing import Annotated, Any, Callable, Dict, List, Literal, NamedTuple, Optional, Tuple, Union

from pydantic import (BaseModel, BeforeValidator, ConfigDict, PlainSerializer,
                      model_serializer, model_validator)

from errors import RateError
from membership import (ANY_LAMBDA, ConicFamily, FiniteFamily, MemberId, MembershipFamily,
                        MembershipFunction, ParametricFamily, Point, as_point, family_members)
from operators import Operator
from settings import DEFAULT_SEARCH, SearchConfig

logger = logging.getLogger(__name__)


def _parse_extended(v: Any) -> Any:
    if isinstance(v, str):
        text = v.strip().lower()
        if text in ("inf", "+inf", "infinity", "+infinity"):
            return math.inf
        if text in ("-inf", "-infinity"):
            return -math.inf
    return v


def _dump_extended(v: Optional[float]) -> Any:
    if v is not None and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


# Расширенное вещественное число: в JSON бесконечность записывается строкой "inf"
ExtendedReal = Annotated[float, BeforeValidator(_parse_extended), PlainSerializer(_dump_extended, when_used="json")]


def safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


class Outcome(str, Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    UNDEFINED = "undefined"


class RatioSample(BaseModel):
    """
    Отношение F(B(y)) / F(y) для одного члена семейства.
    ratio = None означает EXCLUDED (0/0 не участвует в супремуме).
    """
    model_config = ConfigDict(frozen=True)

    member_id: Union[int, float]
    numerator: float
    denominator: float
    ratio: Optional[ExtendedReal] = None
    log_ratio: Optional[ExtendedReal] = None

    @property
    def excluded(self) -> bool:
        return self.ratio is None


class Witness(BaseModel):
    """Свидетель супремума: индекс члена или значение параметра ({"mu": 0.001})."""
    model_config = ConfigDict(frozen=True)

    name: str
    value: Union[int, float]

    @model_validator(mode="before")
    @classmethod
    def _from_mapping(cls, data: Any) -> Any:
        if isinstance(data, dict) and "name" not in data and len(data) == 1:
            (name, value), = data.items()
            return {"name": name, "value": value}
        return data

    @model_serializer
    def _to_mapping(self) -> Dict[str, Any]:
        return {self.name: self.value}


class Probe(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameter: Union[int, float]
    ratio: ExtendedReal
    log_ratio: ExtendedReal


class DivergenceCertificate(BaseModel):
    """
    Конечное свидетельство того, что супремум равен +inf.
    growth: не менее трех проб с ростом не меньше growth_factor между соседними;
    zero_denominator: одна проба с F(y) = 0 и F(B(y)) > 0.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["growth", "zero_denominator"]
    probes: List[Probe]
    growth_factor: ExtendedReal

    @model_validator(mode="before")
    @classmethod
    def _from_list(cls, data: Any) -> Any:
        # В JSON сертификат - список проб, вид и рост восстанавливаются по ним
        if not isinstance(data, list):
            return data
        probes = [Probe.model_validate(p) for p in data]
        if len(probes) == 1 and probes[0].log_ratio == math.inf:
            return {"kind": "zero_denominator", "probes": probes, "growth_factor": math.inf}
        if len(probes) < 3:
            raise ValueError(f"сертификат роста требует не менее трех проб, получено {len(probes)}")
        diffs = [b.log_ratio - a.log_ratio for a, b in zip(probes, probes[1:])]
        return {"kind": "growth", "probes": probes, "growth_factor": safe_exp(min(diffs))}

    @model_serializer(mode="wrap", when_used="json")
    def _to_list(self, handler) -> List[Dict[str, Any]]:
        return handler(self)["probes"]


class FuzzyRate(BaseModel):
    model_config = ConfigDict(frozen=True)

    outcome: Outcome
    value: Optional[ExtendedReal] = None
    log_value: Optional[ExtendedReal] = None
    witness: Optional[Witness] = None
    attained: bool = False
    certificate: Optional[DivergenceCertificate] = None
    reason: Optional[str] = None
    method: str = "enum"

    @classmethod
    def finite(cls, value: float, witness: Witness, attained: bool, method: str,
               log_value: Optional[float] = None) -> "FuzzyRate":
        if log_value is None:
            log_value = math.log(value) if value > 0 else -math.inf
        return cls(outcome=Outcome.FINITE, value=value, log_value=log_value,
                   witness=witness, attained=attained, method=method)

    @classmethod
    def infinite(cls, certificate: DivergenceCertificate, method: str) -> "FuzzyRate":
        return cls(outcome=Outcome.INFINITE, value=math.inf, log_value=math.inf,
                   certificate=certificate, method=method)

    @classmethod
    def undefined(cls, reason: str, method: str, best: Optional[Tuple[Witness, float]] = None) -> "FuzzyRate":
        if best is None:
            return cls(outcome=Outcome.UNDEFINED, reason=reason, method=method)
        witness, log_value = best
        return cls(outcome=Outcome.UNDEFINED, reason=reason, method=method, witness=witness,
                   value=safe_exp(log_value), log_value=log_value)

    @property
    def is_finite(self) -> bool:
        return self.outcome == Outcome.FINITE

    @property
    def is_infinite(self) -> bool:
        return self.outcome == Outcome.INFINITE

    @property
    def is_undefined(self) -> bool:
        return self.outcome == Outcome.UNDEFINED

    def extended(self) -> Optional[float]:
        """Значение как расширенное вещественное число (None для Undefined)."""
        if self.is_undefined:
            return None
        return math.inf if self.is_infinite else self.value


def _sample(member_id: MemberId, f: MembershipFunction, y: Point, by: Point) -> RatioSample:
    if getattr(f, "log_native", False):
        log_num, log_den = f.log_value(by), f.log_value(y)
        num, den = safe_exp(log_num), safe_exp(log_den)
    else:
        num, den = f.value(by), f.value(y)
        log_num = math.log(num) if num > 0 else -math.inf
        log_den = math.log(den) if den > 0 else -math.inf

    if log_den == -math.inf:
        if log_num == -math.inf:
            return RatioSample(member_id=member_id, numerator=num, denominator=den)
        return RatioSample(member_id=member_id, numerator=num, denominator=den,
                           ratio=math.inf, log_ratio=math.inf)

    log_ratio = log_num - log_den
    if num > 0 and den > 0:
        value = num / den
    else:
        value = safe_exp(log_ratio)
    return RatioSample(member_id=member_id, numerator=num, denominator=den,
                       ratio=value, log_ratio=log_ratio)


def ratio(f: MembershipFunction, B: Operator, y: Point, member_id: MemberId = 0) -> RatioSample:
    """Отношение F(B(y)) / F(y) с соглашениями для нулевого знаменателя."""
    y = as_point(y)
    return _sample(member_id, f, y, B.apply(y))


def _zero_denominator_certificate(parameter: MemberId) -> DivergenceCertificate:
    probe = Probe(parameter=parameter, ratio=math.inf, log_ratio=math.inf)
    return DivergenceCertificate(kind="zero_denominator", probes=[probe], growth_factor=math.inf)


def rate_finite(fam: FiniteFamily, B: Operator, y: Point) -> FuzzyRate:
    """
    Точный перебор конечного семейства. Свидетель - наименьший индекс
    среди максимизаторов.
    """
    if not isinstance(fam, FiniteFamily):
        raise RateError(f"rate_finite требует конечное семейство, получено {type(fam).__name__}")
    y = as_point(y)
    by = B.apply(y)
    samples = [_sample(i, f, y, by) for i, f in enumerate(fam.members)]
    return reduce_samples(samples)


def reduce_samples(samples: List[RatioSample]) -> FuzzyRate:
    best = None
    for s in samples:
        if s.excluded:
            continue
        if math.isinf(s.ratio):
            logger.debug(f"Член {s.member_id}: F(y) = 0 при F(B(y)) = {s.numerator}, скорость +inf")
            return FuzzyRate.infinite(_zero_denominator_certificate(s.member_id), method="enum")
        if best is None or s.ratio > best.ratio:
            best = s
    if best is None:
        return FuzzyRate.undefined("all ratios excluded", method="enum")
    return FuzzyRate.finite(best.ratio, Witness(name="index", value=best.member_id),
                            attained=True, method="enum", log_value=best.log_ratio)


def _growth_certificate(log_ratio: Callable[[float], float], params: List[float]) -> Optional[DivergenceCertificate]:
    logs = [log_ratio(t) for t in params]
    diffs = [b - a for a, b in zip(logs, logs[1:])]
    if len(params) < 3 or min(diffs) <= 0:
        return None
    probes = [Probe(parameter=t, ratio=safe_exp(lr), log_ratio=lr) for t, lr in zip(params, logs)]
    return DivergenceCertificate(kind="growth", probes=probes, growth_factor=safe_exp(min(diffs)))


def rate_conic_closed_form(b: float, r: float, cfg: SearchConfig = DEFAULT_SEARCH) -> FuzzyRate:
    """
    Скорость diag(1, b) в точке (0, r) на семействе {F_c(mu, r) | mu > 0}:
    +inf при |b| < 1 и e^(1 - 1/b^4) при |b| >= 1 (супремум при mu -> 0+).
    """
    if b == 0:
        raise RateError("Оператор diag(1, b) определен только при b != 0")
    ConicFamily(r)  # проверка r > 0

    if abs(b) < 1:
        # log отношения: (1 - 1/b^4) + 2 mu (1/b^2 - 1), растет по mu
        slope = 2.0 * (1.0 / (b * b) - 1.0)
        const = 1.0 - 1.0 / (b * b) / (b * b)
        start = max(1.0, math.log(cfg.growth_factor) / slope)
        cert = _growth_certificate(lambda mu: const + slope * mu, [start, 10.0 * start, 100.0 * start])
        logger.info(f"Замкнутая форма: |b| = {abs(b):g} < 1, скорость +inf")
        return FuzzyRate.infinite(cert, method="closed")

    log_value = 1.0 - 1.0 / (b * b) / (b * b)
    return FuzzyRate.finite(math.exp(log_value), Witness(name="mu", value=cfg.window_low),
                            attained=False, method="closed", log_value=log_value)


def rate_conic_analytic(fam: ConicFamily, B: Operator, y: Point, cfg: SearchConfig = DEFAULT_SEARCH) -> FuzzyRate:
    """
    Точная скорость на полном коническом семействе для любых y и B(y).

    При конечных la = lambda(y), lb = lambda(B(y)) логарифм отношения равен
    (la - lb)(la + lb - 2 mu): при la > lb супремум e^(la^2 - lb^2) достигается
    в пределе mu -> 0+, при la < lb он бесконечен, при la = lb равен 1.
    """
    if not (isinstance(fam, ConicFamily) and fam.is_full_domain):
        raise RateError("Замкнутая форма применима только к коническому семейству с mu в (0, inf)")
    y = as_point(y)
    by = B.apply(y)
    la, lb = fam.lambda_of(y), fam.lambda_of(by)
    mu_name = fam.parameter_name

    if la is None:
        if lb is None:
            return FuzzyRate.undefined("all ratios excluded", method="closed")
        mu = 1.0 if lb is ANY_LAMBDA else lb
        return FuzzyRate.infinite(_zero_denominator_certificate(mu), method="closed")

    if la is ANY_LAMBDA:
        # F(y) = 1 при любом mu
        if lb is None:
            return FuzzyRate.finite(0.0, Witness(name=mu_name, value=1.0), attained=True, method="closed")
        mu = 1.0 if lb is ANY_LAMBDA else lb
        return FuzzyRate.finite(1.0, Witness(name=mu_name, value=mu), attained=True, method="closed")

    if lb is None:
        return FuzzyRate.finite(0.0, Witness(name=mu_name, value=la), attained=True, method="closed")

    if lb is ANY_LAMBDA:
        # отношение e^((la - mu)^2) растет при mu > la
        start = max(1.0, 2.0 * la)
        cert = _growth_certificate(lambda mu: (la - mu) * (la - mu), [start, 10.0 * start, 100.0 * start])
        return FuzzyRate.infinite(cert, method="closed")

    d = la - lb
    if d == 0:
        return FuzzyRate.finite(1.0, Witness(name=mu_name, value=la), attained=True,
                                method="closed", log_value=0.0)
    if d < 0:
        start = max(1.0, la + lb, math.log(cfg.growth_factor) / (-2.0 * d))
        cert = _growth_certificate(lambda mu: d * (la + lb - 2.0 * mu), [start, 10.0 * start, 100.0 * start])
        return FuzzyRate.infinite(cert, method="closed")
    log_value = d * (la + lb)
    if not math.isfinite(log_value):
        logger.warning(f"log скорости {la:.3g}^2 - {lb:.3g}^2 вне диапазона float")
        return FuzzyRate.undefined("overflow", method="closed")
    return FuzzyRate.finite(safe_exp(log_value), Witness(name=mu_name, value=cfg.window_low),
                            attained=False, method="closed", log_value=log_value)


class ScanResult(NamedTuple):
    parameter: Optional[float]
    score: Optional[float]


def initial_window(fam: ParametricFamily, cfg: SearchConfig) -> Tuple[float, float]:
    lo = max(cfg.window_low, fam.low)
    hi = min(cfg.window_high, fam.high)
    if lo < hi:
        return lo, hi
    if math.isfinite(fam.high):
        return fam.low, fam.high
    return fam.low, fam.low + (cfg.window_high - cfg.window_low)


def scan_and_refine(fam: ParametricFamily, score: Callable[[float], Optional[float]],
                    window: Tuple[float, float], cfg: SearchConfig) -> ScanResult:
    """
    Максимизирует score на окне: равномерная сетка из cfg.resolution ячеек,
    затем уточнение вокруг cfg.top_cells лучших ячеек повторным делением
    интервала пополам до ширины < cfg.param_tol.

    Унимодальность не предполагается; уточнение нескольких ячеек лишь снижает
    риск пропустить глобальный максимум. При равенстве выбирается меньший параметр.
    """
    lo, hi = window
    step = (hi - lo) / cfg.resolution
    grid = []
    for t, _ in family_members(fam, (lo, hi), cfg.resolution):
        s = score(t)
        if s is not None:
            grid.append((t, s))
    if not grid:
        return ScanResult(None, None)

    best_t, best_s = None, None

    def consider(t: float, s: Optional[float]):
        nonlocal best_t, best_s
        if s is None:
            return
        if best_s is None or s > best_s or (s == best_s and t < best_t):
            best_t, best_s = t, s

    for t, s in grid:
        consider(t, s)
    if best_s == math.inf:
        return ScanResult(best_t, best_s)

    top = sorted(grid, key=lambda ts: (-ts[1], ts[0]))[:cfg.top_cells]
    for t0, s0 in top:
        a, b = max(lo, t0 - step), min(hi, t0 + step)
        cell_t, cell_s = t0, s0
        while b - a > cfg.param_tol:
            for t in (a, a + (b - a) / 4, (a + b) / 2, b - (b - a) / 4, b):
                if not fam.contains(t):
                    continue
                s = score(t)
                if s is not None and (s > cell_s or (s == cell_s and t < cell_t)):
                    cell_t, cell_s = t, s
            half = (b - a) / 4
            a, b = max(a, cell_t - half), min(b, cell_t + half)
        consider(cell_t, cell_s)
    return ScanResult(best_t, best_s)


def _expand_edge(fam: ParametricFamily, edge: float, side: str, cfg: SearchConfig) -> Optional[float]:
    """Следующая граница окна при геометрическом расширении к концу области."""
    if side == "low":
        if edge <= fam.low:
            return None
        if not fam.open_low:
            return fam.low
        return fam.low + (edge - fam.low) / cfg.expansion_factor
    if edge >= fam.high:
        return None
    if math.isinf(fam.high):
        return edge * cfg.expansion_factor if edge > 0 else edge + cfg.expansion_factor
    if not fam.open_high:
        return fam.high
    return fam.high - (fam.high - edge) / cfg.expansion_factor


def rate_parametric(fam: ParametricFamily, B: Operator, y: Point, cfg: SearchConfig = DEFAULT_SEARCH,
                    window: Optional[Tuple[float, float]] = None) -> FuzzyRate:
    """
    Численный супремум по параметру семейства.

    Если лучший параметр упирается в край окна, а область продолжается дальше,
    окно геометрически расширяется к этому концу. Три пробы подряд с ростом
    не меньше cfg.growth_factor дают +inf с сертификатом, относительное
    изменение не больше cfg.limit_rtol - конечный предел (не достигаемый).
    """
    if not isinstance(fam, ParametricFamily):
        raise RateError(f"rate_parametric требует параметрическое семейство, получено {type(fam).__name__}")
    y = as_point(y)
    by = B.apply(y)
    name = fam.parameter_name

    def score(t: float) -> Optional[float]:
        return _sample(t, fam.member(t), y, by).log_ratio

    lo, hi = window if window is not None else initial_window(fam, cfg)
    best = scan_and_refine(fam, score, (lo, hi), cfg)
    if best.parameter is None:
        return FuzzyRate.undefined("all ratios excluded", method="grid")
    if best.score == math.inf:
        return FuzzyRate.infinite(_zero_denominator_certificate(best.parameter), method="grid")

    if best.parameter <= lo + cfg.param_tol:
        side, edge = "low", lo
    elif best.parameter >= hi - cfg.param_tol:
        side, edge = "high", hi
    else:
        side, edge = None, None

    probes = [(best.parameter, best.score)]
    converged = True
    if side is not None and _expand_edge(fam, edge, side, cfg) is not None:
        converged = False
        growth_log = math.log(cfg.growth_factor)
        streak = 1
        for _ in range(cfg.max_expansions):
            new_edge = _expand_edge(fam, edge, side, cfg)
            if new_edge is None:
                converged = True
                break
            band = (new_edge, edge) if side == "low" else (edge, new_edge)
            found = scan_and_refine(fam, score, band, cfg)
            if found.score == math.inf:
                return FuzzyRate.infinite(_zero_denominator_certificate(found.parameter), method="grid")
            prev_s = probes[-1][1]
            if found.parameter is None or found.score <= prev_s:
                converged = True
                break
            probes.append((found.parameter, found.score))
            logger.debug(f"Расширение к {side}: {name}={found.parameter:.6g}, log отношения {found.score:.9g}")
            # допуск в несколько ULP: рост ровно в growth_factor раз тоже засчитывается
            if found.score - prev_s >= growth_log * (1 - 1e-12):
                streak += 1
                if streak >= 3:
                    growing = probes[-streak:]
                    diffs = [b[1] - a[1] for a, b in zip(growing, growing[1:])]
                    cert = DivergenceCertificate(
                        kind="growth",
                        probes=[Probe(parameter=t, ratio=safe_exp(s), log_ratio=s) for t, s in growing],
                        growth_factor=safe_exp(min(diffs)),
                    )
                    logger.info(f"Супремум расходится: {len(growing)} проб с ростом >= {cfg.growth_factor:g}")
                    return FuzzyRate.infinite(cert, method="grid")
                edge = new_edge
                continue
            streak = 1
            if math.expm1(found.score - prev_s) <= cfg.limit_rtol:
                converged = True
                break
            edge = new_edge
        if not converged and _expand_edge(fam, edge, side, cfg) is None:
            converged = True

    best_t, best_s = max(probes, key=lambda ts: (ts[1], -ts[0]))
    witness = Witness(name=name, value=best_t)
    if not converged:
        logger.warning(f"Поиск супремума не сошелся за {cfg.max_expansions} расширений окна")
        return FuzzyRate.undefined("inconclusive", method="grid", best=(witness, best_s))
    return FuzzyRate.finite(safe_exp(best_s), witness, attained=False, method="grid", log_value=best_s)


class WitnessPair(NamedTuple):
    F: MembershipFunction
    G: MembershipFunction
    member_id: MemberId
    residual: float


def attained_witness(fam: MembershipFamily, B: Operator, y: Point, rate: FuzzyRate,
                     tol: Optional[float] = None) -> WitnessPair:
    """
    Извлекает F, G из семейства с ||B||_y F(y) = G(B(y)).

    Для конечного семейства F = G = максимизирующий член; для параметрического
    проверяется член со свидетельским параметром, и невязка должна быть не
    больше tol * ||B||_y.
    """
    if not rate.is_finite:
        raise RateError(f"Свидетели существуют только для конечной скорости, получено {rate.outcome.value}")
    tol = DEFAULT_SEARCH.witness_tol if tol is None else tol
    y = as_point(y)
    by = B.apply(y)

    if isinstance(fam, FiniteFamily) and (rate.witness is None or rate.witness.name != "index"):
        member_id = rate_finite(fam, B, y).witness.value
    elif rate.witness is None:
        raise RateError("У скорости нет свидетеля")
    else:
        member_id = rate.witness.value
    f = fam.member(member_id)

    residual = abs(rate.value * f.value(y) - f.value(by))
    if isinstance(fam, ParametricFamily) and not fam.is_closed_bounded:
        raise RateError(f"Супремум по открытому окну {fam.parameter_name} не обязан достигаться, "
                        f"невязка свидетеля {member_id}: {residual:.3g}", residual=residual)
    if residual > tol * rate.value:
        raise RateError(f"Невязка {residual:.3g} свидетеля {member_id} больше допуска {tol:g}", residual=residual)
    return WitnessPair(F=f, G=f, member_id=member_id, residual=residual)


METHODS = ("auto", "enum", "closed", "grid")


def compute_rate(fam: MembershipFamily, B: Operator, y: Point, cfg: SearchConfig = DEFAULT_SEARCH,
                 method: str = "auto", window: Optional[Tuple[float, float]] = None) -> FuzzyRate:
    """Выбор способа вычисления скорости по типу семейства и методу."""
    if method not in METHODS:
        raise RateError(f"Неизвестный метод {method!r}, ожидается один из {METHODS}")

    if isinstance(fam, FiniteFamily):
        if method == "closed":
            raise RateError("Замкнутая форма не определена для конечного семейства")
        return rate_finite(fam, B, y)

    if method == "enum":
        raise RateError("Перебор возможен только для конечного семейства")
    analytic_ok = isinstance(fam, ConicFamily) and fam.is_full_domain and window is None
    if method == "closed" or (method == "auto" and analytic_ok and cfg.use_analytic):
        if not analytic_ok:
            raise RateError("Замкнутая форма применима только к коническому семейству с mu в (0, inf)")
        return rate_conic_analytic(fam, B, y, cfg)
    return rate_parametric(fam, B, y, cfg, window=window)
