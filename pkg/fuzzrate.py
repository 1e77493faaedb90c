# fuzzrate.py - командная строка: скорости, орбиты, квазинеподвижные точки, проверки, развертки
import argparse
import json
import logging
import math
import sys
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from definitions import parse_family, parse_operator, parse_point, parse_window
from dynamics import OrbitReport, check_uniform_lower_bound, find_quasi_fixed_points, orbit, step_rate_convergence
from errors import DefinitionError, FuzzRateError
from membership import ConicFamily, ConicMembership, conic_membership
from operators import diag
from property_suite import PROPERTY_IDS, run_suite, suite_report_json
from rate_engine import METHODS, ExtendedReal, compute_rate, rate_conic_closed_form, ratio
from report_generator import (orbit_rows, rate_rows, ratio_rows, render_example, render_orbit, render_quasi_fixed,
                              render_rate, render_suite, write_csv, write_text)
from settings import DEFAULT_SEARCH, LOG_FORMAT, LOG_LEVEL, SearchConfig

logger = logging.getLogger(__name__)

# Коды возврата
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_UNDEFINED = 2


class RunConfig(BaseModel):
    """Проверенные параметры запуска; все разбирается до начала вычислений."""
    model_config = ConfigDict(frozen=True)

    command: Literal["rate", "orbit", "qfp", "verify", "sweep", "example"]
    family: str = "conic:r=1"
    operator: Optional[str] = None
    point: Optional[str] = None
    method: Literal["auto", "enum", "closed", "grid"] = "auto"
    window: Optional[Tuple[float, float]] = None
    resolution: Optional[int] = Field(None, ge=2)
    steps: int = Field(1, ge=1)
    eps: Optional[float] = Field(None, gt=0)
    delta: Optional[float] = Field(None, gt=0, le=1)
    N: Optional[int] = Field(None, ge=1)
    seed: int = Field(42, ge=0, lt=2 ** 64)
    trials: int = Field(1000, ge=1)
    properties: List[str] = []
    var: Literal["b", "mu"] = "b"
    start: Optional[float] = None
    stop: Optional[float] = None
    samples: int = Field(20, ge=1)
    log_spacing: bool = False
    r: float = Field(1.0, gt=0)
    b: float = math.sqrt(2.0)
    output: Literal["human", "json", "csv"] = "human"
    out: Optional[str] = None
    verbose: bool = False

    @model_validator(mode="after")
    def _check_command(self):
        if self.command in ("rate", "orbit", "qfp"):
            if self.operator is None:
                raise ValueError("для этой команды нужен --op")
            if self.point is None:
                raise ValueError("для этой команды нужна --point")
        unknown = [p for p in self.properties if p not in PROPERTY_IDS]
        if unknown:
            raise ValueError(f"неизвестные свойства {unknown}, ожидаются {list(PROPERTY_IDS)}")
        if (self.delta is None) != (self.N is None):
            raise ValueError("--delta и --N задаются вместе")
        return self

    def search_config(self) -> SearchConfig:
        overrides = {}
        if self.window is not None:
            overrides.update(window_low=self.window[0], window_high=self.window[1])
        if self.resolution is not None:
            overrides["resolution"] = self.resolution
        if not overrides:
            return DEFAULT_SEARCH
        return SearchConfig(**{**DEFAULT_SEARCH.model_dump(), **overrides})


class OrbitAnalysis(BaseModel):
    """Орбита и результаты проверок сходимости и нижней границы."""
    model_config = ConfigDict(frozen=True)

    report: OrbitReport
    eps: Optional[float] = None
    convergence_step: Optional[int] = None
    delta: Optional[float] = None
    N: Optional[int] = None
    uniform_bound: Optional[bool] = None


class ExampleItem(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    expected: ExtendedReal
    observed: Optional[ExtendedReal] = None
    rel_tol: float
    passed: bool


class ExampleReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: float
    method: str
    items: List[ExampleItem]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)


class FuzzRateParser(argparse.ArgumentParser):
    """Ошибки разбора аргументов дают EXIT_FAILURE: код 2 занят неопределенной скоростью."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAILURE, f"{self.prog}: ошибка: {message}\n")


def _window_argument(text: str) -> Tuple[float, float]:
    try:
        return parse_window(text)
    except DefinitionError as e:
        raise argparse.ArgumentTypeError(str(e))


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="output", action="store_const", const="json", help="вывод в JSON")
    fmt.add_argument("--csv", dest="output", action="store_const", const="csv", help="вывод в CSV")
    fmt.add_argument("--emit", dest="output", choices=("human", "json", "csv"), help="формат вывода")
    common.add_argument("--out", help="путь к файлу вывода (по умолчанию stdout)")
    common.add_argument("--seed", type=int, default=42, help="seed генератора (u64)")
    common.add_argument("-v", "--verbose", action="store_true", help="подробный журнал в stderr")
    return common


def _target_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--family", default="conic:r=1", help="conic:r=<v>[,mu=<v>] или файл .json/.yaml")
    parser.add_argument("--op", dest="operator", help="diag:a,b | identity | rot:<рад> | proj:<ось> | файл")
    parser.add_argument("--point", help="точка y, например 0,1")
    parser.add_argument("--method", choices=METHODS, default="auto")
    parser.add_argument("--window", type=_window_argument, metavar="LOW,HIGH",
                        help="окно поиска параметра, например 0.5,2")
    parser.add_argument("--resolution", type=int, help="число ячеек сетки")


def build_parser() -> argparse.ArgumentParser:
    parser = FuzzRateParser(prog="fuzzrate", description="Нечеткая скорость операторов на семействах "
                                                          "функций принадлежности")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_arguments()

    p = sub.add_parser("rate", parents=[common], help="скорость ||B||_y")
    _target_arguments(p)

    p = sub.add_parser("orbit", parents=[common], help="орбита и оценка произведением")
    _target_arguments(p)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--eps", type=float, help="допуск сходимости шаговых скоростей к 1")
    p.add_argument("--delta", type=float, help="нижняя граница ||B^n||_y")
    p.add_argument("--N", type=int, help="номер шага, с которого проверяется нижняя граница")

    p = sub.add_parser("qfp", parents=[common], help="квазинеподвижные точки")
    _target_arguments(p)
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--eps", type=float, default=1e-9)

    p = sub.add_parser("verify", parents=[common], help="проверка свойств на случайных семействах")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--property", dest="properties", action="append", default=[], choices=PROPERTY_IDS)

    p = sub.add_parser("sweep", parents=[common], help="развертка скорости по b или отношения по mu")
    p.add_argument("--var", choices=("b", "mu"), default="b")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--log", dest="log_spacing", action="store_true", help="логарифмический шаг")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--b", type=float, default=math.sqrt(2.0), help="b для развертки по mu")
    p.add_argument("--method", choices=("closed", "grid", "auto"), default="closed")

    p = sub.add_parser("example", parents=[common], help="контрольные значения конического семейства")
    p.add_argument("--method", choices=("closed", "grid"), default="closed")
    p.add_argument("--r", type=float, default=1.0)
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    values = {k: v for k, v in vars(args).items() if v is not None}
    values.setdefault("output", "human")
    return RunConfig(**values)


def _validation_message(e: ValidationError) -> str:
    err = e.errors()[0]
    field = ".".join(str(part) for part in err["loc"]) or "config"
    return f"{field}: {err['msg']}"


def cmd_rate(cfg: RunConfig) -> int:
    fam = parse_family(cfg.family)
    B = parse_operator(cfg.operator)
    y = parse_point(cfg.point)
    search = cfg.search_config()

    rate = compute_rate(fam, B, y, search, cfg.method)
    logger.info(f"||{B.label}||_y в {y} на {fam.label}: {rate.outcome.value} ({rate.method})")
    if cfg.output == "json":
        write_text(rate.model_dump_json(indent=2), cfg.out)
    elif cfg.output == "csv":
        write_csv(rate_rows("point", [" ".join(repr(c) for c in y)], [rate]), cfg.out)
    else:
        write_text(render_rate(rate, fam.label, B.label, y), cfg.out)
    return EXIT_UNDEFINED if rate.is_undefined else EXIT_OK


def cmd_orbit(cfg: RunConfig) -> int:
    fam = parse_family(cfg.family)
    B = parse_operator(cfg.operator)
    y = parse_point(cfg.point)

    report = orbit(B, y, cfg.steps, fam, cfg.search_config(), cfg.method)
    analysis = OrbitAnalysis(
        report=report,
        eps=cfg.eps,
        convergence_step=step_rate_convergence(report, cfg.eps) if cfg.eps is not None else None,
        delta=cfg.delta,
        N=cfg.N,
        uniform_bound=check_uniform_lower_bound(report, cfg.delta, cfg.N) if cfg.delta is not None else None,
    )
    if cfg.output == "json":
        write_text(analysis.model_dump_json(indent=2), cfg.out)
    elif cfg.output == "csv":
        write_csv(orbit_rows(report), cfg.out)
    else:
        write_text(render_orbit(analysis), cfg.out)
    return EXIT_FAILURE if any(ok is False for ok in report.bound_satisfied) else EXIT_OK


def cmd_qfp(cfg: RunConfig) -> int:
    fam = parse_family(cfg.family)
    B = parse_operator(cfg.operator)
    y = parse_point(cfg.point)
    eps = cfg.eps if cfg.eps is not None else 1e-9

    scan = find_quasi_fixed_points(B, y, fam, cfg.steps, eps, cfg.search_config(), cfg.method)
    if cfg.output == "json":
        write_text(scan.model_dump_json(indent=2), cfg.out)
    else:
        write_text(render_quasi_fixed(scan, B.label), cfg.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    checks = run_suite(cfg.seed, cfg.trials, cfg.properties or None)
    if cfg.output == "json":
        write_text(suite_report_json(checks, cfg.seed, cfg.trials), cfg.out)
    else:
        write_text(render_suite(checks, cfg.seed, cfg.trials), cfg.out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILURE


def _sweep_values(cfg: RunConfig) -> np.ndarray:
    start, stop = cfg.start, cfg.stop
    if start is None or stop is None or not (math.isfinite(start) and math.isfinite(stop)):
        raise DefinitionError("Диапазон развертки должен быть конечным", field="range")
    if start <= 0 or start > stop or (start == stop and cfg.samples > 1):
        raise DefinitionError(f"Некорректный диапазон развертки [{start}, {stop}] для {cfg.samples} точек",
                              field="range")
    if cfg.log_spacing:
        return np.geomspace(start, stop, cfg.samples)
    return np.linspace(start, stop, cfg.samples)


def cmd_sweep(cfg: RunConfig) -> int:
    values = _sweep_values(cfg)
    y = (0.0, cfg.r)
    if cfg.var == "b":
        fam = ConicFamily(cfg.r)
        if cfg.method == "closed":
            rates = [rate_conic_closed_form(float(b), cfg.r) for b in values]
        else:
            rates = [compute_rate(fam, diag(1.0, float(b)), y, cfg.search_config(), cfg.method) for b in values]
        frame = rate_rows("b", values.tolist(), rates)
    else:
        B = diag(1.0, cfg.b)
        samples = [ratio(ConicMembership(float(mu), cfg.r), B, y, member_id=float(mu)) for mu in values]
        frame = ratio_rows("mu", values.tolist(), samples)
    logger.info(f"Развертка по {cfg.var}: {len(frame)} строк")

    if cfg.output == "json":
        rows = json.loads(frame.to_json(orient="records"))
        write_text(json.dumps(rows, indent=2), cfg.out)
    else:
        write_csv(frame, cfg.out)
    return EXIT_OK


def _relative_ok(observed: Optional[float], expected: float, rel_tol: float) -> bool:
    if observed is None:
        return False
    if math.isinf(expected) or expected == 0.0:
        return observed == expected
    return abs(observed - expected) <= rel_tol * abs(expected)


def example_items(r: float = 1.0, method: str = "closed") -> List[ExampleItem]:
    """Контрольные значения для кривых x^2 + mu y^2 = r^2 и оператора diag(1, b)."""
    circle = ConicMembership(1.0, r)
    fam = ConicFamily(r)
    y = (0.0, r)
    sqrt2 = math.sqrt(2.0)
    rate_tol = 1e-4 if method == "grid" else 1e-9

    def rate_of(b: float) -> Optional[float]:
        if method == "grid":
            return compute_rate(fam, diag(1.0, b), y, DEFAULT_SEARCH, "grid").extended()
        return rate_conic_closed_form(b, r).extended()

    checks: List[Tuple[str, Callable[[], Optional[float]], float, float]] = [
        ("F(0, r) = 1", lambda: conic_membership(circle, (0.0, r)), 1.0, 1e-9),
        ("F(r/sqrt2, r/sqrt6) = e^-4", lambda: conic_membership(circle, (r / sqrt2, r / math.sqrt(6.0))),
         math.exp(-4.0), 1e-9),
        ("F(r, r) = 0", lambda: conic_membership(circle, (r, r)), 0.0, 1e-9),
        ("F(B(y))/F(y) = e^-1/4 при b = sqrt2", lambda: ratio(circle, diag(1.0, sqrt2), y).ratio,
         math.exp(-0.25), 1e-9),
        ("||B||_y = e^3/4 при b = sqrt2", lambda: rate_of(sqrt2), math.exp(0.75), rate_tol),
        ("||B||_y = +inf при b = 1/2", lambda: rate_of(0.5), math.inf, rate_tol),
    ]
    items = []
    for name, compute, expected, tol in checks:
        observed = compute()
        items.append(ExampleItem(name=name, expected=expected, observed=observed, rel_tol=tol,
                                 passed=_relative_ok(observed, expected, tol)))
    return items


def cmd_example(cfg: RunConfig) -> int:
    report = ExampleReport(r=cfg.r, method=cfg.method, items=example_items(cfg.r, cfg.method))
    if cfg.output == "json":
        write_text(report.model_dump_json(indent=2), cfg.out)
    else:
        write_text(render_example(report.items, cfg.r, cfg.method), cfg.out)
    for item in report.items:
        if not item.passed:
            logger.warning(f"FAIL {item.name}: {item.observed} вместо {item.expected}")
    return EXIT_OK if report.passed else EXIT_FAILURE


HANDLERS: Dict[str, Callable[[RunConfig], int]] = {
    "rate": cmd_rate,
    "orbit": cmd_orbit,
    "qfp": cmd_qfp,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "example": cmd_example,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # --help завершается кодом 0, ошибки разбора - EXIT_FAILURE
        return e.code if isinstance(e.code, int) else EXIT_FAILURE
    logging.basicConfig(level=logging.INFO if args.verbose else LOG_LEVEL, format=LOG_FORMAT, stream=sys.stderr)

    try:
        cfg = make_config(args)
        cfg.search_config()
    except ValidationError as e:
        message = _validation_message(e)
        logger.error(f"Некорректные параметры: {message}")
        print(f"fuzzrate: ошибка в параметрах: {message}", file=sys.stderr)
        return EXIT_FAILURE

    try:
        return HANDLERS[cfg.command](cfg)
    except DefinitionError as e:
        logger.error(f"Ошибка разбора {e.field}: {e}")
        print(f"fuzzrate: ошибка в {e.field}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except FuzzRateError as e:
        logger.error(f"Ошибка вычисления: {e}")
        print(f"fuzzrate: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
