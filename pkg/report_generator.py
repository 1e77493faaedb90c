"""
Генератор отчетов fuzzrate: текст через шаблоны Jinja2, таблицы через pandas.
Текстовые отчеты округляют числа до 6 значащих цифр, JSON и CSV выводятся
с полной точностью.
"""

import logging
import math
import os
import sys
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Optional, Sequence

import jinja2
import pandas as pd

logger = logging.getLogger(__name__)

# Директория шаблонов отчетов
TEMPLATE_DIR = os.environ.get("FUZZRATE_TEMPLATE_DIR",
                              os.path.join(os.path.dirname(os.path.abspath(__file__)), "templates"))

# Метки исхода в CSV
OUTCOME_TAGS = {"finite": "finite", "infinite": "inf", "undefined": "undefined"}
ORBIT_COLUMNS = ["k", "point", "step_rate", "n_step_rate", "product_bound", "bound_ok",
                 "step_outcome", "n_step_outcome", "bound_tag"]


def format_number(value: Optional[float]) -> str:
    """Число с 6 значащими цифрами, +inf и n/a для отсутствующих значений."""
    if value is None:
        return "n/a"
    if isinstance(value, str):
        return value
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return f"{value:.6g}"


def format_point(point: Iterable[float]) -> str:
    return "(" + ", ".join(format_number(c) for c in point) + ")"


@lru_cache(maxsize=1)
def get_environment() -> jinja2.Environment:
    template_loader = jinja2.FileSystemLoader(searchpath=TEMPLATE_DIR)
    env = jinja2.Environment(loader=template_loader, trim_blocks=True, lstrip_blocks=True,
                             keep_trailing_newline=True)
    env.filters["num"] = format_number
    env.filters["point"] = format_point
    return env


def render(template_name: str, **data: Any) -> str:
    try:
        template = get_environment().get_template(template_name)
    except jinja2.exceptions.TemplateNotFound:
        logger.error(f"Шаблон {template_name} не найден в {TEMPLATE_DIR}")
        raise
    return template.render(**data)


def render_rate(rate, family_label: str, operator_label: str, point: Sequence[float]) -> str:
    return render("rate.txt.j2", rate=rate, family=family_label, operator=operator_label, point=point)


def render_orbit(analysis) -> str:
    return render("orbit.txt.j2", analysis=analysis, report=analysis.report)


def render_quasi_fixed(scan, operator_label: str) -> str:
    return render("qfp.txt.j2", scan=scan, operator=operator_label)


def render_suite(checks, seed: int, trials: int) -> str:
    return render("verify.txt.j2", checks=checks, seed=seed, trials=trials,
                  passed=all(c.passed for c in checks))


def render_example(items, r: float, method: str) -> str:
    return render("example.txt.j2", items=items, r=r, method=method,
                  passed_count=sum(1 for i in items if i.passed))


def _cell(value: Optional[float]) -> Optional[float]:
    return None if value is None or math.isinf(value) else value


def _rate_cell(rate) -> Optional[float]:
    return rate.value if rate.is_finite else None


def rate_rows(variable: str, values: Sequence[float], rates: Sequence[Any]) -> pd.DataFrame:
    """Строки развертки: значение переменной, скорость/отношение, метка исхода (inf - пустая ячейка)."""
    rows: List[Dict[str, Any]] = []
    for x, rate in zip(values, rates):
        rows.append({
            variable: x,
            "value": _rate_cell(rate),
            "outcome": OUTCOME_TAGS[rate.outcome.value],
        })
    return pd.DataFrame(rows, columns=[variable, "value", "outcome"])


def ratio_rows(variable: str, values: Sequence[float], samples: Sequence[Any]) -> pd.DataFrame:
    rows = []
    for x, s in zip(values, samples):
        if s.excluded:
            tag, value = "undefined", None
        elif math.isinf(s.ratio):
            tag, value = "inf", None
        else:
            tag, value = "finite", s.ratio
        rows.append({variable: x, "value": value, "outcome": tag})
    return pd.DataFrame(rows, columns=[variable, "value", "outcome"])


def orbit_rows(report) -> pd.DataFrame:
    rows = []
    for k in range(1, report.steps + 1):
        step, n_step = report.step_rates[k - 1], report.n_step_rates[k - 1]
        bound = report.product_bounds[k - 1]
        rows.append({
            "k": k,
            "point": " ".join(repr(c) for c in report.points[k - 1]),
            "step_rate": _rate_cell(step),
            "n_step_rate": _rate_cell(n_step),
            "product_bound": _cell(bound),
            "bound_ok": report.bound_satisfied[k - 1],
            # метки исхода идут после основных столбцов
            "step_outcome": OUTCOME_TAGS[step.outcome.value],
            "n_step_outcome": OUTCOME_TAGS[n_step.outcome.value],
            "bound_tag": "inf" if bound is not None and math.isinf(bound) else "",
        })
    return pd.DataFrame(rows, columns=ORBIT_COLUMNS)


def write_csv(frame: pd.DataFrame, path: Optional[str] = None) -> None:
    frame.to_csv(path if path else sys.stdout, index=False)
    if path:
        logger.info(f"CSV ({len(frame)} строк) записан в {path}")


def write_text(text: str, path: Optional[str] = None) -> None:
    if not path:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text if text.endswith("\n") else text + "\n")
    logger.info(f"Отчет записан в {path}")
