# definitions.py - разбор описаний семейств и операторов (файлы JSON/YAML и короткая запись CLI)
import json
import logging
import math
import os
from typing import Annotated, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationError, model_validator

from errors import DefinitionError, FuzzRateError
from membership import (ConicFamily, ConicMembership, FiniteFamily, MembershipFamily, MembershipFunction,
                        Point, RadialMembership, TableMembership, as_point)
from operators import (IDENTITY, Affine, Composition, LinearMatrix, Operator, add, diag, power, projection,
                       rotation, scale, subtract, zero)
from rate_engine import ExtendedReal

logger = logging.getLogger(__name__)

DEFINITION_SUFFIXES = (".json", ".yaml", ".yml")


class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# --- Функции принадлежности ---

class ConicMemberSpec(_Spec):
    kind: Literal["conic"]
    mu: float
    r: float = 1.0
    injective: Optional[bool] = None

    def build(self) -> MembershipFunction:
        return ConicMembership(self.mu, self.r, injective=self.injective)


class TableEntry(_Spec):
    point: List[float]
    value: float


class TableMemberSpec(_Spec):
    kind: Literal["table"]
    entries: List[TableEntry]
    default: float = 0.0
    injective: Optional[bool] = None
    label: str = "table"

    def build(self) -> MembershipFunction:
        return TableMembership({tuple(e.point): e.value for e in self.entries}, label=self.label,
                               injective=self.injective, default=self.default)


class RadialMemberSpec(_Spec):
    kind: Literal["radial"]
    scale: float = 1.0

    def build(self) -> MembershipFunction:
        return RadialMembership(self.scale)


MemberSpec = Annotated[Union[ConicMemberSpec, TableMemberSpec, RadialMemberSpec], Field(discriminator="kind")]


# --- Семейства ---

class ConicFamilySpec(_Spec):
    """Область mu задается парой mu_domain или полями low/high."""
    kind: Literal["conic_family"]
    r: float = 1.0
    mu_domain: Optional[Tuple[ExtendedReal, ExtendedReal]] = None
    low: float = 0.0
    high: ExtendedReal = math.inf
    open_low: bool = True
    open_high: bool = True

    @model_validator(mode="after")
    def _one_domain(self) -> "ConicFamilySpec":
        if self.mu_domain is not None and {"low", "high"} & self.model_fields_set:
            raise ValueError("mu_domain нельзя задавать вместе с low/high")
        return self

    def build(self) -> MembershipFamily:
        low, high = self.mu_domain if self.mu_domain is not None else (self.low, self.high)
        return ConicFamily(self.r, low, high, open_low=self.open_low, open_high=self.open_high)


class ConicMemberFamilySpec(ConicMemberSpec):
    """Один член F_c(mu, r) как семейство из одной функции."""

    def build(self) -> MembershipFamily:
        return FiniteFamily([super().build()], label=f"conic(r={self.r:g})")


class FiniteFamilySpec(_Spec):
    """Список функций members или одна таблица entries."""
    kind: Literal["finite"]
    members: Optional[List[MemberSpec]] = Field(None, min_length=1)
    entries: Optional[List[TableEntry]] = None
    default: float = 0.0
    injective: Optional[bool] = None
    label: str = "finite"

    @model_validator(mode="after")
    def _members_or_entries(self) -> "FiniteFamilySpec":
        if (self.members is None) == (self.entries is None):
            raise ValueError("ожидается ровно одно из полей members, entries")
        if self.members is not None and {"default", "injective"} & self.model_fields_set:
            raise ValueError("default и injective задаются у членов семейства")
        return self

    def build(self) -> MembershipFamily:
        if self.entries is not None:
            table = TableMembership({tuple(e.point): e.value for e in self.entries}, label=self.label,
                                    injective=self.injective, default=self.default)
            return FiniteFamily([table], label=self.label)
        return FiniteFamily([m.build() for m in self.members], label=self.label)


FamilySpec = Annotated[Union[ConicFamilySpec, ConicMemberFamilySpec, FiniteFamilySpec], Field(discriminator="kind")]
FAMILY_KINDS = ("conic_family", "conic", "finite")


# --- Операторы ---

class MatrixSpec(_Spec):
    kind: Literal["matrix"]
    matrix: List[List[float]] = Field(validation_alias=AliasChoices("rows", "matrix"))
    label: Optional[str] = None

    def build(self) -> Operator:
        return LinearMatrix(self.matrix, label=self.label)


class AffineSpec(_Spec):
    kind: Literal["affine"]
    matrix: List[List[float]] = Field(validation_alias=AliasChoices("rows", "matrix"))
    offset: List[float]

    def build(self) -> Operator:
        return Affine(self.matrix, self.offset)


class DiagSpec(_Spec):
    kind: Literal["diag"]
    entries: List[float] = Field(min_length=1)

    def build(self) -> Operator:
        return diag(*self.entries)


class IdentitySpec(_Spec):
    kind: Literal["identity"]

    def build(self) -> Operator:
        return IDENTITY


class ZeroSpec(_Spec):
    kind: Literal["zero"]
    dimension: int = Field(2, ge=1)

    def build(self) -> Operator:
        return zero(self.dimension)


class RotationSpec(_Spec):
    kind: Literal["rotation"]
    theta: float

    def build(self) -> Operator:
        return rotation(self.theta)


class ProjectionSpec(_Spec):
    kind: Literal["projection"]
    axis: int
    dimension: int = 2

    def build(self) -> Operator:
        return projection(self.axis, self.dimension)


class PowerSpec(_Spec):
    kind: Literal["power"]
    base: "OperatorSpec"
    n: int = Field(ge=0)

    def build(self) -> Operator:
        return power(self.base.build(), self.n)


class ComposeSpec(_Spec):
    """Композиция ops[0] ops[1] ... - последний оператор применяется первым."""
    kind: Literal["compose"]
    ops: List["OperatorSpec"] = Field(min_length=1)

    def build(self) -> Operator:
        return Composition([op.build() for op in self.ops])


class ScaleSpec(_Spec):
    kind: Literal["scale"]
    base: "OperatorSpec"
    a: float

    def build(self) -> Operator:
        return scale(self.base.build(), self.a)


class SumSpec(_Spec):
    kind: Literal["add", "subtract"]
    first: "OperatorSpec"
    second: "OperatorSpec"

    def build(self) -> Operator:
        combine = add if self.kind == "add" else subtract
        return combine(self.first.build(), self.second.build())


OperatorSpec = Annotated[
    Union[MatrixSpec, AffineSpec, DiagSpec, IdentitySpec, ZeroSpec, RotationSpec, ProjectionSpec,
          PowerSpec, ComposeSpec, ScaleSpec, SumSpec],
    Field(discriminator="kind"),
]

for _model in (PowerSpec, ComposeSpec, ScaleSpec, SumSpec):
    _model.model_rebuild()


class DefinitionFile(_Spec):
    """Файл описания: любое из полей может отсутствовать."""
    family: Optional[FamilySpec] = None
    operator: Optional[OperatorSpec] = None
    point: Optional[List[float]] = None


def _field_of(e: ValidationError, prefix: str) -> str:
    errors = e.errors()
    if not errors:
        return prefix
    loc = ".".join(str(part) for part in errors[0]["loc"])
    return f"{prefix}.{loc}" if loc else prefix


def parse_definition(data: dict, source: str = "<data>") -> DefinitionFile:
    """
    Описание с полями family/operator/point либо одиночный объект с полем kind:
    семейство (conic_family, conic, finite) или оператор.
    """
    if not isinstance(data, dict):
        raise DefinitionError(f"{source}: ожидается объект с полями family/operator/point или kind", field=source)
    if "kind" in data:
        data = {"family" if data["kind"] in FAMILY_KINDS else "operator": data}
    try:
        return DefinitionFile.model_validate(data)
    except ValidationError as e:
        field = _field_of(e, source)
        raise DefinitionError(f"Некорректное описание в {field}: {e.errors()[0]['msg']}", field=field)


def load_definition(path: str) -> DefinitionFile:
    """Загружает описание из JSON или YAML файла."""
    if not os.path.exists(path):
        raise DefinitionError(f"Файл описания {path} не найден", field=path)
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise DefinitionError(f"Не удалось разобрать {path}: {e}", field=path)
    logger.info(f"Загружено описание из {path}")
    return parse_definition(data, source=path)


def _is_definition_path(text: str) -> bool:
    return text.lower().endswith(DEFINITION_SUFFIXES)


def _floats(text: str, field: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise DefinitionError(f"Ожидается список чисел через запятую в {field}, получено {text!r}", field=field)


def parse_window(text: str) -> Tuple[float, float]:
    """Окно поиска параметра в виде "low,high"; порядок границ проверяет SearchConfig."""
    values = _floats(text, "window")
    if len(values) != 2:
        raise DefinitionError(f"Окно задается двумя числами low,high, получено {text!r}", field="window")
    return values[0], values[1]


def _key_values(text: str, field: str) -> dict:
    values = {}
    for part in text.split(","):
        key, sep, raw = part.partition("=")
        if not sep:
            raise DefinitionError(f"Ожидается ключ=значение в {field}, получено {part!r}", field=field)
        try:
            values[key.strip()] = float(raw)
        except ValueError:
            raise DefinitionError(f"Значение {key.strip()} в {field} не является числом: {raw!r}", field=field)
    return values


def _built(build, field: str):
    try:
        return build()
    except FuzzRateError as e:
        raise DefinitionError(f"Некорректное значение {field}: {e}", field=field)


def parse_family(text: str) -> MembershipFamily:
    """
    Семейство из короткой записи или файла описания:
    conic:r=<v> - полное коническое семейство, conic:r=<v>,mu=<v> - один его член.
    """
    if _is_definition_path(text):
        spec = load_definition(text).family
        if spec is None:
            raise DefinitionError(f"В {text} нет поля family", field="family")
        return _built(spec.build, "family")

    name, _, args = text.partition(":")
    if name != "conic":
        raise DefinitionError(f"Неизвестное семейство {text!r}: ожидается conic:r=<v>[,mu=<v>] или файл описания",
                              field="family")
    values = _key_values(args, "family") if args else {}
    unknown = set(values) - {"r", "mu"}
    if unknown:
        raise DefinitionError(f"Неизвестные параметры семейства: {sorted(unknown)}", field="family")
    r = values.get("r", 1.0)
    if "mu" in values:
        return _built(lambda: FiniteFamily([ConicMembership(values["mu"], r)], label=f"conic(r={r:g})"), "family")
    return _built(lambda: ConicFamily(r), "family")


def parse_operator(text: str) -> Operator:
    """Оператор из короткой записи (diag:a,b | identity | rot:<рад> | proj:<ось>) или файла описания."""
    if _is_definition_path(text):
        spec = load_definition(text).operator
        if spec is None:
            raise DefinitionError(f"В {text} нет поля operator", field="op")
        return _built(spec.build, "op")

    name, _, args = text.partition(":")
    if name == "identity" and not args:
        return IDENTITY
    if name == "diag" and args:
        entries = _floats(args, "op")
        return _built(lambda: diag(*entries), "op")
    if name == "rot" and args:
        values = _floats(args, "op")
        if len(values) != 1:
            raise DefinitionError(f"Поворот задается одним углом, получено {args!r}", field="op")
        return _built(lambda: rotation(values[0]), "op")
    if name == "proj" and args:
        try:
            axis = int(args)
        except ValueError:
            raise DefinitionError(f"Ось проекции должна быть целым числом, получено {args!r}", field="op")
        return _built(lambda: projection(axis), "op")
    raise DefinitionError(f"Неизвестный оператор {text!r}: ожидается diag:a,b, identity, rot:<рад>, proj:<ось> "
                          f"или файл описания", field="op")


def parse_point(text: str) -> Point:
    """Точка в виде "x,y" или файл описания с полем point."""
    if _is_definition_path(text):
        coords = load_definition(text).point
        if coords is None:
            raise DefinitionError(f"В {text} нет поля point", field="point")
        return _built(lambda: as_point(coords), "point")
    return _built(lambda: as_point(_floats(text, "point")), "point")
