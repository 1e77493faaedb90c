"""Тесты разбора коротких записей и файлов описания."""

import json
import math

import pytest

from definitions import load_definition, parse_definition, parse_family, parse_operator, parse_point
from errors import DefinitionError
from membership import ConicFamily, FiniteFamily
from operators import IDENTITY, points_close

DEFINITION_YAML = """
family:
  kind: finite
  members:
    - kind: table
      entries:
        - {point: [3, 5], value: 0.2}
        - {point: [3, 0], value: 0.6}
      injective: true
    - kind: conic
      mu: 0.5
operator:
  kind: compose
  ops:
    - {kind: projection, axis: 0}
    - {kind: diag, entries: [1, 2]}
point: [3, 5]
"""


def test_conic_shorthand():
    fam = parse_family("conic:r=2")
    assert isinstance(fam, ConicFamily)
    assert fam.r == 2.0
    assert parse_family("conic").r == 1.0

    single = parse_family("conic:r=1,mu=0.5")
    assert isinstance(single, FiniteFamily)
    assert len(single) == 1
    assert single.member(0).value((0, 1)) == pytest.approx(math.exp(-0.25))


@pytest.mark.parametrize("text", ["ellipse:r=1", "conic:r=abc", "conic:r=-1", "conic:r=1,nu=2", "conic:r"])
def test_bad_family_names_field(text):
    with pytest.raises(DefinitionError) as info:
        parse_family(text)
    assert info.value.field == "family"


def test_operator_shorthand():
    assert parse_operator("diag:1,2").apply((1, 1)) == (1.0, 2.0)
    assert parse_operator("identity") is IDENTITY
    assert points_close(parse_operator("rot:1.5707963267948966").apply((1, 0)), (0, 1), tol=1e-15)
    assert parse_operator("proj:1").apply((3, 5)) == (0.0, 5.0)


@pytest.mark.parametrize("text", ["diag:1,x", "rot:1,2", "proj:x", "proj:5", "shear:1", "identity:2", "diag"])
def test_bad_operator_names_field(text):
    with pytest.raises(DefinitionError) as info:
        parse_operator(text)
    assert info.value.field == "op"


def test_point_shorthand():
    assert parse_point("0,1") == (0.0, 1.0)
    for text in ("a,b", "1,inf", ""):
        with pytest.raises(DefinitionError) as info:
            parse_point(text)
        assert info.value.field == "point"


def test_yaml_definition_file(tmp_path):
    path = tmp_path / "projection.yaml"
    path.write_text(DEFINITION_YAML, encoding="utf-8")

    fam = parse_family(str(path))
    assert len(fam) == 2
    assert fam.member(0).injective
    B = parse_operator(str(path))
    # diag применяется первым
    assert B.apply((3, 5)) == (3.0, 0.0)
    assert parse_point(str(path)) == (3.0, 5.0)


def test_json_definition_file(tmp_path):
    path = tmp_path / "rot.json"
    path.write_text(json.dumps({"operator": {"kind": "power", "base": {"kind": "rotation", "theta": math.pi / 2},
                                             "n": 2}}), encoding="utf-8")
    assert points_close(parse_operator(str(path)).apply((1, 0)), (-1, 0), tol=1e-12)
    with pytest.raises(DefinitionError) as info:
        parse_family(str(path))
    assert info.value.field == "family"
    with pytest.raises(DefinitionError) as info:
        parse_point(str(path))
    assert info.value.field == "point"


def test_definition_errors_name_field(tmp_path):
    with pytest.raises(DefinitionError) as info:
        parse_definition({"family": {"kind": "conic_family", "r": "wide"}})
    assert info.value.field.startswith("<data>.family")

    with pytest.raises(DefinitionError):
        parse_definition({"operator": {"kind": "diag", "entries": [1, 2], "extra": 1}})
    with pytest.raises(DefinitionError):
        parse_definition([1, 2])

    broken = tmp_path / "broken.yaml"
    broken.write_text("family: [unclosed", encoding="utf-8")
    with pytest.raises(DefinitionError) as info:
        load_definition(str(broken))
    assert info.value.field == str(broken)

    with pytest.raises(DefinitionError):
        load_definition(str(tmp_path / "missing.json"))


def test_invalid_member_values_surface_as_definition_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"family": {"kind": "finite", "members": [
        {"kind": "table", "entries": [{"point": [0, 1], "value": 1.5}]}]}}), encoding="utf-8")
    with pytest.raises(DefinitionError) as info:
        parse_family(str(path))
    assert info.value.field == "family"


def _write_json(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_bare_conic_family_with_mu_domain(tmp_path):
    """Одиночный объект семейства без обертки family, область через mu_domain."""
    path = _write_json(tmp_path, "conic.json",
                       {"kind": "conic_family", "r": 1.0, "mu_domain": [0.0, "inf"], "open_low": True})
    fam = parse_family(path)
    assert isinstance(fam, ConicFamily)
    assert fam.is_full_domain

    window = parse_definition({"kind": "conic_family", "r": 2.0, "mu_domain": [0.5, 2.0], "open_low": False,
                               "open_high": False}).family.build()
    assert (window.low, window.high) == (0.5, 2.0)
    assert window.is_closed_bounded


def test_bare_conic_member_is_single_family(tmp_path):
    fam = parse_family(_write_json(tmp_path, "member.json", {"kind": "conic", "mu": 1.0, "r": 1.0}))
    assert isinstance(fam, FiniteFamily)
    assert len(fam) == 1
    assert fam.member(0).value((0, 1)) == 1.0


def test_finite_family_from_entries(tmp_path):
    path = _write_json(tmp_path, "table.json", {"kind": "finite", "entries": [
        {"point": [0, 1], "value": 0.5}, {"point": [0, 2], "value": 0.25}], "injective": False})
    fam = parse_family(path)
    assert len(fam) == 1
    member = fam.member(0)
    assert member.value((0, 1)) == 0.5
    assert member.value((0, 2)) == 0.25
    assert member.value((5, 5)) == 0.0
    assert member.injective is False


def test_bare_matrix_rows_and_power(tmp_path):
    B = parse_operator(_write_json(tmp_path, "matrix.json", {"kind": "matrix", "rows": [[1, 0], [0, 2]]}))
    assert B.apply((1, 1)) == (1.0, 2.0)
    cube = parse_operator(_write_json(tmp_path, "power.json", {
        "kind": "power", "base": {"kind": "matrix", "rows": [[1, 0], [0, 2]]}, "n": 3}))
    assert cube.apply((1, 1)) == (1.0, 8.0)
    with pytest.raises(DefinitionError) as info:
        parse_family(_write_json(tmp_path, "op_only.json", {"kind": "identity"}))
    assert info.value.field == "family"


@pytest.mark.parametrize("data", [
    {"kind": "conic_family", "mu_domain": [0.5, 2.0], "low": 0.5},
    {"kind": "finite"},
    {"kind": "finite", "entries": [{"point": [0, 1], "value": 0.5}], "members": [{"kind": "radial"}]},
    {"kind": "finite", "members": [{"kind": "radial"}], "injective": True},
])
def test_ambiguous_family_definitions_rejected(data):
    with pytest.raises(DefinitionError) as info:
        parse_definition(data)
    assert info.value.field.startswith("<data>.family")
