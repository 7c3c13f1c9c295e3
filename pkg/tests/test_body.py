import json

import numpy as np
import pytest

from matuniform.body import DEFAULT_DIMS, STAGES, build_model, ingest, parse_body
from matuniform.constitutive import SplitModel
from matuniform.errors import ParseError, SchemaError, TableShapeError
from matuniform.grid import BodyGrid


def _write(tmp_path, data, name="body.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
    return p


MINIMAL = {"model": {"id": "neo_hookean", "params": {"mu": 1.0, "lam": 1.0}}}


def test_minimal_file_gets_default_grid(tmp_path):
    desc = ingest(_write(tmp_path, MINIMAL))
    assert tuple(desc.grid.dims) == DEFAULT_DIMS == (21, 21, 21)
    assert desc.stages == STAGES
    assert desc.seed == 0
    for key in ("grid", "grid.box", "grid.dims", "analysis.stages", "analysis.seed", "output.formats"):
        assert key in desc.defaults_filled
    assert desc.model.param("mu", np.zeros(3)) == pytest.approx(1.0)


def test_small_dims_rejected(tmp_path):
    data = {**MINIMAL, "grid": {"dims": [3, 3, 3]}}
    with pytest.raises(SchemaError, match="dims"):
        ingest(_write(tmp_path, data))


def test_linear_field_evaluates():
    spec = {"id": "neo_hookean",
            "params": {"mu": {"linear": {"value": 1.0, "gradient": [0.5, 0.0, 0.0]}}, "lam": 1.0}}
    model = build_model(spec, BodyGrid.unit(5))
    assert model.param("mu", np.array([0.5, 0.0, 0.0])) == pytest.approx(1.25, abs=1e-15)


def test_parse_error_has_position(tmp_path):
    p = _write(tmp_path, '{\n  "model": {"id": "fluid",,}\n}')
    with pytest.raises(ParseError) as info:
        ingest(p)
    assert info.value.line == 2
    assert info.value.column is not None and info.value.column > 1
    assert "line 2" in str(info.value)


def test_non_utf8_is_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_bytes(b'{"name": "\xff"}')
    with pytest.raises(ParseError):
        ingest(p)


@pytest.mark.parametrize("data, match", [
    ({"model": {"id": "rubber"}}, "unknown model"),
    ({"model": {"id": "fluid", "params": {"mu": 1.0}}}, "unknown parameter"),
    ({"model": {"id": "fluid"}, "extra": 1}, "unknown keys"),
    ({"model": {"id": "fluid", "colour": 1}}, "unknown keys"),
    ({}, "model"),
    ({"model": {"id": "fluid"}, "analysis": {"stages": ["classify", "dance"]}}, "stages"),
    ({"model": {"id": "fluid"}, "analysis": {"tolerances": {"sym": -1}}}, "positive"),
    ({"model": {"id": "fluid"}, "analysis": {"tolerances": {"speed": 1}}}, "unknown tolerance"),
    ({"model": {"id": "fluid"}, "analysis": {"seed": -3}}, "seed"),
    ({"model": {"id": "fluid"}, "output": {"formats": ["pdf"]}}, "formats"),
    ({"model": {"id": "fluid"}, "schema_version": "2"}, "schema_version"),
    ({"model": {"id": "fluid"}, "grid": {"box": [[0, 1], [1, 0], [0, 1]]}}, "lo < hi"),
    ({"model": {"id": "neo_hookean", "params": {"mu": [1, 2]}}}, "shape"),
    ({"model": {"id": "neo_hookean", "params": {"mu": "soft"}}}, "numeric"),
    ({"model": {"id": "neo_hookean", "distortion": [[1, 0, 0], [0, 1, 0], [0, 0, 0]]}}, "singular"),
    ({"model": {"id": "transverse_iso", "params": {"mu": {"rotating": {}}}}}, "axis only"),
    ({"model": {"id": "split", "axis": 0}}, "split body needs"),
])
def test_schema_errors_name_the_field(data, match):
    with pytest.raises(SchemaError, match=match):
        parse_body(data)


def test_table_shape_error(tmp_path):
    grid = {"dims": [5, 5, 5]}
    data = {"grid": grid, "model": {"id": "neo_hookean", "params": {"mu": {"table": [1.0] * 124}}}}
    with pytest.raises(TableShapeError):
        parse_body(data)


def test_table_from_csv_file(tmp_path):
    g = BodyGrid.unit(5)
    vals = 1.0 + g.points()[:, 1]
    rows = "mu\n" + "\n".join(repr(float(v)) for v in vals) + "\n"
    (tmp_path / "mu.csv").write_text(rows, encoding="utf-8")
    data = {"grid": {"dims": [5, 5, 5]},
            "model": {"id": "neo_hookean", "params": {"mu": {"table": "mu.csv"}, "lam": 1.0}}}
    desc = ingest(_write(tmp_path, data))
    for X, v in zip(g.points()[::17], vals[::17]):
        assert desc.model.param("mu", X) == v


def test_missing_table_file(tmp_path):
    data = {"grid": {"dims": [5, 5, 5]},
            "model": {"id": "neo_hookean", "params": {"mu": {"table": "absent.csv"}}}}
    with pytest.raises(SchemaError, match="not found"):
        ingest(_write(tmp_path, data))


def test_split_model():
    spec = {"id": "split", "axis": 0, "threshold": 0.5,
            "below": {"id": "fluid", "params": {"kappa": 2.0}},
            "above": {"id": "neo_hookean", "params": {"mu": 1.0, "lam": 1.0}}}
    model = build_model(spec, BodyGrid.unit(5))
    assert isinstance(model, SplitModel)
    assert model.part(np.array([0.25, 0.5, 0.5])).model_id == "fluid"
    assert model.part(np.array([0.75, 0.5, 0.5])).model_id == "neo_hookean"


def test_rotating_axis():
    spec = {"id": "transverse_iso",
            "params": {"axis": {"rotating": {"base": [1, 0, 0], "about": [0, 0, 1], "rate": [0, 0, 0.8]}}}}
    model = build_model(spec, BodyGrid.unit(5))
    a = model.param("axis", np.array([0.0, 0.0, 0.5]))
    np.testing.assert_allclose(a, [np.cos(0.4), np.sin(0.4), 0.0], atol=1e-15)


def test_distortion_is_applied():
    S = np.diag([1.2, 1.0, 0.9])
    plain = build_model({"id": "neo_hookean"}, BodyGrid.unit(5))
    dist = build_model({"id": "neo_hookean", "distortion": S.tolist()}, BodyGrid.unit(5))
    F = np.array([[1.1, 0.1, 0.0], [0.0, 0.95, 0.05], [0.02, 0.0, 1.05]])
    X = np.full(3, 0.5)
    assert dist.energies(F[None], X)[0] == pytest.approx(plain.energies((F @ S)[None], X)[0], abs=1e-14)


def test_bundled_bodies_ingest(bodies_dir):
    paths = sorted(bodies_dir.glob("*.json"))
    assert len(paths) >= 5
    for p in paths:
        desc = ingest(p)
        assert all(n >= 5 for n in desc.grid.dims)
