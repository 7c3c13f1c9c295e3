"""Body descriptions: JSON ingestion, validation and model construction.

Schema (all keys except ``model`` optional)::

    {
      "schema_version": "1",
      "name": "...",
      "grid": {"box": [[lo, hi], [lo, hi], [lo, hi]], "dims": [N1, N2, N3]},
      "model": {"id": "<model id>", "params": {"<name>": <field spec>, ...},
                "distortion": <3x3 field spec>},
      "analysis": {"stages": [...], "seed": 0,
                   "tolerances": {"sym": 1e-8, "iso": 1e-7, "curv": null}},
      "output": {"dir": "out", "formats": ["json", "txt", "csv"]}
    }

A field spec is a number or nested list (constant), ``{"constant": v}``,
``{"linear": {"value": v, "gradient": g}}`` giving ``v + g . X``,
``{"rotating": {"base": b, "about": n, "rate": r}}`` giving the rotation of
``b`` about ``n`` by the angle ``r . X``, or ``{"table": "file.csv"}`` /
``{"table": [[...], ...]}`` with one value per grid point in C order of
``(i, j, k)``.  A piecewise body uses ``{"id": "split", "axis": a,
"threshold": t, "below": <model>, "above": <model>}``.
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .constitutive import (
    _SLOTS,
    MODEL_CARDS,
    ConstantField,
    ConstitutiveModel,
    FunctionField,
    LinearField,
    Model,
    SplitModel,
    TableField,
)
from .errors import GridTooSmall, ParseError, SchemaError, TableShapeError
from .grid import BodyGrid
from .smallmat import rotation

SCHEMA_VERSION = "1"
DEFAULT_DIMS = (21, 21, 21)
DEFAULT_BOX = ((0.0, 1.0),) * 3
STAGES = ("classify", "uniformity", "unisymmetry", "geometry", "homogeneity")
FORMATS = ("json", "txt", "csv")
DEFAULT_TOLERANCES = {"sym": 1e-8, "iso": 1e-7, "curv": None}


@dataclass
class BodyDescription:
    name: str
    grid: BodyGrid
    model: Model
    model_spec: dict
    stages: tuple = STAGES
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out_dir: Optional[str] = None
    formats: tuple = ("json", "txt")
    defaults_filled: list = field(default_factory=list)
    source: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "grid": self.grid.to_dict(),
            "model": self.model_spec,
            "stages": list(self.stages),
            "seed": int(self.seed),
            "tolerances": dict(self.tolerances),
            "defaults_filled": list(self.defaults_filled),
        }


def _rotating(spec, where):
    try:
        base = np.asarray(spec["base"], dtype=float)
        about = np.asarray(spec["about"], dtype=float)
        rate = np.asarray(spec["rate"], dtype=float)
    except KeyError as exc:
        raise SchemaError(f"{where}.rotating: missing key {exc.args[0]!r}") from None
    if base.shape != (3,) or about.shape != (3,) or rate.shape != (3,):
        raise SchemaError(f"{where}.rotating: base, about and rate need three entries")
    if np.linalg.norm(about) == 0:
        raise SchemaError(f"{where}.rotating: zero rotation axis")

    def fn(X):
        return rotation(about, float(rate @ np.asarray(X, dtype=float))) @ base
    return FunctionField(fn)


def _read_table(ref, base_dir: Path, where: str) -> np.ndarray:
    if isinstance(ref, list):
        return np.asarray(ref, dtype=float)
    path = Path(ref)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise SchemaError(f"{where}.table: file {str(ref)!r} not found")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        rows = rows[1:]
    try:
        return np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise SchemaError(f"{where}.table: {exc}") from None


def _field(spec, name: str, grid: BodyGrid, base_dir: Path, where: str):
    shape = _SLOTS[name][1]
    if isinstance(spec, dict):
        if len(spec) != 1:
            raise SchemaError(f"{where}: a field spec has exactly one key")
        (key, body), = spec.items()
        if key == "constant":
            return _field(body, name, grid, base_dir, where)
        if key == "linear":
            if not isinstance(body, dict) or "value" not in body or "gradient" not in body:
                raise SchemaError(f"{where}.linear: needs 'value' and 'gradient'")
            value = np.asarray(body["value"], dtype=float)
            grad = np.asarray(body["gradient"], dtype=float)
            if value.shape != tuple(shape) or grad.shape != tuple(shape) + (3,):
                raise SchemaError(f"{where}.linear: value shape {value.shape} / gradient shape "
                                  f"{grad.shape} do not fit parameter {name!r}")
            return LinearField(value, grad)
        if key == "rotating":
            if name != "axis":
                raise SchemaError(f"{where}: 'rotating' applies to the axis only")
            return _rotating(body, where)
        if key == "table":
            vals = _read_table(body, base_dir, where)
            n = int(np.prod(shape)) if shape else 1
            if vals.ndim == 1:
                vals = vals[:, None]
            if vals.shape[0] != grid.size or vals.shape[1] != n:
                raise TableShapeError(f"{where}.table: expected {grid.size} rows of {n} values, "
                                      f"got {vals.shape}")
            return TableField(grid.points(), vals.reshape((grid.size,) + tuple(shape)))
        raise SchemaError(f"{where}: unknown field kind {key!r}")
    try:
        value = np.asarray(spec, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: not a number or numeric array") from None
    if value.shape != tuple(shape):
        raise SchemaError(f"{where}: shape {value.shape} does not fit parameter {name!r} {tuple(shape)}")
    return ConstantField(value)


def build_model(spec, grid: BodyGrid, base_dir: Path = Path("."), where: str = "model") -> Model:
    """Construct a :class:`Model` from its JSON specification."""
    if not isinstance(spec, dict) or "id" not in spec:
        raise SchemaError(f"{where}: missing 'id'")
    mid = spec["id"]
    if mid == "split":
        for k in ("axis", "threshold", "below", "above"):
            if k not in spec:
                raise SchemaError(f"{where}: split body needs {k!r}")
        if spec["axis"] not in (0, 1, 2):
            raise SchemaError(f"{where}.axis: must be 0, 1 or 2")
        return SplitModel(int(spec["axis"]), float(spec["threshold"]),
                          build_model(spec["below"], grid, base_dir, where + ".below"),
                          build_model(spec["above"], grid, base_dir, where + ".above"))
    if mid not in MODEL_CARDS:
        raise SchemaError(f"{where}.id: unknown model {mid!r}; known: {sorted(MODEL_CARDS)}")
    unknown = set(spec) - {"id", "params", "distortion"}
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError(f"{where}.params: must be an object")
    fields = {}
    for name, fspec in params.items():
        if name not in MODEL_CARDS[mid].defaults:
            raise SchemaError(f"{where}.params.{name}: unknown parameter for {mid}")
        fields[name] = _field(fspec, name, grid, base_dir, f"{where}.params.{name}")
    model = ConstitutiveModel(mid, fields)
    if "distortion" in spec:
        S = _field(spec["distortion"], "distortion", grid, base_dir, f"{where}.distortion")
        if isinstance(S, ConstantField) and abs(np.linalg.det(S.value)) < 1e-12:
            raise SchemaError(f"{where}.distortion: singular matrix")
        model = model.distorted(S)
    return model


def _grid(spec, filled) -> BodyGrid:
    if spec is None:
        filled.append("grid")
        spec = {}
    if not isinstance(spec, dict):
        raise SchemaError("grid: must be an object")
    box = spec.get("box")
    if box is None:
        filled.append("grid.box")
        box = DEFAULT_BOX
    dims = spec.get("dims")
    if dims is None:
        filled.append("grid.dims")
        dims = DEFAULT_DIMS
    try:
        box = [[float(v) for v in b] for b in box]
        dims = [int(v) for v in dims]
    except (TypeError, ValueError):
        raise SchemaError("grid: box must be [[lo, hi] x 3] and dims three integers") from None
    if len(box) != 3 or any(len(b) != 2 for b in box) or len(dims) != 3:
        raise SchemaError("grid: box must be [[lo, hi] x 3] and dims three integers")
    if any(hi <= lo for lo, hi in box):
        raise SchemaError("grid.box: every interval needs lo < hi")
    try:
        return BodyGrid(tuple(map(tuple, box)), tuple(dims))
    except GridTooSmall as exc:
        raise SchemaError(f"grid.dims: {exc}") from None


def parse_body(data: dict, base_dir: Path = Path("."), source: str = None) -> BodyDescription:
    """Validate a decoded body description and fill defaults."""
    if not isinstance(data, dict):
        raise SchemaError("top level: expected an object")
    unknown = set(data) - {"schema_version", "name", "grid", "model", "analysis", "output"}
    if unknown:
        raise SchemaError(f"top level: unknown keys {sorted(unknown)}")
    version = str(data.get("schema_version", SCHEMA_VERSION))
    if version != SCHEMA_VERSION:
        raise SchemaError(f"schema_version: unsupported {version!r}")
    filled = []
    grid = _grid(data.get("grid"), filled)
    if "model" not in data:
        raise SchemaError("model: required")
    model = build_model(data["model"], grid, base_dir)

    analysis = data.get("analysis", {})
    if not isinstance(analysis, dict):
        raise SchemaError("analysis: must be an object")
    stages = analysis.get("stages")
    if stages is None:
        filled.append("analysis.stages")
        stages = list(STAGES)
    bad = [s for s in stages if s not in STAGES]
    if bad:
        raise SchemaError(f"analysis.stages: unknown stages {bad}")
    seed = analysis.get("seed")
    if seed is None:
        filled.append("analysis.seed")
        seed = 0
    if not isinstance(seed, int) or seed < 0 or seed >= 2 ** 64:
        raise SchemaError("analysis.seed: must be an unsigned 64-bit integer")
    tols = dict(DEFAULT_TOLERANCES)
    given = analysis.get("tolerances", {})
    if not isinstance(given, dict):
        raise SchemaError("analysis.tolerances: must be an object")
    for k, v in given.items():
        if k not in tols:
            raise SchemaError(f"analysis.tolerances.{k}: unknown tolerance")
        if v is not None and (not isinstance(v, (int, float)) or v <= 0):
            raise SchemaError(f"analysis.tolerances.{k}: must be positive")
        tols[k] = None if v is None else float(v)
    filled += [f"analysis.tolerances.{k}" for k in tols if k not in given]

    output = data.get("output", {})
    if not isinstance(output, dict):
        raise SchemaError("output: must be an object")
    formats = output.get("formats")
    if formats is None:
        filled.append("output.formats")
        formats = ["json", "txt"]
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise SchemaError(f"output.formats: unknown formats {bad}")
    return BodyDescription(
        name=str(data.get("name", "body")),
        grid=grid,
        model=model,
        model_spec=data["model"],
        stages=tuple(s for s in STAGES if s in stages),
        seed=seed,
        tolerances=tols,
        out_dir=output.get("dir"),
        formats=tuple(dict.fromkeys(formats)),
        defaults_filled=filled,
        source=source,
    )


def ingest(path) -> BodyDescription:
    """Read and validate a UTF-8 JSON body description."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc.reason})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}",
                         line=exc.lineno, column=exc.colno) from None
    return parse_body(data, path.parent, str(path))
