"""Analysis pipeline: classify, uniformity, unisymmetry, geometry, homogeneity.

Every stage writes one record into the report.  A stage whose prerequisite
verdict blocks it is recorded as skipped with a reason.  The report carries
no timestamps, so equal inputs give byte-identical JSON; wall-clock data goes
into a separate ``run_info`` mapping.
"""
import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__, _accel
from .body import STAGES, BodyDescription
from .classify import KINDS, SOLID_KINDS, ClassifyOptions, classify_points
from .errors import MatUniformError, MixedKinds, StageError
from .geometry import (
    FrameField,
    curvature_tolerance,
    homogeneity_verdict,
    intrinsic_metric,
    metric_invariance_check,
    riemann,
    volume_form,
)
from .material import IsoOptions, fgm_verdict, is_uniform, reduced_vertex_group, symmetry_conjugation_check

REPORT_SCHEMA_VERSION = "1"
UNCLASSIFIED = "Unclassifiable"
CONJUGATION_SAMPLE = 64

_REQUIRES = {
    "classify": (),
    "uniformity": (),
    "unisymmetry": ("classify",),
    "geometry": ("classify", "uniformity", "unisymmetry"),
    "homogeneity": ("classify", "uniformity", "unisymmetry", "geometry"),
}


@dataclass
class AnalysisReport:
    data: dict
    fields: dict = field(default_factory=dict)  # name -> (values, column names, margin)
    run_info: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> dict:
        return self.data["verdicts"]

    def stage(self, name: str) -> dict:
        return self.data["stages"].get(name, {"status": "not-requested"})


def resolve_stages(requested) -> tuple:
    """Requested stages plus their prerequisites, in pipeline order."""
    need = set()
    for s in requested:
        need.add(s)
        need.update(_REQUIRES[s])
    return tuple(s for s in STAGES if s in need)


def _arrow_list(arrows) -> list:
    return [{"src": int(s), "dst": int(d), "P": [float(v) for v in m.ravel()]}
            for m, s, d in zip(arrows.mats, arrows.src, arrows.dst)]


def _body_digest(desc: BodyDescription) -> str:
    blob = json.dumps(desc.to_dict(), sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


class _Run:
    def __init__(self, desc: BodyDescription):
        self.desc = desc
        self.grid = desc.grid
        self.points = desc.grid.points()
        self.stages = {}
        self.fields = {}
        self.timings = {}
        self.descriptors = None
        self.uniformity = None
        self.fgm = None
        self.frames = None
        self.frame_source = None
        tol_curv = desc.tolerances.get("curv")
        self.tol_curv = tol_curv if tol_curv is not None else curvature_tolerance(desc.grid)

    # -- stages -----------------------------------------------------------
    def classify(self):
        opts = ClassifyOptions(seed=self.desc.seed, tol_accept=self.desc.tolerances["sym"])
        cache = {}
        self.descriptors = classify_points(self.desc.model, self.points, opts, cache)
        hist = {}
        codes = np.full(len(self.points), -1.0)
        axes = np.full((len(self.points), 3), np.nan)
        for i, d in enumerate(self.descriptors):
            name = UNCLASSIFIED if d is None else d.kind
            hist[name] = hist.get(name, 0) + 1
            if d is not None:
                codes[i] = KINDS.index(d.kind)
                if d.axis is not None:
                    axes[i] = d.axis
        arch = self.grid.center_index
        darch = self.descriptors[arch]
        shape = tuple(self.grid.dims)
        self.fields["classification"] = (
            np.concatenate([codes[:, None], axes], axis=1).reshape(shape + (4,)),
            ["kind_code", "axis_1", "axis_2", "axis_3"], 0)
        return {
            "kind_histogram": dict(sorted(hist.items())),
            "kind_codes": {k: i for i, k in enumerate(KINDS)},
            "distinct_laws": len(cache),
            "archetype": int(arch),
            "archetype_descriptor": None if darch is None else darch.to_dict(),
            "axis_field": any(d is not None and d.axis is not None for d in self.descriptors),
        }

    def uniformity_stage(self):
        opts = IsoOptions(tol=self.desc.tolerances["iso"], seed=self.desc.seed)
        v = is_uniform(self.desc.model, self.grid, opts)
        self.uniformity = v
        ok = np.ones(len(self.points), dtype=bool)
        ok[v.failures] = False
        found = v.residuals[ok]
        rec = {
            "uniform": bool(v.uniform),
            "archetype": int(v.archetype),
            "failures": len(v.failures),
            "failure_points": [int(i) for i in v.failures],
            "residual_max_accepted": float(found.max()) if found.size else None,
            "residual_min_rejected": float(v.residuals[v.failures].min()) if v.failures else None,
            "arrows": _arrow_list(v.arrows) if v.uniform else [],
        }
        if v.uniform and self.descriptors is not None:
            rec["conjugation_check"] = self._conjugation_sample(v)
        self.fields["uniformity_residual"] = (
            v.residuals.reshape(tuple(self.grid.dims) + (1,)), ["residual"], 0)
        return rec

    def _conjugation_sample(self, v) -> dict:
        d = self.descriptors
        arch = v.archetype
        if d[arch] is None:
            return {"checked": 0, "passed": None}
        idx = np.unique(np.linspace(0, len(self.points) - 1, CONJUGATION_SAMPLE).astype(int))
        idx = [int(i) for i in idx if d[i] is not None]
        ok = all(symmetry_conjugation_check(self.desc.model, self.points[arch], self.points[i],
                                            v.maps[i], d[arch], d[i], self.desc.tolerances["iso"])
                 for i in idx)
        return {"checked": len(idx), "passed": bool(ok)}

    def unisymmetry(self):
        f = fgm_verdict(self.desc.model, self.grid, self.descriptors)
        self.fgm = f
        rec = {
            "unisymmetric": bool(f.unisymmetric),
            "reason": f.reason,
            "failures": len(f.failures),
            "conjugators": _arrow_list(f.conjugators) if f.unisymmetric else [],
        }
        darch = self.descriptors[f.archetype]
        rec["reduced_vertex_group"] = None if darch is None else reduced_vertex_group(darch).to_dict()
        return rec

    def geometry(self):
        darch = self.descriptors[self.grid.center_index]
        if self.uniformity is not None and self.uniformity.uniform and darch is not None:
            maps, self.frame_source = self.uniformity.maps, "material"
        elif self.fgm is not None and self.fgm.unisymmetric:
            maps = dict(enumerate(self.fgm.conjugators.mats))
            self.frame_source = "unisymmetric"
        else:
            return None, "body is neither uniform nor unisymmetric: no distinguished cross-section"
        self.frames = FrameField.from_arrows(self.grid, maps, darch.undistorted_frame, darch.kind)
        rec = {"frame_source": self.frame_source, "kind": darch.kind}
        if darch.kind in SOLID_KINDS:
            metric = intrinsic_metric(self.frames)
            curv = riemann(metric)
            rec.update({
                "curvature_max": curv.max_norm,
                "curvature_tol": self.tol_curv,
                "relaxable": bool(curv.max_norm <= self.tol_curv),
            })
            if self.frame_source == "material":
                rec["metric_invariance"] = bool(metric_invariance_check(metric, self.uniformity.arrows))
            self.fields["curvature_norm"] = (curv.norm[..., None], ["curvature_norm"], curv.margin)
        else:
            rho = volume_form(self.frames)
            rec.update({"volume_form_min": float(rho.min()), "volume_form_max": float(rho.max())})
            self.fields["volume_form"] = (rho[..., None], ["rho"], 0)
        return rec, None

    def homogeneity(self):
        kinds = {UNCLASSIFIED if d is None else d.kind for d in self.descriptors}
        if len(kinds) != 1 or UNCLASSIFIED in kinds:
            return None, f"MixedKinds: {', '.join(sorted(kinds))}"
        if self.frames is None:
            return None, "geometry stage produced no frame field"
        darch = self.descriptors[self.grid.center_index]
        try:
            v = homogeneity_verdict(darch.kind, self.frames, self.tol_curv, darch.canonical_axis)
        except MixedKinds as exc:
            return None, f"MixedKinds: {exc}"
        rec = v.to_dict()
        rec["mode"] = "homogeneity" if self.frame_source == "material" else "homosymmetric relaxability"
        return rec, None

    # -- driver -------------------------------------------------------------
    def run(self, stages):
        handlers = {
            "classify": self.classify,
            "uniformity": self.uniformity_stage,
            "unisymmetry": self.unisymmetry,
            "geometry": self.geometry,
            "homogeneity": self.homogeneity,
        }
        for name in stages:
            blocked = self._blocked(name)
            if blocked:
                self.stages[name] = {"status": "skipped", "reason": blocked}
                continue
            t0 = time.perf_counter()
            try:
                out = handlers[name]()
            except MatUniformError as exc:
                raise StageError(name, exc) from exc
            self.timings[name] = time.perf_counter() - t0
            if isinstance(out, tuple):
                rec, reason = out
                if rec is None:
                    self.stages[name] = {"status": "skipped", "reason": reason}
                    continue
                out = rec
            self.stages[name] = {"status": "ok", **out}

    def _blocked(self, name):
        # stages that read per-point descriptors cannot run without them
        if name != "classify" and name != "uniformity":
            st = self.stages.get("classify", {}).get("status")
            if st != "ok":
                return "prerequisite stage 'classify' did not run"
        return None


def _verdicts(stages: dict) -> dict:
    def get(stage, key):
        rec = stages.get(stage, {})
        return rec.get(key) if rec.get("status") == "ok" else None

    hom = stages.get("homogeneity", {})
    uniform = get("uniformity", "uniform")
    unisym = get("unisymmetry", "unisymmetric")
    local = get("homogeneity", "homogeneous")
    material_frames = get("homogeneity", "mode") == "homogeneity"
    if local is None:
        homogeneous = None
    elif material_frames:
        homogeneous = local
    else:
        # homogeneity presupposes uniformity
        homogeneous = False if uniform is False else None
    return {
        "uniform": uniform,
        "unisymmetric": unisym,
        "curvature_max": get("geometry", "curvature_max"),
        "homogeneous": homogeneous,
        "homosymmetrically_relaxable": None if (local is None or material_frames) else local,
        "homogeneity_criterion": get("homogeneity", "criterion"),
        "homogeneity_skipped": hom.get("reason") if hom.get("status") == "skipped" else None,
        "reduced_vertex_group": ((get("unisymmetry", "reduced_vertex_group") or {}).get("reduction")
                                 if unisym else None),
    }


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isfinite(v):
            return v
        return "nan" if np.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def run_pipeline(desc: BodyDescription, stages=None) -> AnalysisReport:
    """Run the requested stages (default: the description's) with prerequisites."""
    requested = tuple(stages) if stages is not None else desc.stages
    order = resolve_stages(requested)
    started = datetime.now(timezone.utc)
    run = _Run(desc)
    run.run(order)
    data = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "body": desc.name,
        "stages_requested": [s for s in STAGES if s in requested],
        "stages": run.stages,
        "verdicts": _verdicts(run.stages),
        "provenance": {
            "tool": "matuniform",
            "tool_version": __version__,
            "seed": int(desc.seed),
            "tolerances": {**desc.tolerances, "curv_effective": run.tol_curv},
            "grid": desc.grid.to_dict(),
            "model": desc.model_spec,
            "defaults_filled": desc.defaults_filled,
            "body_digest": _body_digest(desc),
        },
    }
    run_info = {
        "started_utc": started.isoformat(),
        "stage_seconds": run.timings,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba_enabled": bool(_accel.USE_NUMBA),
    }
    return AnalysisReport(_clean(data), run.fields, _clean(run_info))
