"""Differential geometry of gridded bodies.

Frame fields (cross-sections) give the intrinsic metric ``g = s^-T s^-1`` and
volume form ``rho = 1/det s``.  Christoffel symbols and the Riemann tensor use
second-order central differences; curvature is reported only on interior
points two layers away from the boundary, where every stencil is central.
The homogeneity verdicts built on top are local to the chart.
"""
import csv
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from . import kernels
from .classify import FLUID_KINDS, FULLY_ISOTROPIC, SOLID_KINDS, TRANSVERSE, TRICLINIC
from .constitutive import TOL_SYM, DeformationSample, Model, default_probes
from .errors import (
    GridTooSmall,
    InvalidConfiguration,
    MissingMetric,
    MixedKinds,
    NotSolid,
    SingularFrame,
    SingularMetric,
    UnsupportedKind,
)
from .grid import BodyGrid
from .smallmat import SINGULAR_DET, polar_decompose

CURVATURE_MARGIN = 2
TOL_ABS = 1e-10
TOL_H2 = 10.0


@dataclass(frozen=True)
class FrameField:
    """Frames ``s(X)`` (columns are frame vectors) on every grid point."""

    grid: BodyGrid
    frames: np.ndarray  # (N1, N2, N3, 3, 3)
    kind: str = ""

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=float)
        if f.shape != tuple(self.grid.dims) + (3, 3):
            raise ValueError(f"frame array shape {f.shape} does not match grid {self.grid.dims}")
        if not np.all(np.isfinite(f)):
            raise SingularFrame("non-finite frame entries")
        if np.min(np.abs(np.linalg.det(f))) < SINGULAR_DET:
            raise SingularFrame("frame field is singular somewhere")
        f.setflags(write=False)
        object.__setattr__(self, "frames", f)

    @classmethod
    def from_function(cls, grid: BodyGrid, fn: Callable, kind: str = "") -> "FrameField":
        pts = grid.points()
        return cls(grid, np.array([fn(x) for x in pts]).reshape(tuple(grid.dims) + (3, 3)), kind)

    @classmethod
    def from_arrows(cls, grid: BodyGrid, maps: Mapping, z0, kind: str = "") -> "FrameField":
        """Frames ``P_X z0`` transported from the archetype by the maps ``P_X``."""
        z0 = np.asarray(z0, dtype=float)
        flat = np.array([np.asarray(maps[i]) @ z0 for i in range(grid.size)])
        return cls(grid, flat.reshape(tuple(grid.dims) + (3, 3)), kind)

    def right_multiplied(self, Q) -> "FrameField":
        """``s(X) Q(X)`` for a constant ``(3, 3)`` or per-point ``Q``."""
        return FrameField(self.grid, self.frames @ np.asarray(Q, dtype=float), self.kind)

    def flat(self) -> np.ndarray:
        return self.frames.reshape(-1, 3, 3)


@dataclass(frozen=True)
class MetricField:
    grid: BodyGrid
    g: np.ndarray  # (N1, N2, N3, 3, 3)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.shape != tuple(self.grid.dims) + (3, 3):
            raise ValueError(f"metric array shape {g.shape} does not match grid {self.grid.dims}")
        if np.abs(g - np.swapaxes(g, -1, -2)).max() > 1e-12 * max(np.abs(g).max(), 1.0):
            raise SingularMetric("metric is not symmetric")
        if np.linalg.eigvalsh(g).min() <= 0:
            raise SingularMetric("metric is not positive definite")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @classmethod
    def from_function(cls, grid: BodyGrid, fn: Callable) -> "MetricField":
        pts = grid.points()
        return cls(grid, np.array([fn(x) for x in pts]).reshape(tuple(grid.dims) + (3, 3)))

    def __getitem__(self, flat_index) -> np.ndarray:
        try:
            return self.g.reshape(-1, 3, 3)[int(flat_index)]
        except (IndexError, TypeError, ValueError):
            raise MissingMetric(flat_index) from None

    def __contains__(self, flat_index) -> bool:
        try:
            return 0 <= int(flat_index) < self.grid.size
        except (TypeError, ValueError):
            return False


@dataclass(frozen=True)
class CurvatureField:
    """``R^i_jkl`` on interior points (``margin`` layers removed on every side)."""

    grid: BodyGrid
    R: np.ndarray  # (n1, n2, n3, 3, 3, 3, 3)
    margin: int

    @property
    def norm(self) -> np.ndarray:
        return np.abs(self.R).max(axis=(-4, -3, -2, -1))

    @property
    def max_norm(self) -> float:
        return float(self.norm.max())

    def interior_indices(self) -> np.ndarray:
        m = self.margin
        ranges = [np.arange(m, n - m) for n in self.grid.dims]
        return np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, 3)

    def lowered(self, metric: MetricField) -> np.ndarray:
        """``R_ijkl = g_im R^m_jkl`` on the interior."""
        m = self.margin
        g = _interior(metric.g, m)
        return np.einsum("...im,...mjkl->...ijkl", g, self.R)


def _interior(a: np.ndarray, m: int) -> np.ndarray:
    return a[m:a.shape[0] - m, m:a.shape[1] - m, m:a.shape[2] - m]


def _grad(a: np.ndarray, grid: BodyGrid) -> np.ndarray:
    """``d[l] = d a / d x_l`` over the first three axes, second order everywhere."""
    h = grid.spacing
    return np.stack([np.gradient(a, h[l], axis=l, edge_order=2) for l in range(3)])


# ---------------------------------------------------------------------------
# fields from frames
# ---------------------------------------------------------------------------

def _checked_inverse(frames: FrameField) -> np.ndarray:
    f = frames.frames if isinstance(frames, FrameField) else np.asarray(frames, dtype=float)
    if np.min(np.abs(np.linalg.det(f))) < SINGULAR_DET:
        raise SingularFrame("frame field is singular somewhere")
    return np.linalg.inv(f)


def intrinsic_metric(frames: FrameField) -> MetricField:
    """``g(X) = s(X)^-T s(X)^-1``, the pull-back of the Euclidean metric."""
    si = _checked_inverse(frames)
    g = np.swapaxes(si, -1, -2) @ si
    return MetricField(frames.grid, 0.5 * (g + np.swapaxes(g, -1, -2)))


def volume_form(frames: FrameField) -> np.ndarray:
    """Density ``1/det s(X)`` of the coframe wedge against ``dx1 dx2 dx3``."""
    f = frames.frames
    d = np.linalg.det(f)
    if np.min(np.abs(d)) < SINGULAR_DET:
        raise SingularFrame("frame field is singular somewhere")
    return 1.0 / d


def _second(a: np.ndarray, grid: BodyGrid) -> np.ndarray:
    """``d2[l, m] = d^2 a / dx_l dx_m``; compact 3-point stencil on the diagonal."""
    h = grid.spacing
    d1 = _grad(a, grid)
    out = np.empty((3, 3) + a.shape)
    for l in range(3):
        for m in range(3):
            s = np.gradient(d1[l], h[m], axis=m, edge_order=2)
            if l == m:
                c, p, q = ([slice(None)] * a.ndim for _ in range(3))
                c[l], p[l], q[l] = slice(1, -1), slice(2, None), slice(0, -2)
                c, p, q = tuple(c), tuple(p), tuple(q)
                s[c] = (a[p] - 2.0 * a[c] + a[q]) / h[l] ** 2
            out[l, m] = s
    return out


def _symbols(metric: MetricField, with_derivatives: bool = False):
    g = metric.g
    try:
        gi = np.linalg.inv(g)
    except np.linalg.LinAlgError:
        raise SingularMetric("metric is singular somewhere") from None
    d = np.moveaxis(_grad(g, metric.grid), 0, -3)  # d[..., l, a, b] = d_l g_ab
    # lowered symbols Gamma_ljk = (d_j g_lk + d_k g_jl - d_l g_jk) / 2
    low = 0.5 * (np.einsum("...jlk->...ljk", d) + np.einsum("...kjl->...ljk", d) - d)
    gam = np.einsum("...il,...ljk->...ijk", gi, low)
    if not with_derivatives:
        return gam
    d2 = np.moveaxis(np.moveaxis(_second(g, metric.grid), 0, -3), 0, -3)  # (..., l, m, a, b)
    # d_l Gamma_ajk = (g_ak,jl + g_ja,kl - g_jk,al) / 2
    dlow = 0.5 * (np.einsum("...jlak->...lajk", d2) + np.einsum("...klja->...lajk", d2)
                  - np.einsum("...aljk->...lajk", d2))
    # d_l Gamma^i_jk = -g^ia (d_l g_ab) Gamma^b_jk + g^ia d_l Gamma_ajk
    dgam = (np.einsum("...ia,...lajk->...lijk", gi, dlow)
            - np.einsum("...ia,...lab,...bjk->...lijk", gi, d, gam))
    return gam, dgam


def christoffels(metric: MetricField) -> np.ndarray:
    """``Gamma^i_jk`` on every grid point, shape ``(N1, N2, N3, 3, 3, 3)``."""
    return _symbols(metric)


def riemann(metric: MetricField, margin: int = CURVATURE_MARGIN) -> CurvatureField:
    """Riemann tensor ``R^i_jkl`` on the interior of the grid.

    The derivatives of the Christoffel symbols are assembled from second
    differences of the metric, which keeps the stencil compact.
    """
    if min(metric.grid.dims) < 2 * margin + 1:
        raise GridTooSmall(f"curvature needs at least {2 * margin + 1} points per axis")
    gam, dgam = _symbols(metric, with_derivatives=True)
    gi = _interior(gam, margin)
    di = _interior(dgam, margin)
    shape = gi.shape[:3]
    R = kernels.riemann_batch(gi.reshape(-1, 3, 3, 3), di.reshape(-1, 3, 3, 3, 3))
    return CurvatureField(metric.grid, R.reshape(shape + (3, 3, 3, 3)), margin)


def curvature_tolerance(grid: BodyGrid, tol_abs: float = TOL_ABS, c: float = TOL_H2) -> float:
    """``max(tol_abs, c h^2)`` with ``h`` the largest spacing."""
    return max(tol_abs, c * float(grid.spacing.max()) ** 2)


def is_relaxable(metric: MetricField, tol: Optional[float] = None, tol_abs: float = TOL_ABS,
                 c: float = TOL_H2) -> bool:
    """Vanishing curvature within ``tol`` (default :func:`curvature_tolerance`)."""
    if tol is None:
        tol = curvature_tolerance(metric.grid, tol_abs, c)
    return riemann(metric).max_norm <= tol


def structure_functions(frames: FrameField) -> np.ndarray:
    """``c^i_jk`` with ``[e_j, e_k] = c^i_jk e_i`` on every grid point."""
    f = frames.frames
    fi = _checked_inverse(frames)
    df = np.moveaxis(_grad(f, frames.grid), 0, -3)  # (..., b, a, j) = d_b e_j^a
    # [e_j, e_k]^a = e_j^b d_b e_k^a - e_k^b d_b e_j^a
    t = np.einsum("...bj,...bak->...ajk", f, df)
    br = t - np.swapaxes(t, -1, -2)
    return np.einsum("...ia,...ajk->...ijk", fi, br)


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

@dataclass
class HomogeneityVerdict:
    homogeneous: bool
    kind: str
    criterion: str
    label: str
    tol: float
    measures: dict = field(default_factory=dict)
    volume_form: Optional[np.ndarray] = None
    curvature: Optional[CurvatureField] = None

    def to_dict(self) -> dict:
        return {
            "homogeneous": bool(self.homogeneous),
            "kind": self.kind,
            "criterion": self.criterion,
            "label": self.label,
            "tol": float(self.tol),
            "measures": {k: float(v) for k, v in self.measures.items()},
        }


def _axis_first(frames: FrameField, canonical_axis) -> FrameField:
    b = np.asarray(canonical_axis, dtype=float)
    b = b / np.linalg.norm(b)
    t = np.eye(3)[int(np.argmin(np.abs(b)))]
    u = np.cross(b, t)
    u /= np.linalg.norm(u)
    return frames.right_multiplied(np.column_stack([b, u, np.cross(b, u)]))


def homogeneity_verdict(kinds, frames: FrameField, tol: Optional[float] = None,
                        canonical_axis=None, tol_abs: float = TOL_ABS, c: float = TOL_H2) -> HomogeneityVerdict:
    """Local homogeneity verdict for a body whose points share one kind.

    ``kinds`` is one kind string or a per-point sequence of kinds or
    descriptors.  ``frames`` is the undistorted frame field (material
    cross-section).  For transverse solids ``canonical_axis`` is the fibre
    direction in the undistorted frame.
    """
    if isinstance(kinds, str):
        kset = {kinds}
    else:
        kset = {getattr(k, "kind", k) for k in kinds}
    if len(kset) != 1 or None in kset:
        raise MixedKinds(", ".join(sorted(str(k) for k in kset)))
    kind = kset.pop()
    grid = frames.grid
    if tol is None:
        tol = curvature_tolerance(grid, tol_abs, c)
    m = CURVATURE_MARGIN
    if kind in FLUID_KINDS:
        rho = volume_form(frames)
        return HomogeneityVerdict(True, kind, "volume form", "locally-homogeneous-by-volume", tol,
                                  {"rho_min": rho.min(), "rho_max": rho.max()}, volume_form=rho)
    if kind == TRICLINIC:
        cs = structure_functions(frames)
        worst = float(np.abs(_interior(cs, m)).max())
        return HomogeneityVerdict(worst <= tol, kind, "structure functions", "holonomic-frame-test", tol,
                                  {"structure_max": worst})
    metric = intrinsic_metric(frames)
    curv = riemann(metric)
    if kind == FULLY_ISOTROPIC:
        return HomogeneityVerdict(curv.max_norm <= tol, kind, "intrinsic metric curvature", "relaxability",
                                  tol, {"curvature_max": curv.max_norm}, curvature=curv)
    if kind == TRANSVERSE:
        if canonical_axis is None:
            raise UnsupportedKind("transverse verdict needs the canonical axis")
        adapted = _axis_first(frames, canonical_axis)
        cs = structure_functions(adapted)
        frob = float(np.abs(_interior(cs[..., 0, 1, 2], m)).max())
        a = adapted.frames[..., :, 0]
        gam = christoffels(metric)
        da = np.moveaxis(_grad(a, grid), 0, -1)  # (..., i, k) = d_k a^i
        cov = da + np.einsum("...ikj,...j->...ik", gam, a)
        covmax = float(np.abs(_interior(cov, m)).max())
        ok = curv.max_norm <= tol and frob <= tol and covmax <= tol
        return HomogeneityVerdict(ok, kind, "curvature, Frobenius and parallel-axis battery",
                                  "necessary-conditions-passed" if ok else "necessary-conditions-failed", tol,
                                  {"curvature_max": curv.max_norm, "frobenius_max": frob, "axis_covariant_max": covmax},
                                  curvature=curv)
    raise UnsupportedKind(kind)


def _tangent_maps(K, points) -> np.ndarray:
    if callable(K):
        ks = np.array([np.asarray(K(x), dtype=float) for x in points])
    else:
        ks = np.asarray(K, dtype=float).reshape(-1, 3, 3)
    if len(ks) != len(points):
        raise InvalidConfiguration("one tangent map per point is required")
    if not np.all(np.isfinite(ks)) or np.min(np.abs(np.linalg.det(ks))) < SINGULAR_DET:
        raise InvalidConfiguration("configuration is not invertible on the chart")
    return ks


def uniform_configuration_check(model: Model, K, generators, points, tol: float = TOL_SYM,
                                sample: DeformationSample = None) -> bool:
    """Response in configuration ``K`` is point independent and ``G``-invariant.

    ``W_K(F, X) = W(F K(X), X)``.  The check passes when ``W_K(F, X)`` agrees
    with its value at the first point for every probe ``F``, and
    ``W_K(F g, X) = W_K(F, X)`` for every structure group generator ``g``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    ks = _tangent_maps(K, pts)
    probes = (sample or default_probes()).probes
    ref = None
    for x, k in zip(pts, ks):
        w = model.energies(probes @ k, x)
        if not np.all(np.isfinite(w)):
            return False
        if ref is None:
            ref = w
        elif np.abs(w - ref).max() > tol:
            return False
        for g in generators:
            wg = model.energies(probes @ np.asarray(g) @ k, x)
            if not np.all(np.isfinite(wg)) or np.abs(wg - w).max() > tol:
                return False
    return True


def metric_invariance_check(metric, arrows, tol: float = 1e-8) -> bool:
    """``P^T g_dst P = g_src`` for every arrow ``P``."""
    for P, s, d in zip(arrows.mats, arrows.src, arrows.dst):
        if s not in metric:
            raise MissingMetric(s)
        if d not in metric:
            raise MissingMetric(d)
        gs, gd = metric[s], metric[d]
        scale = max(np.abs(gs).max(), 1.0)
        if np.abs(P.T @ gd @ P - gs).max() > tol * scale:
            return False
    return True


def _patch_items(patch):
    if isinstance(patch, FrameField):
        return dict(enumerate(patch.flat()))
    return {int(k): np.asarray(v, dtype=float) for k, v in dict(patch).items()}


def material_metric_conditions_check(patches, descriptors, tol: float = 1e-8) -> bool:
    """Compatibility of patches of frames with a solid metric.

    Every frame must conjugate the point's symmetry generators into O(3)
    and frames of overlapping patches must differ by an orthogonal map.
    ``patches`` holds FrameFields or mappings from point index to frame.
    """
    if not patches:
        raise ValueError("at least one patch is required")
    if any(d is None or d.kind not in SOLID_KINDS for d in descriptors):
        raise NotSolid("compatible solid metrics need solid points")
    items = [_patch_items(p) for p in patches]
    eye = np.eye(3)
    for frames in items:
        for idx, s in frames.items():
            si = np.linalg.inv(s)
            for g in descriptors[idx].generators:
                q = si @ g @ s
                if np.abs(q.T @ q - eye).max() > tol:
                    return False
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            for idx in items[a].keys() & items[b].keys():
                t = np.linalg.inv(items[a][idx]) @ items[b][idx]
                if np.abs(t.T @ t - eye).max() > tol:
                    return False
    return True


def centralizer_check(z1, z2, generators, tol: float = 1e-8) -> bool:
    """For two undistorted frames of one point, the stretch ``U`` of
    ``z1^-1 z2 = R U`` commutes with the canonical group ``z1^-1 G z1``."""
    z1 = np.asarray(z1, dtype=float)
    t = np.linalg.inv(z1) @ np.asarray(z2, dtype=float)
    U = polar_decompose(t).U
    for g in generators:
        q = np.linalg.inv(z1) @ np.asarray(g) @ z1
        if np.abs(U @ q - q @ U).max() > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# CSV import/export
# ---------------------------------------------------------------------------

def write_field_csv(path, values: np.ndarray, names, margin: int = 0) -> int:
    """Write ``i,j,k,<names>`` rows; ``values`` covers the grid minus ``margin``.

    Floats use ``repr`` so that a read-back is bit exact.  Returns the row count.
    """
    values = np.asarray(values, dtype=float)
    shape = values.shape[:3]
    flat = values.reshape(shape + (-1,))
    names = list(names)
    if flat.shape[-1] != len(names):
        raise ValueError(f"{len(names)} column names for {flat.shape[-1]} components")
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "k"] + names)
        for idx in np.ndindex(*shape):
            w.writerow([idx[0] + margin, idx[1] + margin, idx[2] + margin] + [repr(float(v)) for v in flat[idx]])
            rows += 1
    return rows


def read_field_csv(path):
    """Return ``(ijk, values, names)`` from a file written by :func:`write_field_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [row for row in r if row]
    ijk = np.array([[int(v) for v in row[:3]] for row in data], dtype=int).reshape(-1, 3)
    vals = np.array([[float(v) for v in row[3:]] for row in data]).reshape(len(data), -1)
    return ijk, vals, header[3:]
