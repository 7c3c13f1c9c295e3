"""Finite samples of the frame groupoid and the operations on them.

A :class:`FrameArrowSet` is a finite, sampled stand-in for a subgroupoid of
the frame groupoid of a discretised body: a stack of invertible 3x3 maps, each
tagged with a source and a target point id.  All claims made about arrow sets
(closure, normalising, reductions) are claims about the sample.
"""
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import (
    BaseMismatch,
    InconsistentStructureGroup,
    MissingMetric,
    NotASubgroupoid,
    NotTransitiveFromBasepoint,
    SingularMatrix,
)
from .smallmat import SINGULAR_DET, FrameArrow, sym_inv_sqrt, sym_sqrt

DEDUP_TOL = 1e-8


@dataclass(frozen=True)
class FrameArrowSet:
    mats: np.ndarray  # (n, 3, 3)
    src: tuple
    dst: tuple
    base: tuple

    def __post_init__(self):
        mats = np.array(self.mats, dtype=float).reshape(-1, 3, 3)
        if len(mats) and np.any(np.abs(kernels.det3_np(mats)) <= SINGULAR_DET):
            raise SingularMatrix("arrow set contains a singular map")
        mats.setflags(write=False)
        object.__setattr__(self, "mats", mats)
        object.__setattr__(self, "src", tuple(self.src))
        object.__setattr__(self, "dst", tuple(self.dst))
        object.__setattr__(self, "base", tuple(self.base))
        if not (len(self.src) == len(self.dst) == len(mats)):
            raise ValueError("mats/src/dst length mismatch")
        unknown = (set(self.src) | set(self.dst)) - set(self.base)
        if unknown:
            raise BaseMismatch(f"arrow endpoints outside base: {sorted(map(str, unknown))[:3]}")

    @classmethod
    def from_arrows(cls, arrows: Iterable[FrameArrow], base: Sequence = None) -> "FrameArrowSet":
        arrows = list(arrows)
        if base is None:
            seen = {}
            for a in arrows:
                seen.setdefault(a.src, None)
                seen.setdefault(a.dst, None)
            base = list(seen)
        mats = np.array([a.matrix for a in arrows]).reshape(-1, 3, 3)
        return cls(mats, [a.src for a in arrows], [a.dst for a in arrows], base)

    def __len__(self):
        return len(self.mats)

    def __iter__(self):
        for m, s, d in zip(self.mats, self.src, self.dst):
            yield FrameArrow(m, s, d)

    def hom(self, x, y) -> np.ndarray:
        idx = [i for i, (s, d) in enumerate(zip(self.src, self.dst)) if s == x and d == y]
        return self.mats[idx]

    def vertex_group(self, x) -> np.ndarray:
        return self.hom(x, x)

    @property
    def closed_under_inverse(self) -> bool:
        inv = FrameArrowSet(kernels.inv3_np(self.mats), self.dst, self.src, self.base)
        return contains_all(self, inv)

    def with_inverses(self) -> "FrameArrowSet":
        inv = kernels.inv3_np(self.mats)
        return dedupe(FrameArrowSet(np.concatenate([self.mats, inv]),
                                    self.src + self.dst, self.dst + self.src, self.base))

    def subset(self, mask) -> "FrameArrowSet":
        idx = np.flatnonzero(mask)
        return FrameArrowSet(self.mats[idx], [self.src[i] for i in idx],
                             [self.dst[i] for i in idx], self.base)


def _find(mats: np.ndarray, m: np.ndarray, tol: float) -> bool:
    if len(mats) == 0:
        return False
    return bool(np.any(np.abs(mats - m).max(axis=(1, 2)) <= tol))


def _groups(arrows: FrameArrowSet) -> dict:
    out = {}
    for i, key in enumerate(zip(arrows.src, arrows.dst)):
        out.setdefault(key, []).append(i)
    return out


def contains_all(big: FrameArrowSet, small: FrameArrowSet, tol: float = DEDUP_TOL) -> bool:
    """Every arrow of ``small`` is present in ``big`` (same endpoints, within tol)."""
    gb = _groups(big)
    for m, s, d in zip(small.mats, small.src, small.dst):
        if not _find(big.mats[gb.get((s, d), [])], m, tol):
            return False
    return True


def same_arrows(a: FrameArrowSet, b: FrameArrowSet, tol: float = DEDUP_TOL) -> bool:
    return contains_all(a, b, tol) and contains_all(b, a, tol)


def dedupe(arrows: FrameArrowSet, tol: float = DEDUP_TOL) -> FrameArrowSet:
    keep = []
    kept = {}
    for i, (m, s, d) in enumerate(zip(arrows.mats, arrows.src, arrows.dst)):
        prev = kept.setdefault((s, d), [])
        if not _find(arrows.mats[prev], m, tol):
            prev.append(i)
            keep.append(i)
    mask = np.zeros(len(arrows), dtype=bool)
    mask[keep] = True
    return arrows.subset(mask)


def _metric_at(metric: Mapping, x) -> np.ndarray:
    try:
        return np.asarray(metric[x], dtype=float)
    except (KeyError, IndexError):
        raise MissingMetric(x) from None


def orthogonal_reduction(arrows: FrameArrowSet, metric: Mapping) -> FrameArrowSet:
    """Replace each arrow by its orthogonal polar factor relative to ``metric``.

    For ``F: x -> y`` the Euclideanised map ``G_y^1/2 F G_x^-1/2`` is factored
    and its rotation part is mapped back, so the output satisfies
    ``R^T G_y R = G_x``.
    """
    if len(arrows) == 0:
        return arrows
    roots = {x: sym_sqrt(_metric_at(metric, x)) for x in set(arrows.src) | set(arrows.dst)}
    iroots = {x: sym_inv_sqrt(_metric_at(metric, x)) for x in roots}
    e = np.array([roots[d] @ m @ iroots[s] for m, s, d in zip(arrows.mats, arrows.src, arrows.dst)])
    r, _, _ = kernels.polar_batch(e)
    back = np.array([iroots[d] @ q @ roots[s] for q, s, d in zip(r, arrows.src, arrows.dst)])
    return FrameArrowSet(back, arrows.src, arrows.dst, arrows.base)


def unimodular_reduction(arrows: FrameArrowSet, densities: Mapping) -> FrameArrowSet:
    """Scale each arrow so that ``|det_rho| = 1`` with the given densities."""
    from .errors import NonpositiveDensity

    rho = {}
    for x in set(arrows.src) | set(arrows.dst):
        try:
            r = float(densities[x])
        except (KeyError, IndexError):
            raise MissingMetric(x) from None
        if r <= 0:
            raise NonpositiveDensity(f"density at {x!r} is {r}")
        rho[x] = r
    if len(arrows) == 0:
        return arrows
    d = np.array([rho[t] / rho[s] for s, t in zip(arrows.src, arrows.dst)]) * kernels.det3_np(arrows.mats)
    out = arrows.mats * (np.abs(d) ** (-1.0 / 3.0))[:, None, None]
    return FrameArrowSet(out, arrows.src, arrows.dst, arrows.base)


def intersect_arrow_sets(a: FrameArrowSet, b: FrameArrowSet, tol: float = DEDUP_TOL) -> FrameArrowSet:
    if set(a.base) != set(b.base):
        raise BaseMismatch("arrow sets live over different bases")
    gb = _groups(b)
    mask = [_find(b.mats[gb.get((s, d), [])], m, tol) for m, s, d in zip(a.mats, a.src, a.dst)]
    return a.subset(np.array(mask, dtype=bool))


def metric_orthogonal_mask(arrows: FrameArrowSet, metric: Mapping, tol: float = 1e-9) -> np.ndarray:
    out = []
    for m, s, d in zip(arrows.mats, arrows.src, arrows.dst):
        gs, gd = _metric_at(metric, s), _metric_at(metric, d)
        out.append(np.abs(m.T @ gd @ m - gs).max() <= tol * max(1.0, np.abs(gs).max()))
    return np.array(out, dtype=bool)


def unimodular_mask(arrows: FrameArrowSet, densities: Mapping, tol: float = 1e-9) -> np.ndarray:
    dets = kernels.det3_np(arrows.mats)
    ratio = np.array([float(densities[d]) / float(densities[s]) for s, d in zip(arrows.src, arrows.dst)])
    return np.abs(np.abs(ratio * dets) - 1.0) <= tol


# ---------------------------------------------------------------------------
# normalizoids of sampled subgroupoids
# ---------------------------------------------------------------------------

def is_sampled_subgroupoid(sub: FrameArrowSet, tol: float = DEDUP_TOL) -> bool:
    """Unities over the base, closure under inverse and (where composable) composition."""
    for x in sub.base:
        if not _find(sub.vertex_group(x), np.eye(3), tol):
            return False
    if not sub.closed_under_inverse:
        return False
    g = _groups(sub)
    for (x, y), ia in g.items():
        for (y2, z), ib in g.items():
            if y2 != y:
                continue
            target = sub.mats[g.get((x, z), [])]
            for j in ib:
                for i in ia:
                    if not _find(target, sub.mats[j] @ sub.mats[i], tol):
                        return False
    return True


def _same_set(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    return all(_find(b, m, tol) for m in a) and all(_find(a, m, tol) for m in b)


def normalizoid_arrows(ambient: FrameArrowSet, sub: FrameArrowSet, tol: float = DEDUP_TOL) -> FrameArrowSet:
    """Arrows ``F: x -> y`` of ``ambient`` with ``sub_y = F sub_x F^-1`` as finite sets."""
    if not is_sampled_subgroupoid(sub, tol):
        raise NotASubgroupoid("sampled arrow set is not closed")
    vg = {x: sub.vertex_group(x) for x in sub.base}
    mask = []
    for m, s, d in zip(ambient.mats, ambient.src, ambient.dst):
        if s not in vg or d not in vg:
            mask.append(False)
            continue
        minv = kernels.inv3_np(m)
        conj = np.array([m @ h @ minv for h in vg[s]]).reshape(-1, 3, 3)
        mask.append(_same_set(conj, vg[d], tol))
    return ambient.subset(np.array(mask, dtype=bool))


# ---------------------------------------------------------------------------
# G-structures as adapted frame lists
# ---------------------------------------------------------------------------

def adapted_orbit(z, basepoint: Hashable, arrows: FrameArrowSet):
    """Frames ``{g z : g in hom(basepoint, y)}`` for every ``y`` and the
    structure group ``G_z = z^-1 Omega_xx z``.

    Returns ``(frames, structure_group)`` where ``frames`` maps point ids to
    ``(k, 3, 3)`` stacks.
    """
    z = np.asarray(z, dtype=float).reshape(3, 3)
    zinv = kernels.inv3_np(z)
    frames = {}
    for y in arrows.base:
        h = arrows.hom(basepoint, y)
        if y == basepoint and not _find(h, np.eye(3), DEDUP_TOL):
            h = np.concatenate([np.eye(3)[None], h])
        if len(h) == 0:
            raise NotTransitiveFromBasepoint(f"no arrow from {basepoint!r} to {y!r}")
        frames[y] = h @ z
    group = zinv @ frames[basepoint]
    return frames, group


def structure_group_of(frames: Mapping, tol: float = DEDUP_TOL) -> np.ndarray:
    """Common right-coset group of per-point frame lists, or raise."""
    group = None
    for y, fl in frames.items():
        fl = np.asarray(fl, dtype=float).reshape(-1, 3, 3)
        g = kernels.inv3_np(fl[0]) @ fl
        if group is None:
            group = g
        elif not _same_set(g, group, tol):
            raise InconsistentStructureGroup(f"frames at {y!r} are not a coset of the common group")
    return group


def arrows_from_adapted_frames(frames: Mapping, tol: float = DEDUP_TOL) -> FrameArrowSet:
    """All maps ``z_y z_x^-1`` between distinguished frames, deduplicated."""
    if any(len(np.asarray(v).reshape(-1, 9)) == 0 for v in frames.values()):
        raise InconsistentStructureGroup("a point carries no frame")
    structure_group_of(frames, tol)
    base = list(frames)
    mats, src, dst = [], [], []
    stacks = {y: np.asarray(v, dtype=float).reshape(-1, 3, 3) for y, v in frames.items()}
    invs = {y: kernels.inv3_np(v) for y, v in stacks.items()}
    for x in base:
        for y in base:
            for zy in stacks[y]:
                for zxi in invs[x]:
                    mats.append(zy @ zxi)
                    src.append(x)
                    dst.append(y)
    return dedupe(FrameArrowSet(np.array(mats), src, dst, base), tol)
