"""Material and unisymmetric isomorphisms, uniformity and unisymmetry verdicts.

A material isomorphism ``P: T_X -> T_Y`` satisfies ``W(F P, X) = W(F, Y)``
for every deformation ``F`` at ``Y``.  A unisymmetric isomorphism only has to
conjugate the symmetry groups, ``G(Y) = A G(X) A^-1``.  Both are searched from
an archetype point so that a grid needs one search per point; arrows between
arbitrary pairs follow by composition.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .arrowsets import FrameArrowSet
from .classify import (
    FLUID,
    FLUID_CRYSTAL,
    FULLY_ISOTROPIC,
    KINDS,
    TRANSVERSE,
    TRICLINIC,
    ClassifyOptions,
    SymmetryDescriptor,
    classify_points,
)
from .constitutive import (
    TOL_SYM,
    DeformationSample,
    Model,
    default_probes,
    is_symmetry,
    param_signature,
)
from .errors import InvalidDeformation, KindMismatch, SingularMatrix, UnsupportedKind
from .grid import BodyGrid
from .optim import damped_gauss_newton
from .smallmat import (
    SINGULAR_DET,
    inv3,
    random_rotation,
    rotation,
    rotation_between,
)

TOL_ISO = 1e-7


@dataclass
class IsoOptions:
    tol: float = TOL_ISO
    seed: int = 0
    n_rotations: int = 8
    n_stretches: int = 4
    max_iter: int = 200
    probes: Optional[DeformationSample] = None

    def sample(self) -> DeformationSample:
        return self.probes or default_probes()


@dataclass
class IsomorphismResult:
    found: bool
    P: Optional[np.ndarray]
    residual: float
    starts_used: int


@dataclass
class UniformityVerdict:
    uniform: bool
    archetype: int
    arrows: Optional[FrameArrowSet]
    failures: list
    residuals: np.ndarray
    maps: dict = field(default_factory=dict)

    def arrow(self, x: int, y: int) -> np.ndarray:
        """Material isomorphism ``x -> y`` composed through the archetype."""
        return self.maps[y] @ inv3(self.maps[x])


@dataclass
class FgmGroupoidVerdict:
    unisymmetric: bool
    conjugators: Optional[FrameArrowSet]
    descriptors: list
    archetype: int
    failures: list = field(default_factory=list)
    reason: str = ""


# ---------------------------------------------------------------------------
# material isomorphisms
# ---------------------------------------------------------------------------

def isomorphism_residual(model: Model, X, Y, P, sample: DeformationSample = None) -> float:
    """``max_F |W(F P, X) - W(F, Y)|`` over the probe deformations."""
    P = np.asarray(P, dtype=float)
    if abs(np.linalg.det(P)) < SINGULAR_DET:
        raise SingularMatrix("isomorphism candidate is singular")
    probes = (sample or default_probes()).probes
    wx = model.energies(probes @ P, X)
    wy = model.energies(probes, Y)
    if not (np.all(np.isfinite(wx)) and np.all(np.isfinite(wy))):
        raise InvalidDeformation("a probe left the domain of the constitutive law")
    return float(np.max(np.abs(wx - wy)))


def _iso_fun(model, X, Y, probes):
    wy = model.energies(probes, Y)

    def fun(xs):
        ps = xs.reshape(-1, 3, 3)
        fs = (probes[None] @ ps[:, None]).reshape(-1, 3, 3)
        return model.energies(fs, X).reshape(len(ps), -1) - wy[None]
    return fun


def find_material_isomorphism(model: Model, X, Y, opts: IsoOptions = None,
                              seeds=()) -> IsomorphismResult:
    """Multi-start damped Gauss-Newton search for ``P: T_X -> T_Y``.

    The caller's ``seeds`` are tried first, then the identity, random
    rotations and random stretches.  The search stops at the first start whose
    residual is within ``opts.tol``.  A negative result means only that no
    isomorphism was found.
    """
    opts = opts or IsoOptions()
    probes = opts.sample().probes
    fun = _iso_fun(model, X, Y, probes)
    rng = np.random.default_rng(opts.seed)
    starts = [np.asarray(s, dtype=float) for s in seeds] + [np.eye(3)]
    starts += [random_rotation(rng) for _ in range(opts.n_rotations)]
    for _ in range(opts.n_stretches):
        q = random_rotation(rng)
        starts.append(q @ np.diag(rng.uniform(0.6, 1.6, 3)) @ q.T)
    best_p, best_r = None, np.inf
    used = 0
    for p0 in starts:
        used += 1
        out = damped_gauss_newton(fun, p0.ravel(), target=opts.tol * 1e-5, max_iter=opts.max_iter)
        p = out.x.reshape(3, 3)
        if abs(np.linalg.det(p)) < SINGULAR_DET:
            continue
        if out.max_abs < best_r:
            best_p, best_r = p, out.max_abs
        if best_r <= opts.tol:
            break
    found = best_r <= opts.tol
    return IsomorphismResult(found, best_p if found else None, float(best_r), used)


def _grid_points(grid):
    if isinstance(grid, BodyGrid):
        return grid.points(), grid.center_index
    pts = np.asarray(grid, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("empty point set")
    return pts, len(pts) // 2


def is_uniform(model: Model, grid, opts: IsoOptions = None, cache: dict = None) -> UniformityVerdict:
    """Search an isomorphism from the archetype (grid centre) to every point.

    Points are visited in grid order and each search is seeded with the last
    accepted map, which keeps smoothly varying bodies cheap.  Searches are
    cached on the pair of local laws.  The seed for point ``i`` is
    ``opts.seed ^ i``.
    """
    opts = opts or IsoOptions()
    pts, arch = _grid_points(grid)
    cache = {} if cache is None else cache
    sig0 = param_signature(model, pts[arch])
    maps, failures = {}, []
    residuals = np.zeros(len(pts))
    last = None
    for i, Y in enumerate(pts):
        key = (sig0, param_signature(model, Y))
        if key not in cache:
            local = IsoOptions(**{**opts.__dict__, "seed": opts.seed ^ i})
            seeds = [] if last is None else [last]
            cache[key] = find_material_isomorphism(model, pts[arch], Y, local, seeds=seeds)
        res = cache[key]
        residuals[i] = res.residual
        if res.found:
            maps[i] = res.P
            last = res.P
        else:
            failures.append(i)
    uniform = not failures
    arrows = None
    if uniform:
        idx = sorted(maps)
        arrows = FrameArrowSet(np.array([maps[i] for i in idx]), np.full(len(idx), arch),
                               np.array(idx), tuple(range(len(pts))))
    return UniformityVerdict(uniform, int(arch), arrows, failures, residuals, maps)


def symmetry_conjugation_check(model: Model, X, Y, P, descX: SymmetryDescriptor,
                               descY: SymmetryDescriptor, tol: float = TOL_ISO,
                               sample: DeformationSample = None) -> bool:
    """``P g P^-1`` is a symmetry at ``Y`` for every generator ``g`` of ``G(X)``
    and ``P^-1 h P`` is one at ``X`` for every generator ``h`` of ``G(Y)``."""
    P = np.asarray(P, dtype=float)
    Pi = inv3(P)
    try:
        fwd = all(is_symmetry(model, Y, P @ g @ Pi, tol, sample) for g in descX.generators)
        bwd = all(is_symmetry(model, X, Pi @ h @ P, tol, sample) for h in descY.generators)
    except InvalidDeformation:
        return False
    return fwd and bwd


# ---------------------------------------------------------------------------
# unisymmetric isomorphisms
# ---------------------------------------------------------------------------

def group_membership_defect(desc: SymmetryDescriptor, P) -> float:
    """Distance of ``P`` from the template group of ``desc`` (0 for members)."""
    z = desc.undistorted_frame
    Q = inv3(z) @ np.asarray(P, dtype=float) @ z
    if desc.kind == FULLY_ISOTROPIC:
        return float(np.abs(Q.T @ Q - np.eye(3)).max())
    if desc.kind == TRANSVERSE:
        b = desc.canonical_axis
        return float(max(np.abs(Q.T @ Q - np.eye(3)).max(), np.abs(Q @ b - b).max()))
    if desc.kind == TRICLINIC:
        return float(np.abs(Q - np.eye(3)).max())
    if desc.kind == FLUID:
        return float(abs(abs(np.linalg.det(Q)) - 1.0))
    if desc.kind == FLUID_CRYSTAL:
        return float(max(abs(Q[0, 2]), abs(Q[1, 2]), abs(abs(np.linalg.det(Q)) - 1.0)))
    raise UnsupportedKind(desc.kind)


def conjugation_defect(A, descX: SymmetryDescriptor, descY: SymmetryDescriptor) -> float:
    """Worst template-membership defect of ``A G(X) A^-1`` and ``A^-1 G(Y) A``."""
    A = np.asarray(A, dtype=float)
    Ai = inv3(A)
    fwd = max(group_membership_defect(descY, A @ g @ Ai) for g in descX.generators)
    bwd = max(group_membership_defect(descX, Ai @ h @ A) for h in descY.generators)
    return float(max(fwd, bwd))


def find_unisymmetric_isomorphism(descX: SymmetryDescriptor, descY: SymmetryDescriptor,
                                  strict: bool = False) -> IsomorphismResult:
    """Closed-form conjugator ``A`` with ``G(Y) = A G(X) A^-1``.

    Different kinds give a not-found result, or :class:`KindMismatch` when
    ``strict`` is set.
    """
    if descX is None or descY is None:
        raise UnsupportedKind("unclassified point")
    if descX.kind != descY.kind:
        if strict:
            raise KindMismatch(f"{descX.kind} vs {descY.kind}")
        return IsomorphismResult(False, None, np.inf, 1)
    kind = descX.kind
    zx, zy = descX.undistorted_frame, descY.undistorted_frame
    if kind in (TRICLINIC, FLUID):
        A = np.eye(3)
    elif kind == FULLY_ISOTROPIC:
        A = zy @ inv3(zx)
    elif kind == TRANSVERSE:
        A = zy @ rotation_between(descX.canonical_axis, descY.canonical_axis) @ inv3(zx)
    elif kind == FLUID_CRYSTAL:
        A = rotation_between(descX.axis, descY.axis)
    else:
        raise UnsupportedKind(kind)
    return IsomorphismResult(True, A, conjugation_defect(A, descX, descY), 1)


def fgm_verdict(model: Model, grid, descriptors: list = None, opts: ClassifyOptions = None,
                tol: float = 1e-7) -> FgmGroupoidVerdict:
    """Unisymmetry of the body: one kind everywhere and conjugators from the archetype."""
    pts, arch = _grid_points(grid)
    if descriptors is None:
        descriptors = classify_points(model, pts, opts)
    unclassified = [i for i, d in enumerate(descriptors) if d is None]
    if unclassified:
        return FgmGroupoidVerdict(False, None, descriptors, int(arch), unclassified,
                                  "unclassifiable points")
    kinds = {d.kind for d in descriptors}
    if len(kinds) > 1:
        ref = descriptors[arch].kind
        bad = [i for i, d in enumerate(descriptors) if d.kind != ref]
        return FgmGroupoidVerdict(False, None, descriptors, int(arch), bad,
                                  "mixed kinds: " + ", ".join(sorted(kinds)))
    mats, failures = [], []
    for i, d in enumerate(descriptors):
        res = find_unisymmetric_isomorphism(descriptors[arch], d)
        if res.found and res.residual <= tol:
            mats.append(res.P)
        else:
            failures.append(i)
    if failures:
        return FgmGroupoidVerdict(False, None, descriptors, int(arch), failures,
                                  "conjugator defect above tolerance")
    conj = FrameArrowSet(np.array(mats), np.full(len(pts), arch), np.arange(len(pts)),
                         tuple(range(len(pts))))
    return FgmGroupoidVerdict(True, conj, descriptors, int(arch), [], "")


# ---------------------------------------------------------------------------
# normalizer families and their reductions
# ---------------------------------------------------------------------------

def _random_invertible(rng):
    while True:
        m = rng.normal(size=(3, 3))
        if abs(np.linalg.det(m)) > 0.1:
            return m


@dataclass
class NormalizerFamily:
    """Parametrised normalizer of a symmetry group, in the model's coordinates.

    ``draw(rng)`` returns a random member built from the documented
    generators.  ``contains`` decides membership by the conjugation predicate,
    which may admit more than the documented generators produce.
    """

    desc: SymmetryDescriptor
    description: str
    draw_canonical: Callable

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        z = self.desc.undistorted_frame
        return z @ self.draw_canonical(rng) @ inv3(z)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.array([self.draw(rng) for _ in range(n)])

    def contains(self, A, tol: float = 1e-9) -> bool:
        A = np.asarray(A, dtype=float)
        if abs(np.linalg.det(A)) < SINGULAR_DET:
            return False
        return conjugation_defect(A, self.desc, self.desc) <= tol


def _axis_basis(b) -> np.ndarray:
    """Orthonormal basis with ``b`` as first column."""
    b = np.asarray(b, dtype=float) / np.linalg.norm(b)
    t = np.eye(3)[int(np.argmin(np.abs(b)))]
    u = np.cross(b, t)
    u /= np.linalg.norm(u)
    return np.column_stack([b, u, np.cross(b, u)])


def _transverse_canonical(desc, theta, alpha, beta) -> np.ndarray:
    B = _axis_basis(desc.canonical_axis)
    return rotation(B[:, 0], theta) @ B @ np.diag([alpha, beta, beta]) @ B.T


def transverse_normalizer_member(desc: SymmetryDescriptor, theta: float, alpha: float,
                                 beta: float) -> np.ndarray:
    """Axis rotation by ``theta`` times ``diag(alpha, beta, beta)`` (axis first)."""
    if desc.kind != TRANSVERSE:
        raise UnsupportedKind(desc.kind)
    z = desc.undistorted_frame
    return z @ _transverse_canonical(desc, theta, alpha, beta) @ inv3(z)


def normalizer_generators(desc: SymmetryDescriptor) -> NormalizerFamily:
    """Generator family of the normalizer ``N(X)`` of ``G(X)``."""
    kind = desc.kind
    if kind == FULLY_ISOTROPIC:
        def draw(rng):
            q = random_rotation(rng) * (1.0 if rng.random() < 0.5 else -1.0)
            return np.exp(rng.uniform(-1.0, 1.0)) * q
        return NormalizerFamily(desc, "c Q, c > 0, Q orthogonal", draw)
    if kind in (TRICLINIC, FLUID):
        return NormalizerFamily(desc, "all invertible maps", _random_invertible)
    if kind == TRANSVERSE:
        def draw(rng):
            alpha, beta = np.exp(rng.uniform(-1.0, 1.0, 2))
            return _transverse_canonical(desc, rng.uniform(-np.pi, np.pi), alpha, beta)
        return NormalizerFamily(
            desc, "rotations about the axis and diag(alpha, beta, beta) in axis-first coordinates", draw)
    if kind == FLUID_CRYSTAL:
        def draw(rng):
            m = rng.normal(size=(3, 3))
            m[0, 2] = m[1, 2] = 0.0
            m[2, 2] = np.sign(m[2, 2] or 1.0) * max(abs(m[2, 2]), 0.3)
            while abs(np.linalg.det(m[:2, :2])) < 0.1:
                m[:2, :2] = rng.normal(size=(2, 2))
            return m
        return NormalizerFamily(desc, "invertible maps with third column along the axis", draw)
    raise UnsupportedKind(kind)


# group labels for the reduction table
O3 = "O(3)"
U3 = "U(3)"
GX = "G(X)"
AXIS_LINE_STABILIZER = "axis-line stabilizer in O(3)"


@dataclass
class ReducedGroup:
    """Orthogonal (solids) or unimodular (fluids) part of the normalizer."""

    kind: str
    reduction: str  # value from the published table
    reduction_kind: str  # classification kind realising that value
    axis: Optional[np.ndarray]
    predicate_value: str  # value recomputed from the membership predicate
    predicate_members: dict  # test family -> all members passed

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "reduction": self.reduction,
            "reduction_kind": self.reduction_kind,
            "axis": None if self.axis is None else [float(v) for v in self.axis],
            "predicate_value": self.predicate_value,
            "predicate_members": dict(self.predicate_members),
        }


_TABLE = {
    FULLY_ISOTROPIC: (O3, FULLY_ISOTROPIC),
    TRICLINIC: (O3, FULLY_ISOTROPIC),
    TRANSVERSE: (GX, TRANSVERSE),
    FLUID_CRYSTAL: (GX, FLUID_CRYSTAL),
    FLUID: (U3, FLUID),
}


def _test_families(desc, rng, n=8) -> dict:
    """Canonical-frame test matrices grouped by family."""
    if desc.kind in (FLUID, FLUID_CRYSTAL):
        e3 = np.array([0.0, 0.0, 1.0])
        first = []
        for _ in range(n):
            m = rng.normal(size=(3, 3))
            m[0, 2] = m[1, 2] = 0.0
            m[2, 2] = 1.0
            m[:2, :2] /= np.sqrt(abs(np.linalg.det(m[:2, :2])))
            first.append(m)
        generic = []
        for _ in range(n):
            m = _random_invertible(rng)
            generic.append(m / np.cbrt(abs(np.linalg.det(m))))
        return {
            "rotations_about_axis": [rotation(e3, t) for t in rng.uniform(-np.pi, np.pi, n)],
            "first_kind_unimodular": first,
            "generic_unimodular": generic,
        }
    b = desc.canonical_axis if desc.kind == TRANSVERSE else np.array([0.0, 0.0, 1.0])
    B = _axis_basis(b)
    perp = [B[:, 1] * np.cos(t) + B[:, 2] * np.sin(t) for t in rng.uniform(0, np.pi, n)]
    return {
        "axis_rotations": [rotation(b, t) for t in rng.uniform(-np.pi, np.pi, n)],
        "transverse_half_turns": [rotation(u, np.pi) for u in perp],
        "axis_reflections": [np.eye(3) - 2.0 * np.outer(b, b)] + [np.eye(3) - 2.0 * np.outer(u, u) for u in perp],
        "generic_rotations": [random_rotation(rng) for _ in range(n)],
    }


def reduced_vertex_group(desc: SymmetryDescriptor, seed: int = 0) -> ReducedGroup:
    """Published reduction of the normalizer, with a predicate-based recount.

    The recount tests orthogonal (solids) or unimodular (fluids) matrices from
    several families against the conjugation predicate and names the group
    they span.
    """
    if desc is None or desc.kind not in KINDS:
        raise UnsupportedKind(getattr(desc, "kind", None))
    family = normalizer_generators(desc)
    rng = np.random.default_rng(seed)
    z = desc.undistorted_frame
    zi = inv3(z)
    members = {
        name: all(family.contains(z @ m @ zi, tol=1e-9) for m in mats)
        for name, mats in _test_families(desc, rng).items()
    }
    if desc.kind in (FLUID, FLUID_CRYSTAL):
        if all(members.values()):
            value = U3
        elif members["first_kind_unimodular"] and not members["generic_unimodular"]:
            value = GX
        else:
            value = "unrecognised"
    else:
        if all(members.values()):
            value = O3
        elif members["axis_rotations"] and not members["generic_rotations"]:
            value = AXIS_LINE_STABILIZER if members["transverse_half_turns"] else GX
        else:
            value = "unrecognised"
    reduction, reduction_kind = _TABLE[desc.kind]
    return ReducedGroup(desc.kind, reduction, reduction_kind, desc.axis, value, members)
