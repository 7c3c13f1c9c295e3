"""Synthetic hyperelastic model zoo and material-symmetry predicates.

Every bundled model is a scalar strain energy ``W(F, X)`` whose parameters
are fields over the body chart.  An optional ``distortion`` field ``S(X)``
substitutes ``F -> F S(X)`` in the energy, which is how distorted reference
states are produced.

None of the models enforce frame indifference; the symmetry machinery only
ever acts on the right of ``F``.
"""
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import kernels
from .errors import InvalidDeformation, UnknownPoint
from .smallmat import random_rotation, rotation, rotation_between

TOL_SYM = 1e-8


# ---------------------------------------------------------------------------
# parameter fields
# ---------------------------------------------------------------------------

class ParamField:
    shape: tuple = ()

    def __call__(self, X) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantField(ParamField):
    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))

    @property
    def shape(self):
        return self.value.shape

    def __call__(self, X):
        return self.value


@dataclass(frozen=True)
class LinearField(ParamField):
    """``value + gradient @ X``; ``gradient`` has shape ``value.shape + (3,)``."""

    value: np.ndarray
    gradient: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.value, dtype=float)
        g = np.asarray(self.gradient, dtype=float).reshape(v.shape + (3,))
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "gradient", g)

    @property
    def shape(self):
        return self.value.shape

    def __call__(self, X):
        return self.value + self.gradient @ np.asarray(X, dtype=float)


@dataclass(frozen=True)
class TableField(ParamField):
    """Values tabulated at grid nodes; lookup requires an exact node hit."""

    coords: np.ndarray  # (n, 3)
    values: np.ndarray  # (n, ...)
    atol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def shape(self):
        return self.values.shape[1:]

    def __call__(self, X):
        d = np.abs(self.coords - np.asarray(X, dtype=float)).max(axis=1)
        i = int(np.argmin(d))
        if d[i] > self.atol:
            raise UnknownPoint(f"no tabulated value at {tuple(np.round(X, 12))}")
        return self.values[i]


@dataclass(frozen=True)
class FunctionField(ParamField):
    """Arbitrary callable field; used by tests and programmatic bodies."""

    func: object

    def __call__(self, X):
        return np.asarray(self.func(np.asarray(X, dtype=float)), dtype=float)


@dataclass(frozen=True)
class ProductField(ParamField):
    """Pointwise matrix product ``left(X) @ right(X)``."""

    left: ParamField
    right: ParamField

    def __call__(self, X):
        return np.asarray(self.left(X)).reshape(3, 3) @ np.asarray(self.right(X)).reshape(3, 3)


def as_field(v) -> ParamField:
    if isinstance(v, ParamField):
        return v
    if callable(v):
        return FunctionField(v)
    return ConstantField(v)


# ---------------------------------------------------------------------------
# model cards
# ---------------------------------------------------------------------------

TRICLINIC_CIJ = np.array([[1.0, 0.7, 0.45], [0.7, 1.3, 0.55], [0.45, 0.55, 0.8]])
TRICLINIC_A = np.array([[1.0, 0.3, 0.2], [0.3, 0.6, 0.1], [0.2, 0.1, 0.4]])
CRYSTAL_M = np.array([[2.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 0.5]])

_SLOTS = {
    "mu": (kernels.P_MU, ()),
    "lam": (kernels.P_LAM, ()),
    "gamma": (kernels.P_GAMMA, ()),
    "kappa": (kernels.P_KAPPA, ()),
    "c": (kernels.P_C, ()),
    "axis": (kernels.P_AXIS, (3,)),
    "M": (kernels.P_M, (3, 3)),
    "cij": (kernels.P_CIJ, (3, 3)),
    "A": (kernels.P_A, (3, 3)),
    "distortion": (kernels.P_S, (3, 3)),
}


@dataclass(frozen=True)
class ModelCard:
    model_id: str
    code: int
    defaults: Mapping
    kind: str
    formula: str
    solid: bool


MODEL_CARDS = {
    "neo_hookean": ModelCard(
        "neo_hookean", kernels.NEO_HOOKEAN, {"mu": 1.0, "lam": 1.0},
        "FullyIsotropicSolid", "mu/2 (tr C - 3 - 2 ln J) + lam/2 (ln J)^2", True),
    "transverse_iso": ModelCard(
        "transverse_iso", kernels.TRANSVERSE_ISO,
        {"mu": 1.0, "lam": 1.0, "gamma": 1.0, "axis": [1.0, 0.0, 0.0]},
        "TransverselyIsotropicSolid", "neo_hookean + gamma (a.C.a - 1)^2", True),
    "triclinic": ModelCard(
        "triclinic", kernels.TRICLINIC,
        {"mu": 1.0, "lam": 1.0, "gamma": 1.0, "cij": TRICLINIC_CIJ, "A": TRICLINIC_A},
        "TriclinicSolid", "neo_hookean + sum c_ij (C - I)_ij^2 + gamma tr(A (C - I))^2", True),
    "fluid": ModelCard(
        "fluid", kernels.FLUID, {"kappa": 1.0},
        "Fluid", "kappa (|J| - 1)^2", False),
    "fluid_crystal_1": ModelCard(
        "fluid_crystal_1", kernels.FLUID_CRYSTAL_1, {"kappa": 1.0, "c": 1.0, "M": CRYSTAL_M},
        "FluidCrystalFirstKind", "kappa (|J| - 1)^2 + c u.M.u,  u = F e3 / |F e3|", False),
}


class Model:
    """Common evaluation surface of :class:`ConstitutiveModel` and :class:`SplitModel`."""

    def card_at(self, X):
        """Return ``(ModelCard, parameter row)`` at point ``X``."""
        raise NotImplementedError

    def distorted(self, S) -> "Model":
        raise NotImplementedError

    def energies(self, Fs, X) -> np.ndarray:
        """Energies for a stack of deformations; NaN outside the domain."""
        card, row = self.card_at(X)
        return kernels.energy_batch(card.code, row, np.asarray(Fs, dtype=float).reshape(-1, 3, 3))

    def evaluate(self, F, X) -> np.ndarray:
        w = self.energies(np.asarray(F, dtype=float)[None], X)
        if not np.isfinite(w[0]):
            card, _ = self.card_at(X)
            raise InvalidDeformation(f"{card.model_id}: deformation outside the model domain (det F = {np.linalg.det(F):.3g})")
        return w


@dataclass(frozen=True)
class ConstitutiveModel(Model):
    model_id: str
    fields: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.model_id not in MODEL_CARDS:
            raise KeyError(f"unknown model id {self.model_id!r}")
        card = MODEL_CARDS[self.model_id]
        merged = {k: as_field(v) for k, v in card.defaults.items()}
        for k, v in self.fields.items():
            if k not in _SLOTS:
                raise KeyError(f"unknown parameter {k!r} for {self.model_id}")
            merged[k] = as_field(v)
        object.__setattr__(self, "fields", merged)

    @property
    def card(self) -> ModelCard:
        return MODEL_CARDS[self.model_id]

    def param(self, name, X) -> np.ndarray:
        if name == "distortion" and name not in self.fields:
            return np.eye(3)
        v = np.asarray(self.fields[name](X), dtype=float)
        if name == "axis":
            v = v / np.linalg.norm(v)
        return v

    def card_at(self, X):
        row = np.zeros(kernels.N_PARAMS)
        row[kernels.P_S:kernels.P_S + 9] = np.eye(3).ravel()
        for name, f in self.fields.items():
            off, shape = _SLOTS[name]
            v = self.param(name, X)
            n = int(np.prod(shape)) if shape else 1
            row[off:off + n] = np.asarray(v, dtype=float).ravel()
        return self.card, row

    def distorted(self, S) -> "ConstitutiveModel":
        """Model with ``F -> F S`` substituted in the energy (``S`` constant or field)."""
        new = as_field(S) if not isinstance(S, np.ndarray) else ConstantField(S)
        fields = dict(self.fields)
        old = fields.get("distortion")
        fields["distortion"] = new if old is None else ProductField(new, old)
        return replace(self, fields=fields)


@dataclass(frozen=True)
class SplitModel(Model):
    """Piecewise body: ``below`` where ``X[axis] < threshold``, else ``above``."""

    axis: int
    threshold: float
    below: Model
    above: Model

    @property
    def model_id(self):
        return "split"

    def part(self, X) -> Model:
        return self.below if np.asarray(X)[self.axis] < self.threshold else self.above

    def card_at(self, X):
        return self.part(X).card_at(X)

    def param(self, name, X):
        return self.part(X).param(name, X)

    def distorted(self, S) -> "SplitModel":
        return replace(self, below=self.below.distorted(S), above=self.above.distorted(S))


def param_signature(model: Model, X) -> bytes:
    """Bytes identifying the local constitutive law at ``X`` (for caching)."""
    card, row = model.card_at(X)
    return bytes([card.code]) + np.ascontiguousarray(row).tobytes()


# ---------------------------------------------------------------------------
# probes and symmetry predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeformationSample:
    probes: np.ndarray
    seed: int

    def __len__(self):
        return len(self.probes)


def make_probes(seed: int = 0) -> DeformationSample:
    """The 24 probe deformations: identity, 3 isochoric axial stretches,
    3 simple shears, 12 random stretch-rotation products, 5 near-identity maps."""
    rng = np.random.default_rng(seed)
    probes = [np.eye(3)]
    for i in range(3):
        d = np.ones(3)
        d[i] = 1.25
        d[(i + 1) % 3] = 0.8
        probes.append(np.diag(d))
    for i in range(3):
        s = np.eye(3)
        s[i, (i + 1) % 3] = 0.3
        probes.append(s)
    while len(probes) < 19:
        q = random_rotation(rng)
        u = q @ np.diag(rng.uniform(0.6, 1.6, 3)) @ q.T
        f = u @ random_rotation(rng)
        if np.abs(f).max() <= 2.0:
            probes.append(f)
    while len(probes) < 24:
        f = np.eye(3) + 0.05 * rng.normal(size=(3, 3))
        if np.linalg.det(f) > 0:
            probes.append(f)
    return DeformationSample(np.array(probes), seed)


_DEFAULT_PROBES = None


def default_probes() -> DeformationSample:
    global _DEFAULT_PROBES
    if _DEFAULT_PROBES is None:
        _DEFAULT_PROBES = make_probes(0)
    return _DEFAULT_PROBES


def evaluate(model: Model, F, X) -> np.ndarray:
    return model.evaluate(F, X)


def symmetry_residual(model: Model, X, P, sample: DeformationSample = None) -> float:
    """``max_F |W(F P, X) - W(F, X)|`` over the probe set."""
    sample = sample or default_probes()
    P = np.asarray(P, dtype=float).reshape(3, 3)
    w0 = model.energies(sample.probes, X)
    w1 = model.energies(sample.probes @ P, X)
    if not (np.all(np.isfinite(w0)) and np.all(np.isfinite(w1))):
        raise InvalidDeformation("some probe F.P lies outside the model domain")
    return float(np.max(np.abs(w1 - w0)))


def is_symmetry(model: Model, X, P, tol: float = TOL_SYM, sample: DeformationSample = None) -> bool:
    return symmetry_residual(model, X, P, sample) <= tol


def first_kind_matrix(a, b, c, d, e, f, g) -> np.ndarray:
    return np.array([[a, b, 0.0], [c, d, 0.0], [e, f, g]])


def documented_symmetries(model: Model, X):
    """Known symmetry generators and known non-symmetries of the card at ``X``.

    Both lists are expressed in the model's own (possibly distorted) frame.
    """
    card, _ = model.card_at(X)
    S = model.param("distortion", X).reshape(3, 3)
    Si = np.linalg.inv(S)
    rng = np.random.default_rng(7)
    if card.model_id == "neo_hookean":
        gens = [random_rotation(rng) for _ in range(4)] + [rotation([0, 0, 1], 0.3)]
        non = [np.diag([2.0, 1.0, 1.0]), np.array([[1, 0.3, 0], [0, 1, 0], [0, 0, 1.0]])]
    elif card.model_id == "transverse_iso":
        a = model.param("axis", X)
        perp = np.cross(a, np.eye(3)[int(np.argmin(np.abs(a)))])
        gens = [rotation(a, t) for t in (0.4, 1.7, np.pi)] + [rotation(perp, np.pi)]
        non = [rotation(perp, np.pi / 2), np.diag([2.0, 1.0, 1.0]), random_rotation(rng)]
    elif card.model_id == "triclinic":
        gens = [np.eye(3)]
        non = [np.diag([1.0, -1.0, -1.0]), np.diag([-1.0, 1.0, -1.0]), np.diag([-1.0, -1.0, 1.0]),
               random_rotation(rng)]
    elif card.model_id == "fluid":
        gens = [np.diag([2.0, 0.5, 1.0]), np.array([[1, 0.7, 0], [0, 1, 0], [0.2, 0, 1.0]]),
                np.diag([-1.0, 1.0, 1.0]), random_rotation(rng)]
        non = [np.diag([2.0, 1.0, 1.0]), 0.9 * np.eye(3)]
    elif card.model_id == "fluid_crystal_1":
        gens = [first_kind_matrix(2.0, 0.0, 0.0, 0.5, 0.0, 0.0, 1.0),
                first_kind_matrix(1.0, 0.4, 0.0, 1.0, 0.3, -0.2, 1.0),
                first_kind_matrix(np.cos(0.8), -np.sin(0.8), np.sin(0.8), np.cos(0.8), 0.0, 0.0, 1.0),
                first_kind_matrix(1.0, 0.0, 0.0, 1.0, 0.5, 0.5, -1.0)]
        non = [rotation([1, 0, 0], np.pi / 2), np.array([[1, 0, 0.4], [0, 1, 0], [0, 0, 1.0]]),
               first_kind_matrix(2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0)]
    else:  # pragma: no cover
        raise KeyError(card.model_id)
    conj = lambda m: S @ m @ Si  # noqa: E731
    return [conj(g) for g in gens], [conj(n) for n in non]


def axis_aligned_frame(axis) -> np.ndarray:
    """A rotation whose first column is ``axis``."""
    return rotation_between([1.0, 0.0, 0.0], axis)
