"""Exact-shape 3x3 linear algebra.

Polar factors, determinants relative to volume densities, unimodular
normalisation, conjugation and the membership predicates used throughout the
package.  Everything here is a pure function of its arguments.
"""
from dataclasses import dataclass
from typing import Hashable

import numpy as np

from . import kernels
from .errors import NonpositiveDensity, SingularMatrix

SINGULAR_DET = 1e-12


@dataclass(frozen=True)
class FrameArrow:
    """Invertible linear map ``T_src B -> T_dst B`` between tangent spaces."""

    matrix: np.ndarray
    src: Hashable
    dst: Hashable

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(3, 3)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def inverse(self) -> "FrameArrow":
        return FrameArrow(inv3(self.matrix), self.dst, self.src)

    def compose(self, first: "FrameArrow") -> "FrameArrow":
        """``self . first``; requires ``first.dst == self.src``."""
        if first.dst != self.src:
            raise ValueError(f"arrows not composable: {first.dst!r} != {self.src!r}")
        return FrameArrow(self.matrix @ first.matrix, first.src, self.dst)


@dataclass(frozen=True)
class PolarFactors:
    R: np.ndarray
    U: np.ndarray
    V: np.ndarray


def _mat(a) -> np.ndarray:
    if isinstance(a, FrameArrow):
        return a.matrix
    return np.asarray(a, dtype=float).reshape(3, 3)


def max_norm(a) -> float:
    return float(np.max(np.abs(a)))


def det3(F) -> float:
    return float(kernels.det3_np(_mat(F)))


def inv3(F) -> np.ndarray:
    F = _mat(F)
    if abs(det3(F)) <= SINGULAR_DET:
        raise SingularMatrix(f"|det| = {abs(det3(F)):.3e} <= {SINGULAR_DET}")
    return kernels.inv3_np(F)


def polar_decompose(F) -> PolarFactors:
    """Return ``R, U, V`` with ``F = R U = V R``.

    ``R`` is orthogonal with ``det R = sign(det F)``; ``U`` and ``V`` are
    symmetric positive definite.  Computed by the scaled Newton iteration
    ``X <- (g X + X^-T / g) / 2``.
    """
    F = _mat(F)
    if abs(det3(F)) <= SINGULAR_DET:
        raise SingularMatrix(f"|det F| = {abs(det3(F)):.3e} <= {SINGULAR_DET}")
    r, u, v = kernels.polar_batch(F[None])
    return PolarFactors(r[0], u[0], v[0])


def polar_decompose_many(Fs):
    """Batched :func:`polar_decompose`; returns the stacked ``(R, U, V)``."""
    Fs = np.asarray(Fs, dtype=float).reshape(-1, 3, 3)
    dets = kernels.det3_np(Fs)
    if np.any(np.abs(dets) <= SINGULAR_DET):
        raise SingularMatrix("batch contains a singular matrix")
    return kernels.polar_batch(Fs)


def det_rho(A, rho_src: float, rho_dst: float) -> float:
    """Determinant of ``A`` measured with volume densities at its two ends."""
    if rho_src <= 0 or rho_dst <= 0:
        raise NonpositiveDensity(f"densities must be positive, got {rho_src}, {rho_dst}")
    return rho_dst / rho_src * det3(A)


def unimodular_part(A, rho_src: float = 1.0, rho_dst: float = 1.0):
    """Scale ``A`` by ``|det_rho A|^(-1/3)``; keeps FrameArrow tagging."""
    d = det_rho(A, rho_src, rho_dst)
    if abs(det3(A)) <= SINGULAR_DET:
        raise SingularMatrix("cannot normalise a singular map")
    out = _mat(A) * abs(d) ** (-1.0 / 3.0)
    if isinstance(A, FrameArrow):
        return FrameArrow(out, A.src, A.dst)
    return out


def conjugate(A, P) -> np.ndarray:
    """``A P A^-1``."""
    A = _mat(A)
    return A @ _mat(P) @ inv3(A)


def is_orthogonal(F, tol: float = 1e-10) -> bool:
    F = _mat(F)
    return max_norm(F.T @ F - np.eye(3)) <= tol


def is_spd(S, tol: float = 1e-10) -> bool:
    S = _mat(S)
    if max_norm(S - S.T) > tol:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (S + S.T)).min() > tol)


def is_unimodular(F, tol: float = 1e-10, rho_src: float = 1.0, rho_dst: float = 1.0) -> bool:
    return abs(abs(det_rho(F, rho_src, rho_dst)) - 1.0) <= tol


# ---------------------------------------------------------------------------
# constructors used across the package
# ---------------------------------------------------------------------------

def rotation(axis, angle: float) -> np.ndarray:
    """Right-handed rotation by ``angle`` about ``axis`` (Rodrigues)."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rotation_between(u, v) -> np.ndarray:
    """Minimal rotation taking direction ``u`` to direction ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    c = float(np.clip(u @ v, -1.0, 1.0))
    w = np.cross(u, v)
    s = np.linalg.norm(w)
    if s < 1e-14:
        if c > 0:
            return np.eye(3)
        # antiparallel: half-turn about any axis perpendicular to u
        trial = np.eye(3)[int(np.argmin(np.abs(u)))]
        perp = np.cross(u, trial)
        return rotation(perp, np.pi)
    return rotation(w, np.arctan2(s, c))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def random_unimodular(rng: np.random.Generator, spread: float = 0.4) -> np.ndarray:
    """Random matrix with ``det = +1``, moderately conditioned."""
    while True:
        m = np.eye(3) + spread * rng.normal(size=(3, 3))
        d = det3(m)
        if d > 0.2:
            return m / d ** (1.0 / 3.0)


def sym_sqrt(S) -> np.ndarray:
    """Principal square root of a symmetric positive definite matrix."""
    S = _mat(S)
    w, q = np.linalg.eigh(0.5 * (S + S.T))
    return (q * np.sqrt(w)) @ q.T


def sym_inv_sqrt(S) -> np.ndarray:
    S = _mat(S)
    w, q = np.linalg.eigh(0.5 * (S + S.T))
    return (q / np.sqrt(w)) @ q.T


def line_normalize(v) -> np.ndarray:
    """Unit vector with first non-negligible component positive."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    for x in v:
        if abs(x) > 1e-8:
            return v if x > 0 else -v
    return v
