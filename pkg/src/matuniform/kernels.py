"""Hot inner loops, each with a numba and a numpy implementation.

Every public kernel ``foo`` dispatches to ``foo_nb`` (numba-compiled) or
``foo_np`` (vectorised numpy) depending on :data:`matuniform._accel.USE_NUMBA`.
Both variants are importable so they can be cross-checked and benchmarked.

Energy parameter rows use the fixed layout given by the ``P_*`` offsets.
"""
import numpy as np

from . import _accel
from ._accel import njit

# model codes
NEO_HOOKEAN = 0
TRANSVERSE_ISO = 1
TRICLINIC = 2
FLUID = 3
FLUID_CRYSTAL_1 = 4

# parameter row layout
P_MU = 0
P_LAM = 1
P_GAMMA = 2
P_KAPPA = 3
P_C = 4
P_AXIS = 5  # 3 entries
P_M = 8  # 9 entries, row-major
P_CIJ = 17  # 9 entries
P_A = 26  # 9 entries
P_S = 35  # 9 entries, right pre-distortion
N_PARAMS = 44

POLAR_MAXITER = 50
POLAR_STEP_TOL = 1e-14


# ---------------------------------------------------------------------------
# 3x3 primitives (plain python arithmetic so numba can inline them)
# ---------------------------------------------------------------------------

@njit
def det3_nb(a):
    return (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
            - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))


@njit
def inv3_nb(a):
    out = np.empty((3, 3))
    c00 = a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    c01 = a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2]
    c02 = a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]
    d = a[0, 0] * c00 + a[0, 1] * c01 + a[0, 2] * c02
    out[0, 0] = c00 / d
    out[1, 0] = c01 / d
    out[2, 0] = c02 / d
    out[0, 1] = (a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2]) / d
    out[1, 1] = (a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]) / d
    out[2, 1] = (a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1]) / d
    out[0, 2] = (a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]) / d
    out[1, 2] = (a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]) / d
    out[2, 2] = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]) / d
    return out


def det3_np(a):
    """Cofactor determinant over the trailing 3x3 axes of ``a``."""
    return (a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]))


def inv3_np(a):
    """Adjugate inverse over the trailing 3x3 axes of ``a``."""
    a = np.asarray(a, dtype=float)
    adj = np.empty_like(a)
    adj[..., 0, 0] = a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1]
    adj[..., 1, 0] = a[..., 1, 2] * a[..., 2, 0] - a[..., 1, 0] * a[..., 2, 2]
    adj[..., 2, 0] = a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]
    adj[..., 0, 1] = a[..., 0, 2] * a[..., 2, 1] - a[..., 0, 1] * a[..., 2, 2]
    adj[..., 1, 1] = a[..., 0, 0] * a[..., 2, 2] - a[..., 0, 2] * a[..., 2, 0]
    adj[..., 2, 1] = a[..., 0, 1] * a[..., 2, 0] - a[..., 0, 0] * a[..., 2, 1]
    adj[..., 0, 2] = a[..., 0, 1] * a[..., 1, 2] - a[..., 0, 2] * a[..., 1, 1]
    adj[..., 1, 2] = a[..., 0, 2] * a[..., 1, 0] - a[..., 0, 0] * a[..., 1, 2]
    adj[..., 2, 2] = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    d = det3_np(a)
    return adj / d[..., None, None]


# ---------------------------------------------------------------------------
# polar decomposition
# ---------------------------------------------------------------------------

@njit
def _polar_one_nb(f):
    x = f.copy()
    prev = np.inf
    scaled = True
    for _ in range(POLAR_MAXITER):
        xi = inv3_nb(x)
        g = 1.0
        if scaled:
            g = abs(det3_nb(x)) ** (-1.0 / 3.0)
        xn = np.empty((3, 3))
        step = 0.0
        for i in range(3):
            for j in range(3):
                xn[i, j] = 0.5 * (g * x[i, j] + xi[j, i] / g)
                d = abs(xn[i, j] - x[i, j])
                if d > step:
                    step = d
        x = xn
        if step < 1e-2:
            scaled = False
        if step < POLAR_STEP_TOL or (step < 1e-10 and step >= prev):
            break
        prev = step
    return x


@njit
def polar_batch_nb(fs):
    n = fs.shape[0]
    rs = np.empty((n, 3, 3))
    us = np.empty((n, 3, 3))
    vs = np.empty((n, 3, 3))
    for k in range(n):
        f = fs[k]
        r = _polar_one_nb(f)
        u = r.T @ f
        v = f @ r.T
        for i in range(3):
            for j in range(3):
                rs[k, i, j] = r[i, j]
                us[k, i, j] = 0.5 * (u[i, j] + u[j, i])
                vs[k, i, j] = 0.5 * (v[i, j] + v[j, i])
    return rs, us, vs


def polar_batch_np(fs):
    fs = np.asarray(fs, dtype=float)
    x = fs.copy()
    n = x.shape[0]
    active = np.ones(n, dtype=bool)
    scaled = np.ones(n, dtype=bool)
    prev = np.full(n, np.inf)
    for _ in range(POLAR_MAXITER):
        if not active.any():
            break
        xa = x[active]
        xi_t = np.swapaxes(inv3_np(xa), -1, -2)
        g = np.where(scaled[active], np.abs(det3_np(xa)) ** (-1.0 / 3.0), 1.0)
        xn = 0.5 * (g[:, None, None] * xa + xi_t / g[:, None, None])
        step = np.abs(xn - xa).max(axis=(1, 2))
        x[active] = xn
        idx = np.flatnonzero(active)
        scaled[idx[step < 1e-2]] = False
        done = (step < POLAR_STEP_TOL) | ((step < 1e-10) & (step >= prev[idx]))
        prev[idx] = step
        active[idx[done]] = False
    r = x
    u = np.swapaxes(r, -1, -2) @ fs
    v = fs @ np.swapaxes(r, -1, -2)
    u = 0.5 * (u + np.swapaxes(u, -1, -2))
    v = 0.5 * (v + np.swapaxes(v, -1, -2))
    return r, u, v


# ---------------------------------------------------------------------------
# strain energies of the bundled model cards
# ---------------------------------------------------------------------------

@njit
def _energy_one_nb(code, p, f0, f, c):
    # f, c: caller-owned 3x3 scratch; right pre-distortion F -> F S
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += f0[i, k] * p[P_S + 3 * k + j]
            f[i, j] = s
    jac = det3_nb(f)
    if code == FLUID or code == FLUID_CRYSTAL_1:
        if jac == 0.0:
            return np.nan
        w = p[P_KAPPA] * (abs(jac) - 1.0) ** 2
        if code == FLUID_CRYSTAL_1:
            num = 0.0
            den = 0.0
            for i in range(3):
                den += f[i, 2] * f[i, 2]
                for j in range(3):
                    num += f[i, 2] * p[P_M + 3 * i + j] * f[j, 2]
            w += p[P_C] * num / den
        return w
    if jac <= 0.0:
        return np.nan
    for i in range(3):
        for j in range(i, 3):
            s = f[0, i] * f[0, j] + f[1, i] * f[1, j] + f[2, i] * f[2, j]
            c[i, j] = s
            c[j, i] = s
    trc = c[0, 0] + c[1, 1] + c[2, 2]
    lj = np.log(jac)
    w = 0.5 * p[P_MU] * (trc - 3.0 - 2.0 * lj) + 0.5 * p[P_LAM] * lj * lj
    if code == TRANSVERSE_ISO:
        aca = 0.0
        for i in range(3):
            for j in range(3):
                aca += p[P_AXIS + i] * c[i, j] * p[P_AXIS + j]
        w += p[P_GAMMA] * (aca - 1.0) ** 2
    elif code == TRICLINIC:
        quad = 0.0
        lin = 0.0
        for i in range(3):
            for j in range(3):
                e = c[i, j] - (1.0 if i == j else 0.0)
                quad += p[P_CIJ + 3 * i + j] * e * e
                lin += p[P_A + 3 * i + j] * e
        w += quad + p[P_GAMMA] * lin * lin
    return w


@njit
def energy_batch_nb(code, params, fs):
    n = fs.shape[0]
    out = np.empty(n)
    f = np.empty((3, 3))
    c = np.empty((3, 3))
    for k in range(n):
        out[k] = _energy_one_nb(code, params, fs[k], f, c)
    return out


def energy_batch_np(code, params, fs):
    p = np.asarray(params, dtype=float)
    s = p[P_S:P_S + 9].reshape(3, 3)
    f = np.asarray(fs, dtype=float) @ s
    jac = det3_np(f)
    if code == FLUID or code == FLUID_CRYSTAL_1:
        with np.errstate(divide="ignore", invalid="ignore"):
            w = p[P_KAPPA] * (np.abs(jac) - 1.0) ** 2
            if code == FLUID_CRYSTAL_1:
                col = f[:, :, 2]
                m = p[P_M:P_M + 9].reshape(3, 3)
                w = w + p[P_C] * np.einsum("ni,ij,nj->n", col, m, col) / np.einsum("ni,ni->n", col, col)
        return np.where(jac == 0.0, np.nan, w)
    c = np.swapaxes(f, -1, -2) @ f
    trc = np.trace(c, axis1=-2, axis2=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lj = np.log(jac)
    w = 0.5 * p[P_MU] * (trc - 3.0 - 2.0 * lj) + 0.5 * p[P_LAM] * lj * lj
    if code == TRANSVERSE_ISO:
        a = p[P_AXIS:P_AXIS + 3]
        w = w + p[P_GAMMA] * (np.einsum("i,nij,j->n", a, c, a) - 1.0) ** 2
    elif code == TRICLINIC:
        e = c - np.eye(3)
        quad = np.einsum("ij,nij->n", p[P_CIJ:P_CIJ + 9].reshape(3, 3), e * e)
        lin = np.einsum("ij,nij->n", p[P_A:P_A + 9].reshape(3, 3), e)
        w = w + quad + p[P_GAMMA] * lin * lin
    return np.where(jac > 0.0, w, np.nan)


# ---------------------------------------------------------------------------
# Riemann tensor from Christoffel symbols and their derivatives
# ---------------------------------------------------------------------------

@njit
def riemann_batch_nb(gam, dgam):
    # gam[n,i,j,k] = Gamma^i_jk ; dgam[n,l,i,j,k] = d_l Gamma^i_jk
    n = gam.shape[0]
    out = np.empty((n, 3, 3, 3, 3))
    for q in range(n):
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    for l in range(3):
                        v = dgam[q, k, i, l, j] - dgam[q, l, i, k, j]
                        for m in range(3):
                            v += gam[q, i, k, m] * gam[q, m, l, j] - gam[q, i, l, m] * gam[q, m, k, j]
                        out[q, i, j, k, l] = v
    return out


def riemann_batch_np(gam, dgam):
    lin = np.einsum("nkilj->nijkl", dgam) - np.einsum("nlikj->nijkl", dgam)
    quad = np.einsum("nikm,nmlj->nijkl", gam, gam) - np.einsum("nilm,nmkj->nijkl", gam, gam)
    return lin + quad


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _contig(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def polar_batch(fs):
    """Orthogonal and stretch factors ``(R, U, V)`` of a stack of matrices."""
    fs = _contig(fs)
    if _accel.USE_NUMBA:
        return polar_batch_nb(fs)
    return polar_batch_np(fs)


def energy_batch(code, params, fs):
    """Strain energies of model ``code`` with parameter row ``params``.

    Returns NaN where the deformation is outside the model's domain.
    """
    fs = _contig(fs)
    if _accel.USE_NUMBA:
        return energy_batch_nb(int(code), _contig(params), fs)
    return energy_batch_np(int(code), params, fs)


def riemann_batch(gam, dgam):
    if _accel.USE_NUMBA:
        return riemann_batch_nb(_contig(gam), _contig(dgam))
    return riemann_batch_np(gam, dgam)
