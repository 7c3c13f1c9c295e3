import numpy as np

from matuniform.optim import damped_gauss_newton


def rosenbrock(xs):
    x, y = xs[:, 0], xs[:, 1]
    return np.stack([10 * (y - x ** 2), 1 - x], axis=1)


def test_rosenbrock():
    out = damped_gauss_newton(rosenbrock, [-1.2, 1.0], target=1e-12)
    assert np.allclose(out.x, [1.0, 1.0], atol=1e-8)
    assert out.max_abs <= 1e-12


def test_linear_least_squares(rng):
    A = rng.normal(size=(8, 3))
    b = rng.normal(size=8)
    out = damped_gauss_newton(lambda xs: xs @ A.T - b, np.zeros(3), max_iter=50)
    ref = np.linalg.lstsq(A, b, rcond=None)[0]
    assert np.allclose(out.x, ref, atol=1e-7)


def test_nonfinite_start_stops():
    out = damped_gauss_newton(lambda xs: np.full((len(xs), 2), np.nan), [0.0, 0.0])
    assert out.max_abs == np.inf


def test_domain_edge_one_sided_differences():
    # residual undefined for x < 0; minimum at the boundary neighbourhood x = 1e-3
    def fun(xs):
        x = xs[:, 0]
        r = np.where(x > 0, np.sqrt(np.abs(x)) - np.sqrt(1e-3), np.nan)
        return r[:, None]
    out = damped_gauss_newton(fun, [0.5], target=1e-10)
    assert abs(out.x[0] - 1e-3) < 1e-6
