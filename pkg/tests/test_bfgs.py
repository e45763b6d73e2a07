import numpy as np
import pytest
import scipy.optimize

from gibbsvqa.bfgs import LineSearchError, bfgs_minimize, strong_wolfe
from gibbsvqa.errors import InvalidArgumentError


def rosen(x):
    return scipy.optimize.rosen(x)


def rosen_grad(x):
    return scipy.optimize.rosen_der(x)


def test_quadratic_bowl():
    rng = np.random.default_rng(0)
    a = rng.normal(size=6)
    res = bfgs_minimize(lambda x: float((x - a) @ (x - a)), lambda x: 2 * (x - a), rng.normal(size=6))
    assert res.converged
    assert np.max(np.abs(res.final_parameters - a)) <= 1e-8


def test_rosenbrock():
    res = bfgs_minimize(rosen, rosen_grad, [-1.2, 1.0])
    assert res.converged
    assert np.max(np.abs(res.final_parameters - 1)) <= 1e-6


def test_rosenbrock_matches_scipy():
    x0 = np.array([-1.2, 1.0, 0.3, -0.5])
    ours = bfgs_minimize(rosen, rosen_grad, x0)
    ref = scipy.optimize.minimize(rosen, x0, jac=rosen_grad, method="BFGS", options={"gtol": 1e-10})
    assert np.allclose(ours.final_parameters, ref.x, atol=1e-6)


def test_trace_is_monotone():
    res = bfgs_minimize(rosen, rosen_grad, [-1.2, 1.0], keep_trace=True)
    costs = [f for _, f, _ in res.trace]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert res.trace[-1][1] == res.final_value
    assert res.final_value <= rosen(np.array([-1.2, 1.0]))


def test_counts_reported():
    res = bfgs_minimize(rosen, rosen_grad, [0.0, 0.0])
    assert res.iterations > 0
    assert res.function_evaluations >= res.iterations
    assert res.gradient_evaluations >= res.iterations


def test_nonfinite_start():
    with pytest.raises(InvalidArgumentError):
        bfgs_minimize(lambda x: float("nan"), lambda x: np.zeros_like(x), [1.0])


def test_bad_gradient_reports_failure():
    # gradient with the wrong sign: every search direction is uphill
    res = bfgs_minimize(lambda x: float(x @ x), lambda x: -2 * x, [1.0, 2.0])
    assert not res.converged
    assert res.final_value <= 5.0


def test_maxiter():
    res = bfgs_minimize(rosen, rosen_grad, [-1.2, 1.0], maxiter=3)
    assert res.iterations == 3
    assert not res.converged


def test_strong_wolfe_conditions():
    f = lambda a: (a - 2.0) ** 2 + 1
    df = lambda a: 2 * (a - 2.0)
    c1, c2 = 1e-4, 0.9
    a, fa = strong_wolfe(f, df, f(0.0), df(0.0), 0.1, c1, c2)
    assert fa <= f(0.0) + c1 * a * df(0.0)
    assert abs(df(a)) <= -c2 * df(0.0)


def test_strong_wolfe_rejects_ascent():
    with pytest.raises(LineSearchError):
        strong_wolfe(lambda a: a, lambda a: 1.0, 0.0, 1.0)
