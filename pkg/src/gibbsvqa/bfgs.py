"""BFGS with a strong-Wolfe line search (bracketing phase + zoom)."""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass
class OptimizationRun:
    initial_parameters: np.ndarray
    final_parameters: np.ndarray
    final_value: float
    iterations: int
    function_evaluations: int
    gradient_evaluations: int
    converged: bool
    message: str = ""
    # (iteration, cost, gradient inf-norm) per accepted iterate
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    seed: int | None = None
    final_cost: object | None = None  # CostBreakdown for VQA runs
    fidelity: float | None = None


class LineSearchError(RuntimeError):
    pass


def _cubicmin(a, fa, fpa, b, fb, c, fc):
    """Minimizer of the cubic through (a, fa, fpa), (b, fb), (c, fc), or None."""
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            C = fpa
            db, dc = b - a, c - a
            denom = (db * dc) ** 2 * (db - dc)
            d1 = np.array([[dc**2, -db**2], [-dc**3, db**3]])
            A, B = d1 @ np.array([fb - fa - C * db, fc - fa - C * dc]) / denom
            radical = B * B - 3 * A * C
            xmin = a + (-B + np.sqrt(radical)) / (3 * A)
        except (ArithmeticError, ValueError):
            return None
    return xmin if np.isfinite(xmin) else None


def _quadmin(a, fa, fpa, b, fb):
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            db = b - a
            B = (fb - fa - fpa * db) / (db * db)
            xmin = a - fpa / (2.0 * B)
        except ArithmeticError:
            return None
    return xmin if np.isfinite(xmin) else None


def _zoom(a_lo, a_hi, phi_lo, phi_hi, dphi_lo, phi, dphi, phi0, dphi0, c1, c2,
          maxiter=30):
    a_rec, phi_rec = 0.0, phi0
    for i in range(maxiter):
        dalpha = a_hi - a_lo
        lo, hi = sorted((a_lo, a_hi))
        a_j = None
        if i > 0:
            cchk = 0.2 * abs(dalpha)
            a_j = _cubicmin(a_lo, phi_lo, dphi_lo, a_hi, phi_hi, a_rec, phi_rec)
            if a_j is not None and not (lo + cchk < a_j < hi - cchk):
                a_j = None
        if a_j is None:
            qchk = 0.1 * abs(dalpha)
            a_j = _quadmin(a_lo, phi_lo, dphi_lo, a_hi, phi_hi)
            if a_j is None or not (lo + qchk < a_j < hi - qchk):
                a_j = a_lo + 0.5 * dalpha
        phi_j = phi(a_j)
        if phi_j > phi0 + c1 * a_j * dphi0 or phi_j >= phi_lo:
            a_rec, phi_rec = a_hi, phi_hi
            a_hi, phi_hi = a_j, phi_j
        else:
            dphi_j = dphi(a_j)
            if abs(dphi_j) <= -c2 * dphi0:
                return a_j, phi_j
            if dphi_j * (a_hi - a_lo) >= 0:
                a_rec, phi_rec = a_hi, phi_hi
                a_hi, phi_hi = a_lo, phi_lo
            else:
                a_rec, phi_rec = a_lo, phi_lo
            a_lo, phi_lo, dphi_lo = a_j, phi_j, dphi_j
    raise LineSearchError("zoom did not converge")


def strong_wolfe(phi, dphi, phi0, dphi0, alpha1=1.0, c1=1e-4, c2=0.9,
                 amax=1e3, maxiter=20):
    """Step length satisfying the strong Wolfe conditions along a descent direction.

    ``phi(a)`` is the objective along the ray, ``dphi(a)`` its derivative.
    Returns ``(alpha, phi(alpha))``.
    """
    if dphi0 >= 0:
        raise LineSearchError("not a descent direction")
    a_prev, phi_prev, dphi_prev = 0.0, phi0, dphi0
    a = min(alpha1, amax)
    for i in range(maxiter):
        phi_a = phi(a)
        if not np.isfinite(phi_a):
            a = 0.5 * (a_prev + a)
            continue
        if phi_a > phi0 + c1 * a * dphi0 or (i > 0 and phi_a >= phi_prev):
            return _zoom(a_prev, a, phi_prev, phi_a, dphi_prev, phi, dphi,
                         phi0, dphi0, c1, c2)
        dphi_a = dphi(a)
        if abs(dphi_a) <= -c2 * dphi0:
            return a, phi_a
        if dphi_a >= 0:
            return _zoom(a, a_prev, phi_a, phi_prev, dphi_a, phi, dphi,
                         phi0, dphi0, c1, c2)
        a_prev, phi_prev, dphi_prev = a, phi_a, dphi_a
        a = min(2 * a, amax)
    raise LineSearchError("bracketing phase did not terminate")


def bfgs_minimize(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0,
    gtol: float = 1e-8,
    xtol: float = 1e-12,
    ftol: float = 1e-12,
    maxiter: int = 2000,
    c1: float = 1e-4,
    c2: float = 0.9,
    keep_trace: bool = False,
) -> OptimizationRun:
    """Quasi-Newton minimization with inverse-Hessian BFGS updates.

    Stops when ``max|grad| <= gtol``, when an accepted step changes ``x`` by at
    most ``xtol`` (inf-norm) or ``f`` by at most ``ftol``, or after ``maxiter``
    iterations. If the line search fails twice in a row (the second time from a
    reset Hessian) the best point so far is returned with ``converged=False``.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    nfev = ngev = 0

    def f(z):
        nonlocal nfev
        nfev += 1
        return float(fun(z))

    def g(z):
        nonlocal ngev
        ngev += 1
        return np.asarray(grad(z), dtype=float)

    fx = f(x)
    if not np.isfinite(fx):
        raise InvalidArgumentError(f"objective is not finite at x0 ({fx!r})")
    gx = g(x)
    dim = x.size
    Hinv = np.eye(dim)
    trace = []
    gnorm = float(np.max(np.abs(gx))) if dim else 0.0
    if keep_trace:
        trace.append((0, fx, gnorm))
    converged, message = False, "maximum iterations reached"
    prev_fx = fx + 0.5 * np.linalg.norm(gx)  # first trial step ~ unit decrease
    k = 0
    while k < maxiter:
        if gnorm <= gtol:
            converged, message = True, "gradient norm below tolerance"
            break
        p = -Hinv @ gx
        dphi0 = float(gx @ p)
        if dphi0 >= 0:
            Hinv = np.eye(dim)
            p = -gx
            dphi0 = float(gx @ p)

        cache: dict[float, np.ndarray] = {}

        def phi(a):
            return f(x + a * p)

        def dphi(a):
            ga = g(x + a * p)
            cache[a] = ga
            return float(ga @ p)

        alpha1 = min(1.0, 1.01 * 2 * (fx - prev_fx) / dphi0) if k == 0 else 1.0
        if not alpha1 > 0:
            alpha1 = 1.0
        try:
            alpha, f_new = strong_wolfe(phi, dphi, fx, dphi0, alpha1, c1, c2)
        except LineSearchError:
            if np.array_equal(Hinv, np.eye(dim)):
                message = "line search failed"
                break
            Hinv = np.eye(dim)
            continue
        s = alpha * p
        x_new = x + s
        g_new = cache[alpha] if alpha in cache else g(x_new)
        y = g_new - gx
        k += 1
        prev_fx, fx_old = fx, fx
        x, fx, gx = x_new, f_new, g_new
        gnorm = float(np.max(np.abs(gx)))
        if keep_trace:
            trace.append((k, fx, gnorm))
        if np.max(np.abs(s)) <= xtol or abs(fx_old - fx) <= ftol:
            converged, message = True, "step or decrease below tolerance"
            break
        sy = float(s @ y)
        if sy > 1e-300:
            rho = 1.0 / sy
            Hy = Hinv @ y
            Hinv = (Hinv - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                    + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s))
    if gnorm <= gtol:
        converged, message = True, "gradient norm below tolerance"
    return OptimizationRun(
        initial_parameters=np.array(x0, dtype=float).reshape(-1),
        final_parameters=x,
        final_value=fx,
        iterations=k,
        function_evaluations=nfev,
        gradient_evaluations=ngev,
        converged=converged,
        message=message,
        trace=trace,
    )
