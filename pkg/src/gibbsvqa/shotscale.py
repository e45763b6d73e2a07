"""Shot-noise analysis of the ancilla measurement.

Estimating ``p_i`` from ``N_s`` multinomial shots has relative standard
deviation ``c_v = sqrt((1 - p_i) / (N_s p_i))``. The normalized quantity
``c_v sqrt(N_s) = sqrt(Z / exp(-beta E_i) - 1)`` does not depend on ``N_s`` and
is what gets fitted against system size with ``C * n**alpha``.
"""
from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, InvalidArgumentError
from .hamiltonian import boltzmann, xy_energies

CSV_COLUMNS = ("gamma", "beta", "i", "alpha_i", "C", "r_squared", "n_min", "n_max")

# exponents above this go through logsumexp instead of a direct sum
_EXP_SAFE = 700.0


@dataclass(frozen=True)
class CvRecord:
    n: int
    beta: float
    i: int
    p_i: float
    cv: float
    normalized_cv: float
    # ln(normalized_cv); finite even where normalized_cv overflows
    log_normalized_cv: float = float("nan")


@dataclass(frozen=True)
class PowerLawFit:
    i: int
    alpha: float
    C: float
    r_squared: float
    n_range: tuple[int, ...]
    # r^2 of ln y against n; beats r_squared when the data grow exponentially
    exponential_r_squared: float = float("nan")

    @property
    def power_law_preferred(self) -> bool:
        return not self.exponential_r_squared > self.r_squared


def coefficient_of_variation(p_i: float, n_shots: int) -> float:
    p_i = float(p_i)
    if not 0.0 <= p_i <= 1.0 or not math.isfinite(p_i):
        raise InvalidArgumentError(f"p_i must be a probability, got {p_i!r}")
    if n_shots < 1:
        raise InvalidArgumentError(f"n_shots must be >= 1, got {n_shots}")
    if p_i == 0.0:
        raise DomainError("coefficient of variation is infinite for p_i = 0")
    return math.sqrt((1.0 - p_i) / (n_shots * p_i))


def _exponents(energies, beta: float, i: int) -> np.ndarray:
    energies = np.asarray(energies, dtype=float)
    return -beta * (np.delete(energies, i) - energies[i])


def normalized_cv(energies: np.ndarray, beta: float, i: int) -> float:
    """``sqrt(sum_{j != i} exp(-beta (E_j - E_i)))``, i.e. ``c_v sqrt(N_s)`` for state ``i``.

    Returns ``inf`` when the value exceeds the float range; see :func:`log_normalized_cv`.
    """
    expo = _exponents(energies, beta, i)
    if expo.size == 0:
        return 0.0
    if np.max(expo) < _EXP_SAFE:
        return math.sqrt(float(np.sum(np.exp(expo))))
    with np.errstate(over="ignore"):
        return float(np.exp(0.5 * logsumexp(expo)))


def log_normalized_cv(energies: np.ndarray, beta: float, i: int) -> float:
    expo = _exponents(energies, beta, i)
    if expo.size == 0:
        return float("-inf")
    return 0.5 * float(logsumexp(expo))


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not math.isfinite(beta) or beta < 0:
        raise InvalidArgumentError(f"beta must be finite and >= 0, got {beta!r}")
    return beta


def normalized_cv_table(
    gamma: float,
    h: float,
    beta: float,
    n_range: Iterable[int],
    k: int = 51,
    n_shots: int = 1,
) -> list[CvRecord]:
    """Records for the ``k`` lowest-energy states of the XY chain at every ``n``.

    ``cv`` is reported for ``n_shots`` shots; ``normalized_cv`` is independent of it.
    """
    beta = _check_beta(beta)
    n_range = sorted(set(int(n) for n in n_range))
    if not n_range:
        raise InvalidArgumentError("n_range is empty")
    if k < 1 or k > 1 << n_range[0]:
        raise InvalidArgumentError(f"k must be in 1..{1 << n_range[0]}, got {k}")
    if n_shots < 1:
        raise InvalidArgumentError(f"n_shots must be >= 1, got {n_shots}")
    records = []
    for n in n_range:
        e = xy_energies(n, float(gamma), float(h))
        p, _ = boltzmann(e, beta)
        for i in range(k):
            ncv = normalized_cv(e, beta, i)
            records.append(CvRecord(n, beta, i, float(p[i]), ncv / math.sqrt(n_shots), ncv,
                                    log_normalized_cv(e, beta, i)))
    return records


def _r_squared(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_power_law(records: Sequence[CvRecord]) -> PowerLawFit:
    """OLS of ``ln(normalized_cv)`` against ``ln n``: slope is alpha, ``exp(intercept)`` is C.

    Uses the records' log values where present, so overflowing records still fit.
    """
    if len(records) < 3:
        raise InvalidArgumentError(f"need at least 3 records, got {len(records)}")
    if len({r.i for r in records}) != 1:
        raise InvalidArgumentError("records must share one state index")
    ns = np.array([r.n for r in records], dtype=float)
    if len(set(ns)) < 3:
        raise InvalidArgumentError("need at least 3 distinct system sizes")
    ly = []
    for r in records:
        if math.isfinite(r.log_normalized_cv):
            ly.append(r.log_normalized_cv)
        elif r.normalized_cv > 0 and math.isfinite(r.normalized_cv):
            ly.append(math.log(r.normalized_cv))
        else:
            raise InvalidArgumentError(f"power-law fit needs positive finite values, got {r}")
    ly = np.array(ly)
    alpha, intercept, r2 = _r_squared(np.log(ns), ly)
    _, _, r2_exp = _r_squared(ns, ly)
    return PowerLawFit(
        i=records[0].i,
        alpha=alpha,
        C=float(np.exp(intercept)) if intercept < _EXP_SAFE else math.inf,
        r_squared=r2,
        n_range=tuple(int(n) for n in sorted(ns)),
        exponential_r_squared=r2_exp,
    )


def fit_points(ns, values, i: int = 0) -> PowerLawFit:
    """Convenience wrapper: fit raw ``(n, value)`` pairs."""
    recs = [CvRecord(int(n), float("nan"), i, float("nan"), float(v), float(v))
            for n, v in zip(ns, values)]
    return fit_power_law(recs)


def alpha_sweep(
    gamma_list: Iterable[float],
    h: float,
    beta_grid: Iterable[float],
    n_range: Iterable[int],
    k: int = 51,
) -> list[tuple[float, float, PowerLawFit]]:
    """``(gamma, beta, fit)`` for every state ``i < k``, in grid order."""
    gamma_list, beta_grid = list(gamma_list), list(beta_grid)
    if not gamma_list or not beta_grid:
        raise InvalidArgumentError("gamma and beta grids must be nonempty")
    n_range = list(n_range)
    out = []
    for gamma in gamma_list:
        for beta in beta_grid:
            table = normalized_cv_table(gamma, h, beta, n_range, k)
            by_i: dict[int, list[CvRecord]] = {}
            for rec in table:
                by_i.setdefault(rec.i, []).append(rec)
            for i in range(k):
                out.append((float(gamma), float(beta), fit_power_law(by_i[i])))
    return out


def write_alpha_csv(rows, path_or_file) -> None:
    """Write ``alpha_sweep`` output with columns gamma, beta, i, alpha_i, C, r_squared, n_min, n_max."""
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", newline="") as fh:
            _write_alpha_rows(fh, rows)
    else:
        _write_alpha_rows(path_or_file, rows)


def _write_alpha_rows(fh, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for gamma, beta, fit in rows:
        w.writerow([repr(gamma), repr(beta), fit.i, f"{fit.alpha:.17g}", f"{fit.C:.17g}",
                    f"{fit.r_squared:.17g}", fit.n_range[0], fit.n_range[-1]])


def alpha_csv_text(rows) -> str:
    buf = io.StringIO()
    _write_alpha_rows(buf, rows)
    return buf.getvalue()
