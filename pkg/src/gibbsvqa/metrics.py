"""Distances between density matrices."""
from __future__ import annotations

import numpy as np

from .errors import DomainError, InvalidArgumentError

CLAMP = 1e-12
SUPPORT_CUTOFF = 1e-10


def _pair(rho, sigma):
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.shape != sigma.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidArgumentError(
            f"density matrices must be square and equal-sized, got {rho.shape} and {sigma.shape}"
        )
    return rho, sigma


def uhlmann_fidelity(rho, sigma) -> float:
    """``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Uses the fact that ``rho sigma`` has the same (nonnegative) spectrum as
    ``sqrt(rho) sigma sqrt(rho)``, so no matrix square root is needed.
    """
    rho, sigma = _pair(rho, sigma)
    lam = np.linalg.eigvals(rho @ sigma).real
    lam = np.where(lam > CLAMP, lam, 0.0)
    return float(min(1.0, np.sum(np.sqrt(lam)) ** 2))


def trace_distance(rho, sigma) -> float:
    rho, sigma = _pair(rho, sigma)
    mu = np.linalg.eigvalsh(rho - sigma)
    return float(0.5 * np.sum(np.abs(mu)))


def relative_entropy(sigma, rho) -> float:
    """``S(sigma || rho) = Tr sigma ln sigma - Tr sigma ln rho`` in nats.

    Raises :class:`DomainError` when the support of ``sigma`` is not contained
    in that of ``rho`` (the relative entropy is infinite).
    """
    sigma, rho = _pair(sigma, rho)
    ws = np.linalg.eigvalsh(sigma)
    wr, vr = np.linalg.eigh(rho)
    ws = np.where(ws > CLAMP, ws, 0.0)
    term_s = float(np.sum(ws[ws > 0] * np.log(ws[ws > 0])))

    # <r_j| sigma |r_j> for every eigenvector of rho
    overlap = np.real(np.einsum("ij,ik,kj->j", vr.conj(), sigma, vr))
    null = wr <= SUPPORT_CUTOFF
    if np.any(overlap[null] > SUPPORT_CUTOFF):
        raise DomainError("support of sigma is not contained in support of rho")
    term_r = float(np.sum(overlap[~null] * np.log(wr[~null])))
    return max(0.0, term_s - term_r)
