"""Compiled inner loops for the free-energy objective.

Everything here is real arithmetic: RY, CNOT and R_P are real, so the
ancilla amplitudes and the system density matrix stay real throughout.

R_P on a qubit pair ``(a, b)`` (pair index ``2*bit_a + bit_b``) only mixes
``|00> <-> |11>`` with angle ``(phi_i + phi_j)/2`` and ``|01> <-> |10>`` with
``(phi_i - phi_j)/2``, which is what the ``_rp_*`` loops exploit.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def ancilla_amplitudes(angles, kind, qa, qb, slot, d):
    """Run the ancilla program once per row of ``angles``; returns (d, B) amplitudes.

    ``kind[g]`` is 0 for RY(angles[:, slot[g]]) on ``qa[g]``, 1 for CNOT(qa -> qb).
    """
    batch = angles.shape[0]
    psi = np.zeros((d, batch))
    psi[0, :] = 1.0
    c = np.empty(batch)
    s = np.empty(batch)
    for g in range(kind.shape[0]):
        if kind[g] == 0:
            for k in range(batch):
                c[k] = np.cos(0.5 * angles[k, slot[g]])
                s[k] = np.sin(0.5 * angles[k, slot[g]])
            step = 1 << qa[g]
            for i in range(d):
                if i & step:
                    continue
                j = i | step
                for k in range(batch):
                    x0 = psi[i, k]
                    x1 = psi[j, k]
                    psi[i, k] = c[k] * x0 - s[k] * x1
                    psi[j, k] = s[k] * x0 + c[k] * x1
        else:
            cm = 1 << qa[g]
            tm = 1 << qb[g]
            for i in range(d):
                if (i & cm) and not (i & tm):
                    j = i | tm
                    for k in range(batch):
                        tmp = psi[i, k]
                        psi[i, k] = psi[j, k]
                        psi[j, k] = tmp
    return psi


@njit(cache=True)
def _rp_conj(m, a, b, cp, sp, cm, sm):
    """In place ``m <- G m G^T`` for the R_P block rotation on pair (a, b)."""
    d = m.shape[0]
    ma = 1 << a
    mb = 1 << b
    for i00 in range(d):
        if i00 & ma or i00 & mb:
            continue
        i01 = i00 | mb
        i10 = i00 | ma
        i11 = i00 | ma | mb
        for c in range(d):
            x00 = m[i00, c]
            x01 = m[i01, c]
            x10 = m[i10, c]
            x11 = m[i11, c]
            m[i00, c] = cp * x00 + sp * x11
            m[i11, c] = -sp * x00 + cp * x11
            m[i01, c] = cm * x01 - sm * x10
            m[i10, c] = sm * x01 + cm * x10
        for r in range(d):
            x00 = m[r, i00]
            x01 = m[r, i01]
            x10 = m[r, i10]
            x11 = m[r, i11]
            m[r, i00] = cp * x00 + sp * x11
            m[r, i11] = -sp * x00 + cp * x11
            m[r, i01] = cm * x01 - sm * x10
            m[r, i10] = sm * x01 + cm * x10


@njit(cache=True)
def _rp_coeffs(phi_i, phi_j):
    return (np.cos(0.5 * (phi_i + phi_j)), np.sin(0.5 * (phi_i + phi_j)),
            np.cos(0.5 * (phi_i - phi_j)), np.sin(0.5 * (phi_i - phi_j)))


@njit(cache=True)
def _trace_prod(h, m):
    # Tr(h m) for symmetric m
    acc = 0.0
    d = h.shape[0]
    for i in range(d):
        for j in range(d):
            acc += h[i, j] * m[i, j]
    return acc


@njit(cache=True)
def system_forward(phi, pairs, slots, p, store):
    """``store[k]`` = system state before R_P gate k; ``store[M]`` the final state."""
    d = p.shape[0]
    rho = np.zeros((d, d))
    for i in range(d):
        rho[i, i] = p[i]
    store[0] = rho
    for g in range(pairs.shape[0]):
        cp, sp, cm, sm = _rp_coeffs(phi[slots[g, 0]], phi[slots[g, 1]])
        _rp_conj(rho, pairs[g, 0], pairs[g, 1], cp, sp, cm, sm)
        store[g + 1] = rho
    return rho


@njit(cache=True)
def final_state(phi, pairs, slots, p):
    d = p.shape[0]
    rho = np.zeros((d, d))
    for i in range(d):
        rho[i, i] = p[i]
    for g in range(pairs.shape[0]):
        cp, sp, cm, sm = _rp_coeffs(phi[slots[g, 0]], phi[slots[g, 1]])
        _rp_conj(rho, pairs[g, 0], pairs[g, 1], cp, sp, cm, sm)
    return rho


@njit(cache=True)
def system_backward(phi, pairs, slots, h, store):
    """``store[k] = (G_{M-1} ... G_k)^T H (G_{M-1} ... G_k)``; ``store[M] = H``."""
    n_gates = pairs.shape[0]
    hk = h.copy()
    store[n_gates] = hk
    for g in range(n_gates - 1, -1, -1):
        cp, sp, cm, sm = _rp_coeffs(phi[slots[g, 0]], phi[slots[g, 1]])
        # transpose of the rotation: flip the sine signs
        _rp_conj(hk, pairs[g, 0], pairs[g, 1], cp, -sp, cm, -sm)
        store[g] = hk


@njit(cache=True)
def phi_central_differences(phi, pairs, slots, rho_store, h_store, step, out):
    """Central differences of ``Tr(H rho)`` w.r.t. every phi, one gate at a time."""
    d = rho_store.shape[1]
    scratch = np.empty((d, d))
    for g in range(pairs.shape[0]):
        a = pairs[g, 0]
        b = pairs[g, 1]
        for which in range(2):
            vals = np.empty(2)
            for sgn in range(2):
                shift = step if sgn == 0 else -step
                pi = phi[slots[g, 0]] + (shift if which == 0 else 0.0)
                pj = phi[slots[g, 1]] + (shift if which == 1 else 0.0)
                cp, sp, cm, sm = _rp_coeffs(pi, pj)
                scratch[:, :] = rho_store[g]
                _rp_conj(scratch, a, b, cp, sp, cm, sm)
                vals[sgn] = _trace_prod(h_store[g + 1], scratch)
            out[slots[g, which]] = (vals[0] - vals[1]) / (2.0 * step)
