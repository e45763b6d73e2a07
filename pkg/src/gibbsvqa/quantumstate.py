"""Dense statevector / density-matrix kernel.

Bit ordering: qubit 0 is the least significant bit of a basis-state index, so
``|x>`` with ``x = sum_q b_q 2**q``. A two-qubit gate acting on ``targets=(a, b)``
is written in the basis ``|b_a b_b>``, i.e. ``targets[0]`` is the left factor of
the Kronecker product.

States are plain numpy arrays: a statevector has shape ``(2**n,)``, a batch of
statevectors ``(2**n, B)`` (one state per column), a density matrix
``(2**n, 2**n)``.
"""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import InvalidArgumentError

NORM_TOL = 1e-12
EIG_CLAMP = 1e-12

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


# -- gates -------------------------------------------------------------------

def ry(theta: float) -> np.ndarray:
    """exp(-i theta Y / 2); real."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


def rz(theta: float) -> np.ndarray:
    """exp(-i theta Z / 2)."""
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def sx() -> np.ndarray:
    """Square root of X, exp(i pi/4) exp(-i pi X / 4)."""
    return 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])


def cnot() -> np.ndarray:
    """CNOT with ``targets[0]`` as control."""
    return np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float
    )


def _pauli_rotation(pauli: np.ndarray, angle: float) -> np.ndarray:
    # pauli**2 == I, so exp(i a P) = cos(a) I + i sin(a) P
    return np.cos(angle) * np.eye(len(pauli)) + 1j * np.sin(angle) * pauli


def rxy(phi: float) -> np.ndarray:
    """exp(+i phi X(x)Y / 2).

    The positive exponent is what makes ``ryx(phi_j) @ rxy(phi_i)`` equal the
    parity-preserving block matrix built in :func:`gibbsvqa.ansatz.rp_matrix`.
    The result is real.
    """
    return _pauli_rotation(np.kron(PAULI_X, PAULI_Y), phi / 2).real


def ryx(phi: float) -> np.ndarray:
    """exp(+i phi Y(x)X / 2); real."""
    return _pauli_rotation(np.kron(PAULI_Y, PAULI_X), phi / 2).real


def is_unitary(matrix: np.ndarray, atol: float = NORM_TOL) -> bool:
    m = np.asarray(matrix)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(
        m.conj().T @ m, np.eye(len(m)), rtol=0, atol=atol
    )


# -- helpers -----------------------------------------------------------------

def num_qubits(array: np.ndarray) -> int:
    """Number of qubits addressed by the leading axis of ``array``."""
    dim = np.shape(array)[0]
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise InvalidArgumentError(f"leading dimension {dim} is not a power of two")
    return n


def basis_state(n_qubits: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def check_state(state: np.ndarray, atol: float = NORM_TOL) -> None:
    norm = np.linalg.norm(state)
    if abs(norm - 1) > atol:
        raise InvalidArgumentError(f"state is not normalized (norm {norm!r})")


def check_density(rho: np.ndarray, atol: float = NORM_TOL) -> None:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidArgumentError(f"density matrix must be square, got {rho.shape}")
    num_qubits(rho)
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=atol):
        raise InvalidArgumentError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > atol:
        raise InvalidArgumentError(f"density matrix trace is {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise InvalidArgumentError("density matrix is not positive semidefinite")


def _check_targets(targets: Sequence[int], n: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise InvalidArgumentError(f"duplicate target qubits {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise InvalidArgumentError(f"target qubit {t} out of range for {n} qubits")
    return targets


# -- gate application ----------------------------------------------------------

def apply_gate(
    state: np.ndarray, gate: np.ndarray, targets: Sequence[int]
) -> np.ndarray:
    """Apply ``gate`` to ``targets`` of ``state`` and return the new array.

    ``state`` may be a single statevector ``(2**n,)`` or a batch ``(2**n, B)``.
    For one-qubit gates ``gate`` may also have shape ``(2, 2, B)``, giving a
    different gate for every column of the batch.

    The work is done on strided views of the amplitude array; no ``2**n``-sized
    operator is ever formed.
    """
    state = np.asarray(state)
    gate = np.asarray(gate)
    n = num_qubits(state)
    targets = _check_targets(targets, n)
    k = len(targets)
    if gate.shape[:2] != (1 << k, 1 << k):
        raise InvalidArgumentError(
            f"gate of shape {gate.shape} does not act on {k} target qubit(s)"
        )
    batch = int(np.prod(state.shape[1:], dtype=int))
    flat = state.reshape(1 << n, batch)
    dtype = np.result_type(flat, gate)

    if k == 1:
        (q,) = targets
        v = flat.reshape(1 << (n - q - 1), 2, (1 << q), batch)
        if gate.ndim == 3:
            if gate.shape[2] != batch:
                raise InvalidArgumentError("per-column gate batch size mismatch")
            out = np.einsum("ijb,ajrb->airb", gate, v, dtype=dtype)
        else:
            out = np.einsum("ij,ajr->air", gate, v.reshape(v.shape[0], 2, -1),
                            dtype=dtype)
    elif k == 2:
        if gate.ndim != 2:
            raise InvalidArgumentError("batched gates are only supported for one qubit")
        a, b = targets
        hi, lo = max(a, b), min(a, b)
        g = gate.reshape(2, 2, 2, 2)
        if a < b:
            g = g.transpose(1, 0, 3, 2)
        v = flat.reshape(1 << (n - hi - 1), 2, 1 << (hi - lo - 1), 2, (1 << lo) * batch)
        out = np.einsum("xyuv,aubvc->axbyc", g, v, dtype=dtype)
    else:
        raise InvalidArgumentError("only one- and two-qubit gates are supported")
    return out.reshape(state.shape)


def apply_gate_conj(
    matrix: np.ndarray, gate: np.ndarray, targets: Sequence[int]
) -> np.ndarray:
    """Return ``G M G^dagger`` for a square operator ``M`` on the full register."""
    left = apply_gate(matrix, gate, targets)
    return apply_gate(left.conj().T, gate, targets).conj().T


# -- states and reductions -----------------------------------------------------

def density_from_state(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    check_state(state)
    return np.outer(state, state.conj())


def _keep_selector(keep: Sequence[int] | int, n: int) -> tuple[int, ...]:
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    keep = tuple(sorted(set(int(q) for q in keep)))
    if not keep or len(keep) >= n:
        raise InvalidArgumentError(
            f"keep must select a nonempty proper subset of {n} qubits, got {keep}"
        )
    _check_targets(keep, n)
    return keep


def partial_trace(state_or_density: np.ndarray, keep: Sequence[int] | int) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep``.

    The reduced register keeps the original relative bit order: the smallest
    kept qubit index becomes qubit 0 of the result.
    """
    arr = np.asarray(state_or_density)
    n = num_qubits(arr)
    keep = _keep_selector(keep, n)
    traced = [q for q in range(n) if q not in keep]
    # tensor axis of qubit q is n - 1 - q; order kept axes most significant first
    keep_axes = [n - 1 - q for q in reversed(keep)]
    trace_axes = [n - 1 - q for q in reversed(traced)]
    dk = 1 << len(keep)
    if arr.ndim == 1:
        psi = arr.reshape((2,) * n).transpose(keep_axes + trace_axes).reshape(dk, -1)
        return psi @ psi.conj().T
    if arr.shape != (1 << n, 1 << n):
        raise InvalidArgumentError(f"expected a square density matrix, got {arr.shape}")
    t = arr.reshape((2,) * (2 * n))
    perm = keep_axes + trace_axes + [n + ax for ax in keep_axes + trace_axes]
    t = t.transpose(perm).reshape(dk, -1, dk, (1 << n) // dk)
    return np.einsum("arbr->ab", t)


def entropy_from_probabilities(p: np.ndarray) -> float:
    """Shannon entropy in nats with ``0 ln 0 = 0``; entries below the clamp count as 0."""
    p = np.asarray(p, dtype=float)
    p = p[p > EIG_CLAMP]
    return float(-np.sum(p * np.log(p)))


def entropy_of_density(rho: np.ndarray) -> float:
    """Von Neumann entropy (nats) from the eigenvalues of ``rho``."""
    return entropy_from_probabilities(np.linalg.eigvalsh(np.asarray(rho)))


def expectation_value(rho_or_state: np.ndarray, hamiltonian) -> float:
    """``Tr(H rho)`` or ``<psi|H|psi>`` for a :class:`~gibbsvqa.hamiltonian.PauliHamiltonian`."""
    arr = np.asarray(rho_or_state)
    n = num_qubits(arr)
    if n != hamiltonian.n_qubits:
        raise InvalidArgumentError(
            f"state has {n} qubits but the Hamiltonian acts on {hamiltonian.n_qubits}"
        )
    if arr.ndim == 1:
        value = np.vdot(arr, hamiltonian.apply(arr))
    else:
        if arr.shape != (1 << n, 1 << n):
            raise InvalidArgumentError(f"expected a square density matrix, got {arr.shape}")
        value = np.trace(hamiltonian.apply(arr))
    if abs(value.imag) > 1e-10:
        raise InvalidArgumentError(
            f"expectation value has imaginary part {value.imag!r}; input not Hermitian?"
        )
    return float(value.real)
