"""Pauli-string Hamiltonians, exact spectra and reference thermal states.

Boundary convention for the XY chain: the bond sum runs over ``i = 0..n-1`` with
site ``n`` identified with site ``0``. For ``n = 2`` this counts the single bond
twice, so ``H = -(1+g) XX - (1-g) YY - h (Z0 + Z1)``.

Units: ``k_B = 1``; ``beta`` is an inverse energy.
"""
from __future__ import annotations

import csv
import functools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, InvalidArgumentError
from .quantumstate import num_qubits

DENSE_LIMIT = 14


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    paulis: Mapping[int, str]

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise InvalidArgumentError(f"non-finite coefficient {self.coefficient!r}")
        for q, p in self.paulis.items():
            if p not in ("X", "Y", "Z"):
                raise InvalidArgumentError(f"unknown Pauli {p!r} on qubit {q}")
            if q < 0:
                raise InvalidArgumentError(f"negative qubit index {q}")

    def label(self, n_qubits: int) -> str:
        """Pauli string with qubit 0 written rightmost."""
        return "".join(self.paulis.get(q, "I") for q in reversed(range(n_qubits)))

    def action(self, n_qubits: int) -> tuple[int, np.ndarray]:
        """(flip mask, phase per input basis state) so that P|x> = phase[x] |x ^ mask>."""
        idx = np.arange(1 << n_qubits)
        mask = 0
        phase = np.ones(1 << n_qubits, dtype=complex)
        for q, p in self.paulis.items():
            bit = (idx >> q) & 1
            sign = 1 - 2 * bit
            if p == "X":
                mask |= 1 << q
            elif p == "Y":
                mask |= 1 << q
                phase = phase * (1j * sign)
            else:
                phase = phase * sign
        if np.all(phase.imag == 0):
            phase = phase.real
        return mask, phase


@dataclass
class PauliHamiltonian:
    n_qubits: int
    terms: list[PauliTerm] = field(default_factory=list)

    def __post_init__(self):
        for t in self.terms:
            if any(q >= self.n_qubits for q in t.paulis):
                raise InvalidArgumentError(
                    f"term {dict(t.paulis)} addresses a qubit outside {self.n_qubits}"
                )
        self._actions = None

    def _term_actions(self):
        if self._actions is None:
            self._actions = [(t.coefficient, *t.action(self.n_qubits)) for t in self.terms]
        return self._actions

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """H applied to a statevector or to every column of a 2-D array."""
        vec = np.asarray(vec)
        if num_qubits(vec) != self.n_qubits:
            raise InvalidArgumentError("dimension mismatch between state and Hamiltonian")
        out = np.zeros(vec.shape, dtype=np.result_type(vec, complex))
        idx = np.arange(1 << self.n_qubits)
        for coeff, mask, phase in self._term_actions():
            ph = phase if vec.ndim == 1 else phase[:, None]
            out += coeff * (ph * vec)[idx ^ mask]
        if np.isrealobj(vec) and np.all(out.imag == 0):
            return out.real
        return out

    def coefficients(self) -> dict[str, float]:
        """Pauli-string label -> summed coefficient."""
        acc: dict[str, float] = {}
        for t in self.terms:
            key = t.label(self.n_qubits)
            acc[key] = acc.get(key, 0.0) + t.coefficient
        return acc


def build_xy_hamiltonian(n: int, gamma: float, h: float) -> PauliHamiltonian:
    if n < 2:
        raise InvalidArgumentError(f"XY chain needs n >= 2, got {n}")
    terms = []
    for i in range(n):
        j = (i + 1) % n
        terms.append(PauliTerm(-(1 + gamma) / 2, {i: "X", j: "X"}))
        terms.append(PauliTerm(-(1 - gamma) / 2, {i: "Y", j: "Y"}))
    terms.extend(PauliTerm(-h, {i: "Z"}) for i in range(n))
    return PauliHamiltonian(n, terms)


def build_qbm_hamiltonian(
    biases: Sequence[float], weights: Mapping[tuple[int, int], float] | None = None
) -> PauliHamiltonian:
    """Fully visible Boltzmann-machine Hamiltonian ``-sum b_i Z_i - sum w_ij Z_i Z_j``."""
    n = len(biases)
    if n < 1:
        raise InvalidArgumentError("need at least one node")
    terms = [PauliTerm(-float(b), {i: "Z"}) for i, b in enumerate(biases)]
    for (i, j), w in (weights or {}).items():
        if i == j:
            raise InvalidArgumentError(f"self-loop edge ({i}, {j})")
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidArgumentError(f"edge ({i}, {j}) outside {n} nodes")
        terms.append(PauliTerm(-float(w), {i: "Z", j: "Z"}))
    return PauliHamiltonian(n, terms)


def parity_operator(n: int) -> np.ndarray:
    """Diagonal of the product of Z over all sites, as a vector of +-1."""
    idx = np.arange(1 << n)
    pop = np.zeros_like(idx)
    for q in range(n):
        pop += (idx >> q) & 1
    return 1 - 2 * (pop % 2)


def to_dense(H: PauliHamiltonian, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense matrix of ``H``. Real dtype when every term is real."""
    n = H.n_qubits
    if n > dense_limit:
        raise CapacityError(f"{n} qubits exceeds the dense limit of {dense_limit}")
    d = 1 << n
    actions = H._term_actions()
    real = all(np.isrealobj(ph) for _, _, ph in actions)
    mat = np.zeros((d, d), dtype=float if real else complex)
    idx = np.arange(d)
    for coeff, mask, phase in actions:
        mat[idx ^ mask, idx] += coeff * phase
    return mat


@dataclass
class SpectrumResult:
    energies: np.ndarray
    partition_function: float
    boltzmann_probs: np.ndarray
    beta: float
    eigenvectors: np.ndarray | None = None
    # ln Z; stays finite where Z itself would overflow
    log_partition_function: float = 0.0

    def free_energy(self) -> float:
        """-ln(Z) / beta."""
        if self.beta == 0:
            raise InvalidArgumentError("free energy is undefined at beta = 0")
        return -self.log_partition_function / self.beta


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not np.isfinite(beta) or beta < 0:
        raise InvalidArgumentError(f"beta must be finite and >= 0, got {beta!r}")
    return beta


def boltzmann(energies: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Boltzmann probabilities and ``ln Z``, shifted by the ground energy."""
    beta = _check_beta(beta)
    e = np.asarray(energies, dtype=float)
    e0 = e.min()
    w = -beta * (e - e0)
    log_z = logsumexp(w) - beta * e0
    p = np.exp(w - logsumexp(w))
    return p / p.sum(), float(log_z)


def exact_spectrum(
    H: PauliHamiltonian | np.ndarray,
    beta: float,
    with_vectors: bool = True,
    dense_limit: int = DENSE_LIMIT,
) -> SpectrumResult:
    beta = _check_beta(beta)
    mat = H if isinstance(H, np.ndarray) else to_dense(H, dense_limit)
    if with_vectors:
        energies, vecs = np.linalg.eigh(mat)
    else:
        energies, vecs = np.linalg.eigvalsh(mat), None
    p, log_z = boltzmann(energies, beta)
    with np.errstate(over="ignore"):
        # Z itself may overflow for large beta; ln Z stays finite
        z = float(np.exp(log_z))
    return SpectrumResult(
        energies=energies,
        partition_function=z,
        boltzmann_probs=p,
        beta=beta,
        eigenvectors=vecs,
        log_partition_function=log_z,
    )


def gibbs_state_exact(H: PauliHamiltonian | np.ndarray, beta: float) -> np.ndarray:
    spec = exact_spectrum(H, beta)
    v = spec.eigenvectors
    return (v * spec.boltzmann_probs) @ v.conj().T


def tfd_state(H: PauliHamiltonian | np.ndarray, beta: float) -> np.ndarray:
    """Thermofield double on ``2n`` qubits.

    Register A is the low ``n`` qubits, register B the high ``n``; the partner of
    ``|E_i>`` is its entrywise complex conjugate, so tracing out either half
    gives the Gibbs state.
    """
    spec = exact_spectrum(H, beta)
    v = spec.eigenvectors
    amp = np.sqrt(spec.boltzmann_probs)
    # psi[b, a] = sum_i sqrt(p_i) conj(v[b, i]) v[a, i]; flat index = a + d*b
    psi = (v.conj() * amp) @ v.T
    return psi.reshape(-1)


@functools.lru_cache(maxsize=64)
def xy_energies(n: int, gamma: float, h: float, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Ascending XY spectrum, diagonalized per parity sector."""
    mat = to_dense(build_xy_hamiltonian(n, gamma, h), dense_limit)
    par = parity_operator(n)
    blocks = [np.linalg.eigvalsh(mat[np.ix_(par == s, par == s)]) for s in (1, -1)]
    e = np.sort(np.concatenate(blocks))
    e.setflags(write=False)
    return e


def lowest_k_boltzmann_probs(
    n: int, gamma: float, h: float, beta: float, k: int
) -> np.ndarray:
    """The ``k`` largest Boltzmann probabilities of the XY chain, descending."""
    if k < 1 or k > 1 << n:
        raise InvalidArgumentError(f"k must be in 1..{1 << n}, got {k}")
    p, _ = boltzmann(xy_energies(n, float(gamma), float(h)), beta)
    return p[:k].copy()


def write_spectrum_csv(spec: SpectrumResult, path_or_file) -> None:
    """Columns: index, energy, probability."""
    rows: Iterable = zip(range(len(spec.energies)), spec.energies, spec.boltzmann_probs)
    if hasattr(path_or_file, "write"):
        _write_rows(path_or_file, rows)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write_rows(fh, rows)


def _write_rows(fh, rows):
    w = csv.writer(fh)
    w.writerow(["index", "energy", "probability"])
    for i, e, p in rows:
        w.writerow([i, repr(float(e)), repr(float(p))])
