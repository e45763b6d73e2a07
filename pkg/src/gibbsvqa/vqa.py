"""Free-energy minimization over the two-register Gibbs circuit.

Two evaluation routes compute the same numbers:

* :func:`evaluate_cost` simulates the full 2n-qubit circuit, traces out the
  ancillas and takes ``Tr(H rho_S)``; the entropy comes from the ancilla
  probabilities alone.
* :class:`FreeEnergyObjective` is what the optimizer calls. It never builds the
  2n-qubit state: after the CNOT fan-out the system holds ``diag(p)``, so it
  propagates that n-qubit density matrix through U_S and uses a backward pass
  of ``H`` through U_S to get central-difference gradients in O(gates * 4**n).
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ansatz import build_ancilla_ansatz, build_gibbs_pqc, build_system_ansatz
from .bfgs import OptimizationRun, bfgs_minimize
from .errors import InvalidArgumentError
from .hamiltonian import PauliHamiltonian, exact_spectrum, to_dense
from .metrics import uhlmann_fidelity
from .quantumstate import entropy_from_probabilities, expectation_value, partial_trace

FD_STEP = 1e-6


@dataclass
class CostBreakdown:
    free_energy: float | None
    energy_term: float
    entropy_term: float
    probabilities: np.ndarray
    beta: float


@dataclass
class MultistartResult:
    runs: list[OptimizationRun]
    best_index: int
    n: int
    layers_a: int
    layers_s: int
    beta: float
    best_fidelity: float | None = None
    exact_free_energy: float | None = None
    selector: str = "free_energy"

    @property
    def best(self) -> OptimizationRun:
        return self.runs[self.best_index]


def _layers(n: int, n_theta: int, n_phi: int) -> tuple[int, int]:
    if n_theta % n or n_theta < n:
        raise InvalidArgumentError(f"{n_theta} ancilla angles do not fit {n} qubits")
    if n_phi % (2 * n):
        raise InvalidArgumentError(f"{n_phi} system angles do not fit {n} qubits")
    return n_theta // n - 1, n_phi // (2 * n)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (np.isfinite(beta) and beta > 0):
        raise InvalidArgumentError(f"beta must be finite and > 0, got {beta!r}")
    return beta


def ancilla_probabilities(theta, n: int) -> np.ndarray:
    """``p_i = |<i| U_A(theta) |0>|^2``."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size % n or theta.size < n:
        raise InvalidArgumentError(f"{theta.size} ancilla angles do not fit {n} qubits")
    circ = build_ancilla_ansatz(n, theta.size // n - 1)
    psi = circ.run(theta, np.eye(1 << n)[:, 0])
    p = np.abs(psi) ** 2
    return p / p.sum()


def prepared_state(theta, phi, n: int) -> np.ndarray:
    """System density matrix ``rho_S`` from the full 2n-qubit circuit."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    phi = np.asarray(phi, dtype=float).reshape(-1)
    l_a, l_s = _layers(n, theta.size, phi.size)
    circ = build_gibbs_pqc(n, l_a, l_s)
    psi = circ.run(np.concatenate([theta, phi]))
    return partial_trace(psi, range(n, 2 * n))


def evaluate_cost(theta, phi, H: PauliHamiltonian, beta: float) -> CostBreakdown:
    beta = _check_beta(beta)
    n = H.n_qubits
    rho_s = prepared_state(theta, phi, n)
    p = ancilla_probabilities(theta, n)
    energy = expectation_value(rho_s, H)
    entropy = entropy_from_probabilities(p)
    return CostBreakdown(energy - entropy / beta, energy, entropy, p, beta)


class FreeEnergyObjective:
    """``F(theta, phi) = Tr(H rho_S) - S(p) / beta`` on a packed vector ``[theta, phi]``.

    ``beta = 0`` selects pure entropy maximization (cost ``-S``).
    """

    def __init__(self, H, beta: float, n: int, layers_a: int, layers_s: int,
                 fd_step: float = FD_STEP):
        beta = float(beta)
        if not np.isfinite(beta) or beta < 0:
            raise InvalidArgumentError(f"beta must be finite and >= 0, got {beta!r}")
        self.beta = beta
        self.n = n
        self.layers_a, self.layers_s = layers_a, layers_s
        self.h_dense = H if isinstance(H, np.ndarray) else to_dense(H)
        if self.h_dense.shape != (1 << n, 1 << n):
            raise InvalidArgumentError("Hamiltonian size does not match n")
        # rho_S stays real symmetric, so only Re(H) contributes to Tr(H rho_S)
        self._h_real = np.ascontiguousarray(np.real(self.h_dense), dtype=float)
        self.fd_step = fd_step

        anc = build_ancilla_ansatz(n, layers_a)
        prog = [g for g in anc.gates if g.kind != "barrier"]
        self._a_kind = np.array([0 if g.kind == "ry" else 1 for g in prog], dtype=np.int64)
        self._a_qa = np.array([g.targets[0] for g in prog], dtype=np.int64)
        self._a_qb = np.array([g.targets[-1] for g in prog], dtype=np.int64)
        self._a_slot = np.array([g.slots[0] if g.slots else 0 for g in prog], dtype=np.int64)
        rps = [g for g in build_system_ansatz(n, layers_s).gates if g.kind == "rp"]
        self._pairs = np.array([g.targets for g in rps], dtype=np.int64).reshape(-1, 2)
        self._slots = np.array([g.slots for g in rps], dtype=np.int64).reshape(-1, 2)
        self.n_theta = anc.parameter_count
        self.n_params = self.n_theta + 2 * n * layers_s

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n_params:
            raise InvalidArgumentError(f"expected {self.n_params} parameters, got {x.size}")
        return x

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = self._check(x)
        return x[: self.n_theta], x[self.n_theta:]

    def probabilities(self, theta, columns=None) -> np.ndarray:
        """Ancilla probabilities for ``theta``, or a (d, B) block for a (B, n_theta) batch."""
        angles = np.atleast_2d(theta if columns is None else columns).astype(float)
        psi = _kernels.ancilla_amplitudes(
            angles, self._a_kind, self._a_qa, self._a_qb, self._a_slot, 1 << self.n
        )
        p = psi * psi
        return p[:, 0] if columns is None else p

    def _entropy_cost(self, p: np.ndarray) -> np.ndarray:
        """``-S(p)/beta`` per column (``-S`` when beta == 0)."""
        keep = p > 1e-300
        s = -np.sum(np.where(keep, p * np.log(np.where(keep, p, 1.0)), 0.0), axis=0)
        return -s if self.beta == 0 else -s / self.beta

    def system_state(self, x) -> np.ndarray:
        theta, phi = self.split(x)
        return _kernels.final_state(phi, self._pairs, self._slots, self.probabilities(theta))

    def breakdown(self, x) -> CostBreakdown:
        theta, phi = self.split(x)
        p = self.probabilities(theta)
        rho = _kernels.final_state(phi, self._pairs, self._slots, p)
        energy = float(np.sum(self._h_real * rho))
        entropy = entropy_from_probabilities(p)
        free = None if self.beta == 0 else energy - entropy / self.beta
        return CostBreakdown(free, energy, entropy, p, self.beta)

    def __call__(self, x) -> float:
        theta, phi = self.split(x)
        p = self.probabilities(theta)
        if self.beta == 0:
            return float(self._entropy_cost(p))
        rho = _kernels.final_state(phi, self._pairs, self._slots, p)
        return float(np.sum(self._h_real * rho)) + float(self._entropy_cost(p))

    def gradient(self, x) -> np.ndarray:
        """Central differences with step ``fd_step`` in every coordinate."""
        theta, phi = self.split(x)
        h = self.fd_step
        nt = self.n_theta
        grad = np.zeros(self.n_params)
        eye = np.eye(nt) * h
        p_batch = self.probabilities(theta, np.concatenate([theta + eye, theta - eye]))
        if self.beta == 0:
            costs = self._entropy_cost(p_batch)
            grad[:nt] = (costs[:nt] - costs[nt:]) / (2 * h)
            return grad

        d = 1 << self.n
        n_gates = len(self._pairs)
        rho_store = np.empty((n_gates + 1, d, d))
        h_store = np.empty((n_gates + 1, d, d))
        _kernels.system_forward(phi, self._pairs, self._slots, self.probabilities(theta), rho_store)
        _kernels.system_backward(phi, self._pairs, self._slots, self._h_real, h_store)
        # after the CNOT fan-out the energy is linear in p: sum_i p_i (U^T H U)_ii
        costs = np.diag(h_store[0]) @ p_batch + self._entropy_cost(p_batch)
        grad[:nt] = (costs[:nt] - costs[nt:]) / (2 * h)
        g_phi = np.zeros(self.n_params - nt)
        _kernels.phi_central_differences(phi, self._pairs, self._slots, rho_store, h_store, h, g_phi)
        grad[nt:] = g_phi
        return grad

    def value_and_gradient(self, x) -> tuple[float, np.ndarray]:
        return self(x), self.gradient(x)


def gradient(theta, phi, H: PauliHamiltonian, beta: float, fd_step: float = FD_STEP):
    """Central-difference gradient of the free energy w.r.t. ``[theta, phi]``."""
    beta = _check_beta(beta)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    phi = np.asarray(phi, dtype=float).reshape(-1)
    n = H.n_qubits
    l_a, l_s = _layers(n, theta.size, phi.size)
    obj = FreeEnergyObjective(H, beta, n, l_a, l_s, fd_step)
    return obj.gradient(np.concatenate([theta, phi]))


# -- multistart ----------------------------------------------------------------

def run_rng(seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(run)]))


def _one_run(args) -> OptimizationRun:
    obj, seed, r, bfgs_options, rho_exact = args
    x0 = run_rng(seed, r).uniform(0.0, 2 * np.pi, obj.n_params)
    res = bfgs_minimize(obj, obj.gradient, x0, **bfgs_options)
    res.seed = seed
    res.final_cost = obj.breakdown(res.final_parameters)
    if rho_exact is not None:
        res.fidelity = uhlmann_fidelity(obj.system_state(res.final_parameters), rho_exact)
    return res


def multistart_optimize(
    H: PauliHamiltonian,
    beta: float,
    layers_a: int | None = None,
    layers_s: int | None = None,
    runs: int = 10,
    seed: int = 0,
    selector: str = "free_energy",
    jobs: int = 1,
    with_fidelity: bool = True,
    **bfgs_options,
) -> MultistartResult:
    """``runs`` independent BFGS runs from uniform random angles in [0, 2 pi).

    Run ``r`` draws its start from ``SeedSequence([seed, r])``. The best run is
    the one with the lowest final cost (``selector="free_energy"``) or the
    highest fidelity with the exact Gibbs state (``selector="fidelity"``).
    ``beta = 0`` maximizes the entropy instead.
    """
    if runs < 1:
        raise InvalidArgumentError(f"runs must be >= 1, got {runs}")
    if selector not in ("free_energy", "fidelity"):
        raise InvalidArgumentError(f"unknown selector {selector!r}")
    n = H.n_qubits
    layers_a = n - 1 if layers_a is None else layers_a
    layers_s = n - 1 if layers_s is None else layers_s
    obj = FreeEnergyObjective(H, beta, n, layers_a, layers_s)

    rho_exact = exact_free = None
    if with_fidelity or selector == "fidelity":
        spec = exact_spectrum(obj.h_dense, beta)
        v = spec.eigenvectors
        rho_exact = (v * spec.boltzmann_probs) @ v.conj().T
        if beta > 0:
            exact_free = spec.free_energy()

    tasks = [(obj, seed, r, bfgs_options, rho_exact) for r in range(runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one_run, tasks))
    else:
        results = [_one_run(t) for t in tasks]

    if selector == "fidelity":
        best = int(np.argmax([r.fidelity for r in results]))
    else:
        best = int(np.argmin([r.final_value for r in results]))
    return MultistartResult(
        runs=results,
        best_index=best,
        n=n,
        layers_a=layers_a,
        layers_s=layers_s,
        beta=float(beta),
        best_fidelity=results[best].fidelity,
        exact_free_energy=exact_free,
        selector=selector,
    )


# -- shot sampling ---------------------------------------------------------------

def sample_counts(p, n_shots: int, seed) -> np.ndarray:
    """Multinomial outcome counts for ``n_shots`` measurements of distribution ``p``."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidArgumentError("p must be a nonempty vector of nonnegative probabilities")
    if abs(p.sum() - 1) > 1e-10:
        raise InvalidArgumentError(f"probabilities sum to {p.sum()!r}, expected 1")
    if n_shots < 1:
        raise InvalidArgumentError(f"n_shots must be >= 1, got {n_shots}")
    return np.random.default_rng(seed).multinomial(int(n_shots), p / p.sum())


def entropy_from_counts(counts, n_shots: int | None = None) -> float:
    """Plug-in entropy estimate (nats) from outcome counts."""
    counts = np.asarray(counts)
    n_shots = int(counts.sum()) if n_shots is None else int(n_shots)
    if n_shots < 1 or counts.sum() != n_shots:
        raise InvalidArgumentError("counts must sum to n_shots >= 1")
    f = counts[counts > 0] / n_shots
    return float(-np.sum(f * np.log(f)))


def evaluate_cost_sampled(objective: FreeEnergyObjective, x, n_shots: int, seed) -> CostBreakdown:
    """Free energy with the ancilla distribution replaced by measured frequencies.

    Both terms use the frequencies: the entropy through the plug-in estimator,
    the energy as ``sum_i f_i (U_S^T H U_S)_ii``.
    """
    theta, phi = objective.split(x)
    p = objective.probabilities(theta)
    counts = sample_counts(p / p.sum(), n_shots, seed)
    freq = counts / n_shots
    rho = _kernels.final_state(phi, objective._pairs, objective._slots, freq)
    energy = float(np.sum(objective.h_dense * rho.T).real)
    entropy = entropy_from_counts(counts, n_shots)
    free = None if objective.beta == 0 else energy - entropy / objective.beta
    return CostBreakdown(free, energy, entropy, freq, objective.beta)

