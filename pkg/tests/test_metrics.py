import math

import numpy as np
import pytest
import scipy.linalg

from gibbsvqa.errors import DomainError, InvalidArgumentError
from gibbsvqa.metrics import relative_entropy, trace_distance, uhlmann_fidelity


def random_density(rng, d, rank=None):
    rank = d if rank is None else rank
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])


class TestFidelity:
    def test_self(self):
        rng = np.random.default_rng(0)
        for d in (2, 4, 8):
            rho = random_density(rng, d)
            assert uhlmann_fidelity(rho, rho) == pytest.approx(1, abs=1e-10)

    def test_orthogonal(self):
        assert uhlmann_fidelity(P0, P1) == pytest.approx(0, abs=1e-12)

    def test_mixed_vs_pure(self):
        assert uhlmann_fidelity(np.eye(2) / 2, P0) == pytest.approx(0.5, abs=1e-12)

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        a, b = random_density(rng, 4), random_density(rng, 4, rank=2)
        assert uhlmann_fidelity(a, b) == pytest.approx(uhlmann_fidelity(b, a), abs=1e-10)

    def test_sqrtm_oracle(self):
        rng = np.random.default_rng(2)
        for d in (2, 4, 8):
            for _ in range(20):
                rho, sigma = random_density(rng, d), random_density(rng, d)
                w, v = np.linalg.eigh(rho)
                sq = (v * np.sqrt(w)) @ v.conj().T
                inner = scipy.linalg.sqrtm(sq @ sigma @ sq)
                ref = np.trace(inner).real ** 2
                assert uhlmann_fidelity(rho, sigma) == pytest.approx(ref, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            uhlmann_fidelity(np.eye(2) / 2, np.eye(4) / 4)


class TestTraceDistance:
    def test_examples(self):
        rng = np.random.default_rng(3)
        rho = random_density(rng, 4)
        assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-14)
        assert trace_distance(P0, P1) == pytest.approx(1)
        assert trace_distance(np.eye(2) / 2, np.diag([0.75, 0.25])) == pytest.approx(0.25)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            trace_distance(np.eye(2) / 2, np.eye(4) / 4)

    def test_fuchs_van_de_graaf(self):
        rng = np.random.default_rng(4)
        for d in (2, 4, 8):
            for k in range(200):
                rank = None if k % 3 else int(rng.integers(1, d + 1))
                rho, sigma = random_density(rng, d, rank), random_density(rng, d)
                f, t = uhlmann_fidelity(rho, sigma), trace_distance(rho, sigma)
                assert 1 - math.sqrt(f) - 1e-9 <= t <= math.sqrt(1 - f) + 1e-9


class TestRelativeEntropy:
    def test_self(self):
        rho = random_density(np.random.default_rng(5), 4)
        assert relative_entropy(rho, rho) == pytest.approx(0, abs=1e-12)

    def test_commuting_example(self):
        ref = -math.log(2) - 0.5 * math.log(0.75) - 0.5 * math.log(0.25)
        assert ref == pytest.approx(0.143841, abs=1e-6)
        assert relative_entropy(np.eye(2) / 2, np.diag([0.75, 0.25])) == pytest.approx(ref, abs=1e-12)

    def test_pure_vs_mixed(self):
        assert relative_entropy(P0, np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-12)

    def test_support_violation(self):
        with pytest.raises(DomainError):
            relative_entropy(np.eye(2) / 2, P0)

    def test_against_logm(self):
        rng = np.random.default_rng(6)
        sigma, rho = random_density(rng, 4), random_density(rng, 4)
        ref = np.trace(sigma @ (scipy.linalg.logm(sigma) - scipy.linalg.logm(rho))).real
        assert relative_entropy(sigma, rho) == pytest.approx(ref, abs=1e-9)
        assert relative_entropy(sigma, rho) > 0
