import csv
import io
import math

import numpy as np
import pytest

from gibbsvqa.errors import DomainError, InvalidArgumentError
from gibbsvqa.hamiltonian import build_xy_hamiltonian, to_dense
from gibbsvqa.shotscale import (
    CSV_COLUMNS,
    CvRecord,
    alpha_sweep,
    coefficient_of_variation,
    fit_points,
    fit_power_law,
    log_normalized_cv,
    normalized_cv,
    normalized_cv_table,
    write_alpha_csv,
)
from gibbsvqa.vqa import sample_counts

N_RANGE = range(8, 13)


class TestCoefficientOfVariation:
    def test_certain_outcome(self):
        assert coefficient_of_variation(1.0, 100) == 0.0

    def test_uniform(self):
        d, ns = 16, 1000
        assert coefficient_of_variation(1 / d, ns) == pytest.approx(math.sqrt((d - 1) / ns))

    def test_substitution(self):
        assert coefficient_of_variation(0.5, 100) == pytest.approx(0.1)

    def test_zero_probability(self):
        with pytest.raises(DomainError):
            coefficient_of_variation(0.0, 10)

    @pytest.mark.parametrize("p,ns", [(1.5, 10), (-0.1, 10), (0.5, 0)])
    def test_invalid(self, p, ns):
        with pytest.raises(InvalidArgumentError):
            coefficient_of_variation(p, ns)


class TestNormalizedTable:
    def test_infinite_temperature(self):
        for rec in normalized_cv_table(0.5, 0.5, 0.0, N_RANGE, k=51):
            assert rec.normalized_cv == pytest.approx(math.sqrt(2**rec.n - 1), abs=1e-12)

    def test_cold_ground_state(self):
        # h = 2 is gapped; at h = 0.5 the ground state is a near-degenerate parity doublet
        recs = normalized_cv_table(0.5, 2.0, 60.0, [8], k=1)
        assert recs[0].normalized_cv < 1e-6

    def test_cold_doublet(self):
        rec = normalized_cv_table(0.5, 0.5, 20.0, [8], k=1)[0]
        assert rec.normalized_cv == pytest.approx(1, abs=0.01)

    def test_dense_oracle(self):
        e = np.linalg.eigvalsh(to_dense(build_xy_hamiltonian(8, 0.5, 0.5)))
        w = np.exp(-(e - e[0]))
        p0 = w[0] / w.sum()
        ref = math.sqrt((1 - p0) / p0)
        rec = normalized_cv_table(0.5, 0.5, 1.0, [8], k=1)[0]
        assert rec.normalized_cv == pytest.approx(ref, rel=1e-12)
        assert rec.p_i == pytest.approx(p0, rel=1e-12)

    def test_shot_independence(self):
        a = normalized_cv_table(0.5, 0.5, 1.0, [8], k=5, n_shots=10**3)
        b = normalized_cv_table(0.5, 0.5, 1.0, [8], k=5, n_shots=10**6)
        assert [r.normalized_cv for r in a] == [r.normalized_cv for r in b]
        assert a[0].cv == pytest.approx(a[0].normalized_cv / math.sqrt(1000))

    def test_ground_bound(self):
        for beta in (0.0, 0.1, 1.0, 10.0):
            for rec in normalized_cv_table(0.3, 0.5, beta, [8, 9, 10], k=1):
                assert rec.normalized_cv <= math.sqrt(2**rec.n - 1) * (1 + 1e-12)

    def test_overflow_route(self):
        e = np.array([0.0, 1.0, 2.0])
        assert normalized_cv(e, 400.0, 2) == pytest.approx(math.exp(400), rel=1e-12)
        assert normalized_cv(e, 1000.0, 2) == math.inf
        assert log_normalized_cv(e, 1000.0, 2) == pytest.approx(1000.0, rel=1e-15)

    def test_fit_survives_overflow(self):
        fit = fit_power_law(normalized_cv_table(0.5, 0.5, 300.0, N_RANGE, k=51)[50::51])
        assert math.isfinite(fit.alpha)

    def test_records_match_formula(self):
        recs = normalized_cv_table(0.5, 0.5, 0.7, [8], k=10, n_shots=100)
        for r in recs:
            assert r.cv == pytest.approx(coefficient_of_variation(r.p_i, 100), rel=1e-10)
            assert r.cv >= 0

    def test_k_too_large(self):
        with pytest.raises(InvalidArgumentError):
            normalized_cv_table(0.5, 0.5, 1.0, [8], k=257)

    def test_empirical_cv(self):
        p = np.array([0.01, 0.04, 0.2, 0.75])
        ns = 10**5
        counts = np.array([sample_counts(p, ns, seed) for seed in range(100)])
        rel = counts.std(axis=0, ddof=1) / counts.mean(axis=0)
        expected = [coefficient_of_variation(pi, ns) for pi in p]
        assert np.allclose(rel, expected, rtol=0.10)


class TestFit:
    def test_exact_power_law(self):
        ns = np.arange(8, 21)
        fit = fit_points(ns, 3 * ns.astype(float) ** 2)
        assert fit.alpha == pytest.approx(2, abs=1e-10)
        assert fit.C == pytest.approx(3, abs=1e-10)
        assert fit.r_squared == pytest.approx(1, abs=1e-12)
        assert fit.power_law_preferred

    def test_exponential_flagged(self):
        recs = [r for r in normalized_cv_table(0.5, 0.5, 0.0, N_RANGE, k=1)]
        fit = fit_power_law(recs)
        assert fit.r_squared < 1
        assert not fit.power_law_preferred

    def test_xy_ground_exponent(self):
        fit = fit_power_law(normalized_cv_table(0.5, 0.5, 1.0, N_RANGE, k=1))
        assert math.isfinite(fit.alpha) and abs(fit.alpha) <= 6
        assert fit.n_range == tuple(N_RANGE)

    def test_nonpositive(self):
        with pytest.raises(InvalidArgumentError):
            fit_points([8, 9, 10], [1.0, 0.0, 2.0])

    def test_too_few(self):
        with pytest.raises(InvalidArgumentError):
            fit_points([8, 9], [1.0, 2.0])

    def test_mixed_indices(self):
        recs = [CvRecord(8, 1.0, 0, 0.5, 1.0, 1.0), CvRecord(9, 1.0, 1, 0.5, 1.0, 1.0),
                CvRecord(10, 1.0, 0, 0.5, 1.0, 1.0)]
        with pytest.raises(InvalidArgumentError):
            fit_power_law(recs)


class TestSweep:
    def test_cold_ground_exponent(self):
        rows = alpha_sweep([0.5], 0.5, [20.0], N_RANGE, k=1)
        assert abs(rows[0][2].alpha) <= 0.1

    def test_excited_exponent_decreasing(self):
        alphas = [alpha_sweep([0.5], 0.5, [b], N_RANGE, k=51)[50][2].alpha for b in (2.0, 5.0, 10.0)]
        assert alphas[0] > alphas[1] > alphas[2]
        assert alphas[2] < 0

    def test_all_finite(self):
        rows = alpha_sweep([0.5], 0.5, [1.0], N_RANGE, k=51)
        assert len(rows) == 51
        assert all(math.isfinite(f.alpha) and math.isfinite(f.C) for _, _, f in rows)

    def test_csv(self):
        rows = alpha_sweep([0.1, 0.5], 0.5, [1.0, 2.0], [8, 9, 10], k=3)
        buf = io.StringIO()
        write_alpha_csv(rows, buf)
        parsed = list(csv.reader(io.StringIO(buf.getvalue())))
        assert tuple(parsed[0]) == CSV_COLUMNS
        assert len(parsed) == 1 + 2 * 2 * 3
        assert parsed[1][:3] == ["0.1", "1.0", "0"]
        assert parsed[1][-2:] == ["8", "10"]
        assert float(parsed[1][3]) == rows[0][2].alpha

    def test_empty_grid(self):
        with pytest.raises(InvalidArgumentError):
            alpha_sweep([], 0.5, [1.0], N_RANGE)
