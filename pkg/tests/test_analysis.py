import io
import math

import numpy as np
import pytest
from scipy import special

from sphx import analysis
from sphx.analysis import (
    PhaseRegion,
    epsilon_asymptotic,
    error_band,
    expected_sparsity,
    mu,
    mu_asymptotic,
    mu_derivative,
    mu_sigma,
    normal_approx_bound,
    normal_tail,
    phase_region,
    retrieval_probability,
    solve_epsilons,
    tabulate,
    threshold_h,
    write_tabulation_csv,
)
from sphx.errors import (
    DegenerateCorrelation,
    DegenerateSigma,
    InvalidParams,
    NoSolution,
    OutOfPhaseRegion,
)


def mc_joint_tail(lam, h, n, seed):
    """Monte Carlo oracle for P(w > h, v > h) over correlated normal pairs."""
    rng = np.random.default_rng(seed)
    z1 = rng.standard_normal(n)
    z2 = rng.standard_normal(n)
    v = lam * z1 + math.sqrt(1.0 - lam * lam) * z2
    return float(np.mean((z1 > h) & (v > h)))


class TestThresholdH:
    def test_formula_values(self):
        assert threshold_h(8, 1.0) == pytest.approx(math.sqrt(2 * math.log(8)))
        assert threshold_h(8, 1.0) == pytest.approx(2.039334, abs=1e-6)
        assert threshold_h(65536, 0.5) == pytest.approx(3.330218, abs=1e-6)

    def test_small_r_limit(self):
        assert threshold_h(1024, 1e-12) < 1e-5

    def test_invalid(self):
        with pytest.raises(InvalidParams):
            threshold_h(1, 0.5)
        with pytest.raises(InvalidParams):
            threshold_h(16, 0.0)


class TestNormalTail:
    def test_zero(self):
        assert normal_tail(0.0).exact == pytest.approx(0.5)

    def test_at_index_threshold(self):
        h = threshold_h(65536, 0.5)
        assert normal_tail(h).exact == pytest.approx(4.3389e-4, rel=1e-4)

    @pytest.mark.parametrize("h", [0.5, 1.0, 2.0, 5.0, 8.0])
    def test_exact_below_asymptotic(self, h):
        t = normal_tail(h)
        assert t.exact <= t.asymptotic

    def test_nonpositive_h_has_infinite_bound(self):
        assert normal_tail(-1.0).asymptotic == math.inf


class TestExpectedSparsity:
    def test_reference_point(self):
        est = expected_sparsity(65536, 0.5)
        assert est.exact == pytest.approx(28.4354, abs=1e-3)
        assert est.upper == pytest.approx(30.6674, abs=1e-3)
        assert est.exact <= est.upper
        assert est.asymptotic == est.upper

    def test_small_r_approaches_half(self):
        est = expected_sparsity(1024, 1e-14)
        assert est.exact == pytest.approx(512.0, rel=1e-6)

    def test_monotone_in_r(self):
        ks = [expected_sparsity(4096, r).exact for r in (0.25, 0.5, 0.75)]
        assert ks[0] > ks[1] > ks[2]


class TestMu:
    def test_independence_case(self):
        for h in (0.0, 1.0, 2.5):
            tail = normal_tail(h).exact
            assert mu(0.0, h) == pytest.approx(tail * tail, abs=1e-12)

    def test_perfect_correlation(self):
        for h in (0.5, 3.0):
            assert mu(1.0, h) == pytest.approx(normal_tail(h).exact, abs=1e-10)

    def test_anticorrelation_vanishes(self):
        assert mu(-1.0, 2.0) == 0.0

    def test_matches_monte_carlo(self):
        # oracle: 1e7 correlated normal pairs
        lam, h, n = 0.5, 3.0, 10**7
        est = mc_joint_tail(lam, h, n, seed=101)
        q = mu(lam, h)
        se = math.sqrt(q * (1 - q) / n)
        assert abs(est - q) <= 4 * se

    def test_sign_hash_closed_form(self):
        # at h=0, mu = 1/4 + arcsin(lambda)/(2 pi)
        for lam in (-0.7, -0.2, 0.3, 0.8):
            assert mu(lam, 0.0) == pytest.approx(
                0.25 + math.asin(lam) / (2 * math.pi), abs=1e-12
            )

    def test_monotone_in_lambda(self):
        # strict on the coarse grid; nondecreasing-within-noise on a fine one
        for h in (0.0, 1.0, 2.0, 3.33):
            coarse = [mu(g, h) for g in (-0.9, -0.5, 0.0, 0.3, 0.6, 0.9)]
            assert all(b > a for a, b in zip(coarse, coarse[1:]))
        fine = [mu(g, 2.0) for g in np.linspace(-0.95, 0.95, 39)]
        assert all(b >= a - 1e-15 for a, b in zip(fine, fine[1:]))


class TestMuSigma:
    def test_sigma_identity(self):
        s = mu_sigma(0.4, 2.0, 1024)
        assert s.sigma == pytest.approx(math.sqrt(s.mu * (1 - s.mu)), abs=1e-12)
        assert s.expected_count == pytest.approx(1024 * s.mu)

    def test_derivative_at_zero(self):
        for h in (0.7, 1.9):
            s = mu_sigma(0.0, h, 2)
            assert s.dmu == pytest.approx(math.exp(-h * h) / (2 * math.pi), abs=1e-14)

    def test_clamped_at_one(self):
        s = mu_sigma(1.0, 2.0, 16)
        assert s.clamped and math.isnan(s.dmu)
        assert s.mu == pytest.approx(normal_tail(2.0).exact)

    def test_derivative_matches_finite_difference(self):
        # oracle: centered difference of the quadrature at step 1e-5
        h = 2.0
        for lam in np.linspace(-0.9, 0.95, 12):
            step = 1e-5
            fd = (mu(lam + step, h) - mu(lam - step, h)) / (2 * step)
            assert mu_derivative(lam, h) == pytest.approx(fd, rel=1e-6)

    def test_second_derivative_positive_for_positive_lambda(self):
        for lam in (0.1, 0.4, 0.7, 0.9):
            assert mu_sigma(lam, 2.0, 2).d2mu > 0

    def test_derivative_degenerate(self):
        with pytest.raises(DegenerateCorrelation):
            mu_derivative(1.0, 2.0)


class TestMuAsymptotic:
    def test_constant_at_zero(self):
        approx = mu_asymptotic(0.0, 2**16, 0.5)
        expected = (1 / (2 * math.pi)) * (2**16) ** -1.0 / math.log(2**16)
        assert approx.mu_approx == pytest.approx(expected, rel=1e-12)

    def test_reference_ratio_to_quadrature(self):
        # The approximation converges logarithmically: at m=2^20 it still
        # overshoots the quadrature by ~80%, improving slowly with m.
        ex = mu(0.9, threshold_h(2**20, 0.5))
        ap = mu_asymptotic(0.9, 2**20, 0.5).count_approx / 2**20
        assert ap / ex == pytest.approx(1.80, abs=0.02)
        ex2 = mu(0.9, threshold_h(2**30, 0.5))
        ap2 = mu_asymptotic(0.9, 2**30, 0.5).mu_approx
        assert ap2 / ex2 < ap / ex

    def test_exponent_sign_flip_at_boundary(self):
        # expected count grows with m above lambda = 2r-1, shrinks below
        r = 0.5
        grow = [mu_asymptotic(0.3, m, r).count_approx for m in (2**14, 2**20)]
        decay = [mu_asymptotic(-0.3, m, r).count_approx for m in (2**14, 2**20)]
        assert grow[1] > grow[0]
        assert decay[1] < decay[0]

    def test_degenerate(self):
        with pytest.raises(DegenerateCorrelation):
            mu_asymptotic(1.0, 1024, 0.5)


class TestPhaseRegion:
    def test_cases(self):
        assert phase_region(-0.2, 0.5) is PhaseRegion.VANISHING
        assert phase_region(0.9, 0.5) is PhaseRegion.GAUSSIAN
        assert phase_region(0.0, 0.5) is PhaseRegion.BOUNDARY


class TestEpsilonAsymptotic:
    def test_linear_in_eta(self):
        e1 = epsilon_asymptotic(0.9, 2**16, 0.45, 1.0)
        e2 = epsilon_asymptotic(0.9, 2**16, 0.45, 2.0)
        assert epsilon_asymptotic(0.9, 2**16, 0.45, 0.0) == 0.0
        assert e2 == pytest.approx(2 * e1)

    def test_out_of_region(self):
        with pytest.raises(OutOfPhaseRegion):
            epsilon_asymptotic(-0.1, 2**16, 0.5, 1.0)
        with pytest.raises(OutOfPhaseRegion):
            epsilon_asymptotic(0.2, 2**16, 0.7, 1.0)


class TestSolveEpsilons:
    def test_zero_eta(self):
        assert solve_epsilons(0.5, 2**12, 0.4, 0.0) == (0.0, 0.0)

    def test_residuals(self):
        lam, m, r, eta = 0.9, 2**16, 0.45, 1.645
        h = threshold_h(m, r)
        em, ep = solve_epsilons(lam, m, r, eta)
        mu_lam = mu(lam, h)
        res_m = (mu_lam - mu(lam - em, h)) / analysis.sigma_of_mu(mu(lam - em, h)) * math.sqrt(m)
        res_p = (mu(lam + ep, h) - mu_lam) / analysis.sigma_of_mu(mu(lam + ep, h)) * math.sqrt(m)
        assert abs(res_m - eta) <= 1e-10
        assert abs(res_p - eta) <= 1e-10

    def test_reference_m16(self):
        em, ep = solve_epsilons(0.9, 2**16, 0.45, 1.645)
        ea = epsilon_asymptotic(0.9, 2**16, 0.45, 1.645)
        assert em == pytest.approx(0.064544, abs=2e-6)
        assert ep == pytest.approx(0.056808, abs=2e-6)
        assert 0.5 < em / ep < 2.0
        assert 0.5 < ea / em < 2.0 and 0.5 < ea / ep < 2.0

    def test_decreasing_in_m(self):
        pairs = [solve_epsilons(0.9, 2**p, 0.45, 1.645) for p in range(14, 21, 2)]
        for (m0, p0), (m1, p1) in zip(pairs, pairs[1:]):
            assert m1 < m0 and p1 < p0

    def test_closed_form_gap_at_large_m(self):
        # the closed-form width still overshoots the implicit solutions by
        # ~31% / ~40% at m = 2^20 (log-factor convergence), narrowing with m
        em, ep = solve_epsilons(0.9, 2**20, 0.5, 1.645)
        ea = epsilon_asymptotic(0.9, 2**20, 0.5, 1.645)
        assert abs(ea - em) / em == pytest.approx(0.313, abs=0.01)
        assert abs(ea - ep) / ep == pytest.approx(0.403, abs=0.01)
        em2, ep2 = solve_epsilons(0.9, 2**26, 0.5, 1.645)
        ea2 = epsilon_asymptotic(0.9, 2**26, 0.5, 1.645)
        assert abs(ea2 - em2) / em2 < abs(ea - em) / em
        assert abs(ea2 - ep2) / ep2 < abs(ea - ep) / ep

    def test_no_solution_plus_side(self):
        with pytest.raises(NoSolution) as exc:
            solve_epsilons(0.9, 4, 0.45, 50.0)
        assert exc.value.side == "plus"


class TestRetrievalProbability:
    def test_at_cutoff(self):
        rp = retrieval_probability(0.5, 0.5, 2.0, 2**12)
        assert rp.gauss_approx == pytest.approx(0.5)

    def test_matches_eta_quantile(self):
        lam, m, r, eta = 0.9, 2**16, 0.45, 1.645
        h = threshold_h(m, r)
        em, _ = solve_epsilons(lam, m, r, eta)
        rp = retrieval_probability(lam, lam - em, h, m)
        # P(N >= 1.645) is the 5% design point
        assert rp.gauss_approx == pytest.approx(float(special.ndtr(-eta)), abs=1e-9)
        assert rp.gauss_approx == pytest.approx(0.05, abs=5e-4)
        assert rp.be_bound == pytest.approx(1 / math.sqrt(mu(lam - em, h) * m))

    def test_degenerate_sigma(self):
        with pytest.raises(DegenerateSigma):
            retrieval_probability(0.0, -1.0, 2.0, 64)


class TestNormalApproxBound:
    def test_bound_value(self):
        h = 2.0
        b = normal_approx_bound(0.5, h, 4096)
        assert b.bound == pytest.approx(1 / math.sqrt(mu(0.5, h) * 4096), abs=1e-12)
        assert b.c0 == 0.4748

    def test_dominates_berry_esseen_chain(self):
        # C0 * rho / (sigma^3 sqrt(m)) <= 1/sqrt(mu m) via rho <= sigma^2
        h, m = 2.0, 4096
        for lam in (-0.5, 0.0, 0.5, 0.9):
            mu_v = mu(lam, h)
            sig = analysis.sigma_of_mu(mu_v)
            b = normal_approx_bound(lam, h, m)
            assert b.c0 * b.rho / (sig**3 * math.sqrt(m)) <= b.bound + 1e-15


class TestTabulate:
    def test_rows_and_csv(self):
        rows = tabulate([0.5, 0.8, 0.9], m=2**14, r=0.45, eta=1.645)
        assert len(rows) == 3
        for row in rows:
            assert set(row) == {
                "lambda", "h", "m", "r", "mu", "sigma",
                "eps_minus", "eps_plus", "be_bound", "poisson_regime",
            }
        buf = io.StringIO()
        write_tabulation_csv(rows, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0].startswith("lambda,") and len(lines) == 4

    def test_out_of_region_rows_are_nan(self):
        row = tabulate([-0.5], m=2**14, r=0.45, eta=1.645)[0]
        assert math.isnan(row["eps_minus"])

    def test_poisson_flag(self):
        row = tabulate([0.2], m=2**14, r=0.45, eta=1.645)[0]
        assert row["poisson_regime"] == (row["mu"] * 2**14 < 10)


class TestErrorBand:
    def test_fields_consistent(self):
        band = error_band(0.9, 2**16, 0.45, 1.645)
        h = threshold_h(2**16, 0.45)
        assert band.be_bound == pytest.approx(
            1 / math.sqrt(mu(0.9 - band.eps_minus, h) * 2**16)
        )
        assert band.eps_asym == pytest.approx(
            epsilon_asymptotic(0.9, 2**16, 0.45, 1.645)
        )
