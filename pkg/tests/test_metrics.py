import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bcjlsim.errors import ValidationError
from bcjlsim.metrics import (
    DistributionPair,
    SecurityReport,
    bhattacharyya,
    binary_coarsen,
    bw_of_effects,
    helstrom,
    kolmogorov,
    min_bw_measurement,
    outcome_distributions,
    pe_of_effects,
    probability_of_error,
    security_report,
)
from bcjlsim.protocol import builtin_context, honest_density_matrix
from bcjlsim.quantum import root_fidelity
from bcjlsim.randomness import (
    random_density_matrix,
    random_distribution_pair,
    random_effects,
    random_measurement,
)

RHO0 = np.array([[0.75, 0.25], [0.25, 0.25]])
RHO1 = np.array([[0.25, -0.25], [-0.25, 0.75]])


def trace_norm_pe(r0, r1):
    """Independent Helstrom value: 1/2 - ||r0 - r1||_1 / 4."""
    return 0.5 - np.abs(np.linalg.eigvalsh(r0 - r1)).sum() / 4


class TestDistributionMeasures:
    def test_examples(self):
        dp = DistributionPair([0.75, 0.25], [0.25, 0.75])
        assert kolmogorov(dp) == pytest.approx(1.0)
        assert bhattacharyya(dp) == pytest.approx(math.sqrt(3) / 2)
        assert probability_of_error(dp) == pytest.approx(0.25)

    def test_identical_and_disjoint(self):
        same = DistributionPair([0.2, 0.8], [0.2, 0.8])
        assert kolmogorov(same) == 0 and bhattacharyya(same) == pytest.approx(1.0)
        apart = DistributionPair([1, 0, 0], [0, 0.5, 0.5])
        assert kolmogorov(apart) == pytest.approx(2.0) and bhattacharyya(apart) == 0

    def test_invalid_pairs(self):
        with pytest.raises(ValidationError):
            DistributionPair([1.2, -0.2], [0.5, 0.5])
        with pytest.raises(ValidationError):
            DistributionPair([0.5, 0.4], [0.5, 0.5])
        with pytest.raises(ValidationError):
            DistributionPair([0.5, 0.5], [1.0])

    def test_pe_needs_binary_pair(self):
        with pytest.raises(ValidationError):
            probability_of_error(DistributionPair([1, 0, 0], [0, 1, 0]))

    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 12))
    def test_bw_lower_bound_from_kolmogorov(self, seed, m):
        dp = DistributionPair(*random_distribution_pair(m, np.random.default_rng(seed)))
        assert 1 - bhattacharyya(dp) <= kolmogorov(dp) / 2 + 1e-12

    @given(seed=st.integers(0, 2**32 - 1))
    def test_binary_k_is_four_times_pe_gap(self, seed):
        dp = DistributionPair(*random_distribution_pair(2, np.random.default_rng(seed)))
        assert kolmogorov(dp) == pytest.approx(4 * abs(probability_of_error(dp) - 0.5), abs=1e-12)


class TestCoarsening:
    def test_preserves_kolmogorov(self, rng):
        for _ in range(100):
            d = int(rng.integers(2, 5))
            m = random_measurement(d, int(rng.integers(2, 7)), rng)
            r0, r1 = random_density_matrix(d, rng), random_density_matrix(d, rng)
            binary, before, after = binary_coarsen(m, r0, r1)
            assert kolmogorov(after) == pytest.approx(kolmogorov(before), abs=1e-8)
            assert np.allclose(binary.effect(0) + binary.effect(1), np.eye(d), atol=1e-8)

    def test_merged_probabilities(self):
        m = random_measurement(2, 4, np.random.default_rng(0))
        _, before, after = binary_coarsen(m, RHO0, RHO1)
        mask = before.p0 >= before.p1
        assert after.p0[0] == pytest.approx(before.p0[mask].sum(), abs=1e-10)
        assert after.p1[1] == pytest.approx(before.p1[~mask].sum(), abs=1e-10)


class TestHelstrom:
    def test_equal_states(self, rng):
        rho = random_density_matrix(3, rng)
        assert helstrom(rho, rho)[1] == pytest.approx(0.5, abs=1e-10)

    def test_orthogonal_states(self):
        assert helstrom(np.diag([1.0, 0]), np.diag([0, 1.0]))[1] == pytest.approx(0.0, abs=1e-12)

    def test_honest_single_qubit_pair(self):
        povm, pe = helstrom(RHO0, RHO1)
        assert pe == pytest.approx(0.5 - math.sqrt(2) / 4, abs=1e-10)
        assert np.allclose(povm.effect(0) + povm.effect(1), np.eye(2))

    def test_random_search_never_beats_it(self):
        rng = np.random.default_rng(8)
        _, pe = helstrom(RHO0, RHO1)
        effects = random_effects(2, 2, rng, batch=10_000)
        found = pe_of_effects(effects, RHO0, RHO1)
        assert found.min() >= pe - 1e-8

    def test_matches_trace_norm_formula(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 6))
            r0, r1 = random_density_matrix(d, rng).matrix, random_density_matrix(d, rng).matrix
            prior = float(rng.random())
            pe = helstrom(r0, r1, prior)[1]
            expected = 0.5 - np.abs(np.linalg.eigvalsh(prior * r0 - (1 - prior) * r1)).sum() / 2
            assert pe == pytest.approx(expected, abs=1e-10)


class TestMinBW:
    def test_commuting_states(self):
        p, q = np.array([0.5, 0.3, 0.2]), np.array([0.1, 0.1, 0.8])
        _, bw = min_bw_measurement(np.diag(p), np.diag(q))
        assert bw == pytest.approx(np.sqrt(p * q).sum(), abs=1e-12)

    def test_equals_root_fidelity(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 6))
            r0, r1 = random_density_matrix(d, rng), random_density_matrix(d, rng)
            assert min_bw_measurement(r0, r1)[1] == pytest.approx(root_fidelity(r0, r1), abs=1e-8)

    def test_rank_deficient_first_state(self):
        r0 = np.diag([1.0, 0.0])
        r1 = np.array([[0.5, 0.5], [0.5, 0.5]])
        assert min_bw_measurement(r0, r1)[1] == pytest.approx(math.sqrt(0.5), abs=1e-8)

    def test_random_search_never_beats_it(self):
        rng = np.random.default_rng(9)
        _, bw = min_bw_measurement(RHO0, RHO1)
        found = bw_of_effects(random_effects(2, 3, rng, batch=10_000), RHO0, RHO1)
        assert found.min() >= bw - 1e-8


class TestSecurityReport:
    def test_equal_density_context(self):
        ctx = builtin_context("bb84-basis")
        rep = security_report(honest_density_matrix(0, ctx), honest_density_matrix(1, ctx), 0.04, ctx.name)
        assert rep.pe == pytest.approx(0.5) and rep.criterion_met
        assert rep.bw_min == pytest.approx(1.0) and rep.fidelity_root == pytest.approx(1.0)

    def test_single_qubit_fails_criterion(self):
        rep = security_report(RHO0, RHO1, 0.04, "single")
        assert not rep.criterion_met
        assert rep.pe == pytest.approx(trace_norm_pe(RHO0, RHO1), abs=1e-10)
        assert rep.k_optimal == pytest.approx(4 * rep.epsilon_effective, abs=1e-10)
        assert rep.fidelity_squared == pytest.approx(0.5, abs=1e-10)

    def test_epsilon_range(self):
        for bad in (0.0, 0.5, 0.6):
            with pytest.raises(ValueError):
                security_report(RHO0, RHO1, bad)

    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            SecurityReport("x", 0.4, 0.1, 0.5, 0.9, 0.9, 0.81, 0.2, True)

    def test_csv_row_columns(self):
        rep = security_report(RHO0, RHO1, 0.04)
        assert tuple(rep.csv_row()) == SecurityReport.CSV_COLUMNS


def test_outcome_distribution_labels():
    m = random_measurement(2, 3, np.random.default_rng(1))
    dp = outcome_distributions(m, RHO0, RHO1)
    assert dp.outcomes == tuple(m.labels)
