import json
import math
from fractions import Fraction

import numpy as np
import pytest

from bcjlsim import protocol
from bcjlsim.attack import (
    AttackReport,
    attack_acceptance,
    attack_bound,
    attack_report,
    attack_unveil,
    build_attack,
    classic_bound,
    ideal_acceptance,
    reports_to_csv,
    sample_acceptance,
    transcript_distribution,
    verify_delta_bound,
)
from bcjlsim.attack import _bob_measurement
from bcjlsim.errors import InfeasibleContextError
from bcjlsim.protocol import LinearCode, SharedContext, Transcript, builtin_context, gf2_rank
from bcjlsim.quantum import DISCARD, apply_measurement, encode_bb84, root_fidelity


@pytest.fixture(scope="module")
def single_attack():
    return build_attack(builtin_context("single"))


@pytest.fixture(scope="module")
def toy_attack():
    return build_attack(builtin_context("toy42"))


@pytest.fixture(scope="module")
def hamming_attack():
    return build_attack(builtin_context("hamming84"))


def random_context(rng, max_n=4):
    while True:
        n = int(rng.integers(1, max_n + 1))
        k = int(rng.integers(1, n + 1))
        g = rng.integers(0, 2, size=(k, n)).astype(np.uint8)
        if gf2_rank(g) < k:
            continue
        try:
            return SharedContext(LinearCode(g), rng.integers(0, 2, size=n).astype(np.uint8))
        except InfeasibleContextError:
            continue


def explicit_acceptance(att, b):
    """Pr(T_b ok | phi0) from full Kronecker products, without the coefficient-matrix shortcut."""
    phi = att.phi0
    d, a = phi.system_dim, phi.ancilla_dim
    joint = np.outer(phi.joint.amplitudes, phi.joint.amplitudes.conj())
    povm = att.steering(b)
    total = 0.0
    for j, label in enumerate(povm.labels):
        if label == DISCARD:
            continue
        theta, c = label
        big = np.kron(protocol.acceptance_operator(b, theta, c, att.context), povm.effect(j))
        total += np.real(np.trace(big @ joint))
    return total


class TestBuildAttack:
    def test_equal_density_context(self):
        att = build_attack(builtin_context("bb84-basis"))
        assert att.overlap == pytest.approx(1.0, abs=1e-10)
        assert attack_acceptance(att, 1) == pytest.approx(1.0, abs=1e-8)
        assert verify_delta_bound(att).delta == pytest.approx(0.0, abs=1e-8)

    def test_single_qubit_overlap(self, single_attack):
        assert single_attack.overlap == pytest.approx(1 / math.sqrt(2), abs=1e-10)

    def test_hamming_invariants(self, hamming_attack):
        att = hamming_attack
        assert att.phi0.purifies(att.rho0) and att.phi1.purifies(att.rho1)
        assert att.overlap == pytest.approx(root_fidelity(att.rho0, att.rho1), abs=1e-8)
        assert np.max(np.abs(att.steer1.total() - np.eye(att.phi1.ancilla_dim))) < 1e-8


class TestAttackUnveil:
    def test_b0_reproduces_honest_commitment(self, toy_attack):
        ctx = toy_attack.context
        thetas, cs, probs = ctx.honest_pairs(0)
        outcomes = [o for o in attack_unveil(toy_attack, 0) if o.label != DISCARD]
        assert len(outcomes) == len(probs)
        for out, theta, c, p in zip(outcomes, thetas, cs, probs):
            assert out.label == (tuple(theta), tuple(c))
            assert out.probability == pytest.approx(p, abs=1e-10)
            assert abs(out.state.overlap(encode_bb84(c, theta))) == pytest.approx(1.0, abs=1e-8)
        assert attack_acceptance(toy_attack, 0) == pytest.approx(1.0, abs=1e-10)

    def test_probabilities_sum_to_one(self, hamming_attack):
        for b in (0, 1):
            total = sum(o.probability for o in attack_unveil(hamming_attack, b))
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_b1_against_explicit_kronecker_oracle(self, single_attack):
        assert attack_acceptance(single_attack, 1) == pytest.approx(explicit_acceptance(single_attack, 1), abs=1e-10)
        # the oracle evaluates to 3/4 for the one-qubit context
        assert explicit_acceptance(single_attack, 1) == pytest.approx(0.75, abs=1e-10)

    def test_b1_oracle_on_toy_code(self, toy_attack):
        assert attack_acceptance(toy_attack, 1) == pytest.approx(explicit_acceptance(toy_attack, 1), abs=1e-10)

    def test_ideal_acceptance_is_one(self, toy_attack, hamming_attack):
        for att in (toy_attack, hamming_attack):
            assert ideal_acceptance(att, 1) == pytest.approx(1.0, abs=1e-8)

    def test_agrees_with_transcript_enumeration(self, toy_attack):
        dist = transcript_distribution(toy_attack, 1)
        accepted = 0.0
        for (alice, (theta_hat, c_hat)), p in dist.items():
            if alice == DISCARD:
                continue
            t = Transcript(np.array(alice[0]), np.array(alice[1]), theta_hat, c_hat, toy_attack.context)
            accepted += p * protocol.test_unveil(1, t)
        assert accepted == pytest.approx(attack_acceptance(toy_attack, 1), abs=1e-8)


class TestBounds:
    def test_classic_bound_exact(self):
        assert classic_bound(Fraction(1, 25), Fraction(1, 25)) == Fraction(4, 25)
        assert classic_bound(0.04, 0.04) == pytest.approx(0.16, abs=1e-12)

    def test_attack_bound_examples(self):
        assert attack_bound(1.0, 0.0) == 1.0
        assert attack_bound(0.999, 0.0) == pytest.approx(1 - 2 * math.sqrt(0.002), abs=1e-12)
        assert attack_bound(0.999, 0.0) == pytest.approx(0.9106, abs=1e-4)

    def test_attack_bound_domain(self):
        with pytest.raises(ValueError):
            attack_bound(1.5, 0.0)

    def test_delta_chain_on_random_contexts(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            att = build_attack(random_context(rng))
            check = verify_delta_bound(att)
            assert check.holds
            assert check.delta <= check.link_operator + 1e-8
            assert check.link_operator <= check.link_norm + 1e-8
            assert abs(check.link_norm**2 / 4 - 2 * (1 - att.overlap)) < 1e-10

    def test_delta_chain_with_error_allowance(self, toy_attack):
        assert verify_delta_bound(toy_attack, protocol.TestPolicy(0.5)).holds


class TestReport:
    def test_single_qubit_numbers(self, single_attack):
        rep = attack_report(single_attack, 0.04, 0.04)
        assert rep.accept0 == pytest.approx(1.0) and rep.accept1 == pytest.approx(0.75)
        assert rep.delta == pytest.approx(0.25)
        assert rep.bound_delta == pytest.approx(2 * math.sqrt(2 - math.sqrt(2)))
        assert rep.classic_bound == pytest.approx(0.16)
        assert rep.holds

    def test_json_and_csv(self, toy_attack):
        rep = attack_report(toy_attack, 0.04, 0.04)
        doc = json.loads(rep.to_json())
        assert list(doc) == sorted(doc)
        csv_text = reports_to_csv([rep.csv_row()], AttackReport.CSV_COLUMNS)
        header, row = csv_text.strip().split("\n")
        assert header.split(",") == list(AttackReport.CSV_COLUMNS)
        assert row.startswith("toy42,")

    def test_inconsistent_report_rejected(self):
        with pytest.raises(ValueError):
            AttackReport("x", 0.5, 1.0, 0.5, 1.0, 0.9, 0.5, 1, 1, 0, 0.16, 0.04, 0.04, True)


class TestOrderExchange:
    @pytest.mark.parametrize("b", [0, 1])
    def test_exact_distributions_agree(self, toy_attack, b):
        first = transcript_distribution(toy_attack, b, "alice_first")
        second = transcript_distribution(toy_attack, b, "bob_first")
        assert set(first) == set(second)
        assert max(abs(first[k] - second[k]) for k in first) < 1e-8

    def test_sampled_bob_first_matches_exact(self, single_attack):
        # Bob measures first, Alice steers the post-measurement state; chi-square against exact
        att = single_attack
        exact = transcript_distribution(att, 1, "alice_first")
        bob_out = apply_measurement(_bob_measurement(1), att.phi0.joint, [0])
        tree = []
        for bo in bob_out:
            if bo.state is None:
                continue
            for ao in apply_measurement(att.steer1, bo.state, [att.phi0.ancilla_index]):
                tree.append(((ao.label, bo.label), bo.probability * ao.probability))
        keys = [k for k, _ in tree]
        probs = np.array([p for _, p in tree])
        rng = np.random.default_rng(17)
        shots = 50_000
        counts = np.bincount(rng.choice(len(keys), size=shots, p=probs / probs.sum()), minlength=len(keys))
        expected = np.array([exact.get(k, 0.0) for k in keys]) * shots
        live = expected > 0
        chi2 = float((((counts - expected) ** 2)[live] / expected[live]).sum())
        df = int(live.sum()) - 1
        assert not counts[~live].any()
        assert chi2 < df + 5 * math.sqrt(2 * df)


def test_sampled_acceptance_tracks_exact(single_attack):
    est, count = sample_acceptance(single_attack, 1, 20_000, np.random.default_rng(3))
    sigma = math.sqrt(0.75 * 0.25 / 20_000)
    assert abs(est - 0.75) < 5 * sigma
    assert count == round(est * 20_000)


def test_same_seed_same_sample(toy_attack):
    a = sample_acceptance(toy_attack, 1, 1000, np.random.default_rng([1, 0]))
    b = sample_acceptance(toy_attack, 1, 1000, np.random.default_rng([1, 0]))
    assert a == b
