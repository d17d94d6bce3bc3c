import numpy as np
import pytest

from bcjlsim.errors import DimensionError, ValidationError
from bcjlsim.quantum import (
    DensityMatrix,
    GeneralMeasurement,
    Povm,
    PureState,
    apply_measurement,
    bb84_measurement,
    joint_outcome_distribution,
    partial_trace,
)
from bcjlsim.randomness import (
    random_density_matrix,
    random_measurement,
    random_povm,
    random_pure_state,
)

Z_BASIS = GeneralMeasurement.in_basis(np.eye(2), labels=(0, 1))


def test_plus_in_computational_basis():
    plus = PureState(np.array([1, 1]) / np.sqrt(2))
    out = apply_measurement(Z_BASIS, plus)
    assert [o.label for o in out] == [0, 1]
    assert [o.probability for o in out] == pytest.approx([0.5, 0.5])


def test_bell_half_measurement_steers_other_half():
    bell = PureState(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    for label, p, cond in apply_measurement(Z_BASIS, bell, [0]):
        assert p == pytest.approx(0.5)
        other = partial_trace(cond, [1]).matrix
        expected = np.zeros((2, 2))
        expected[label, label] = 1
        assert np.allclose(other, expected)


def test_mixed_and_pure_inputs_agree(rng):
    psi = PureState(random_pure_state(6, rng).amplitudes, (2, 3))
    m = random_measurement(3, 4, rng)
    pure = apply_measurement(m, psi, [1])
    mixed = apply_measurement(m, psi.density_matrix(), [1])
    for a, b in zip(pure, mixed):
        assert a.probability == pytest.approx(b.probability, abs=1e-12)
        assert np.allclose(np.outer(a.state.amplitudes, a.state.amplitudes.conj()), b.state.matrix, atol=1e-10)


def test_probabilities_sum_to_one_random_povms(rng):
    for _ in range(100):
        d = int(rng.integers(2, 7))
        povm = random_povm(d, int(rng.integers(2, 6)), rng)
        state = random_density_matrix(d, rng) if rng.random() < 0.5 else random_pure_state(d, rng)
        total = sum(o.probability for o in apply_measurement(povm, state))
        assert total == pytest.approx(1.0, abs=1e-8)


def test_null_outcomes_flagged():
    out = apply_measurement(Z_BASIS, PureState(np.array([1.0, 0.0])))
    assert out[1].probability == 0.0 and out[1].state is None


def test_isometry_model():
    # Naimark dilation of the trine POVM: U maps C^2 into C^3, then measure in the standard basis
    angles = 2 * np.pi * np.arange(3) / 3
    u = np.sqrt(2 / 3) * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    projectors = [np.diag(np.eye(3)[j]) for j in range(3)]
    m = GeneralMeasurement.from_isometry(u, projectors, labels="abc")
    assert m.operators[0].shape == (3, 2)
    out = apply_measurement(m, PureState(np.array([1.0, 0.0])))
    assert [o.probability for o in out] == pytest.approx([2 / 3, 1 / 6, 1 / 6])
    assert out[0].state.dims == (3,)


def test_isometry_model_changes_only_the_measured_subsystem(rng):
    u = np.linalg.qr(rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))[0]
    m = GeneralMeasurement.from_isometry(u, [np.diag(np.eye(3)[j]) for j in range(3)])
    psi = PureState(random_pure_state(8, rng).amplitudes, (2, 2, 2))
    out = apply_measurement(m, psi, [1])
    assert all(o.state.dims == (2, 3, 2) for o in out)
    # unmeasured subsystems keep their joint reduced state on average
    avg = sum(o.probability * partial_trace(o.state, [0, 2]).matrix for o in out)
    assert np.allclose(avg, partial_trace(psi, [0, 2]).matrix, atol=1e-10)


def test_incomplete_measurement_rejected():
    with pytest.raises(ValidationError):
        GeneralMeasurement((np.diag([1.0, 0.0]),))
    with pytest.raises(ValidationError):
        Povm.from_effects([np.eye(2) * 0.5])


def test_non_isometry_rejected():
    with pytest.raises(ValidationError):
        GeneralMeasurement.from_isometry(np.ones((3, 2)), [np.eye(3)])


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_measurement(Z_BASIS, PureState(np.ones(3) / np.sqrt(3)))


def test_bb84_measurement_labels():
    m = bb84_measurement("+x")
    assert m.labels[1] == (0, 1)
    plus_zero = PureState(np.kron([1, 0], [1, 1]) / np.sqrt(2), (2, 2))
    out = apply_measurement(m, plus_zero)
    assert out[0].probability == pytest.approx(1.0)


def test_povm_factor_and_effect_views_agree(rng):
    povm = random_povm(3, 4, rng)
    rebuilt = Povm.from_effects(povm.effects())
    assert np.allclose(rebuilt.effects(), povm.effects(), atol=1e-12)
    rho = random_density_matrix(3, rng)
    assert np.allclose(povm.probabilities(rho), rebuilt.probabilities(rho))


@pytest.mark.parametrize("trial", range(20))
def test_disjoint_measurements_commute(trial):
    rng = np.random.default_rng([99, trial])
    da, db = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    state = PureState(random_pure_state(da * db, rng).amplitudes, (da, db))
    if trial % 2:
        state = DensityMatrix(random_density_matrix(da * db, rng).matrix, (da, db))
    alice = random_povm(da, int(rng.integers(2, 5)), rng)
    bob = random_measurement(db, int(rng.integers(2, 5)), rng, d_out=int(rng.integers(db, db + 2)))
    ab = joint_outcome_distribution(state, (alice, 0), (bob, 1))
    ba = joint_outcome_distribution(state, (bob, 1), (alice, 0))
    for (a, b), p in ab.items():
        assert p == pytest.approx(ba[(b, a)], abs=1e-8)
    assert sum(ab.values()) == pytest.approx(1.0, abs=1e-8)
