"""Classical distinguishability of Bob's outcomes and the security-against-Bob criterion."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .quantum.measurement import GeneralMeasurement, Povm
from .quantum.states import (
    CONSTRUCT_ATOL,
    EQUAL_ATOL,
    as_matrix,
    psd_power,
    matrix_sqrt,
    root_fidelity,
)


@dataclass(frozen=True, eq=False)
class DistributionPair:
    """Outcome distributions p0 (bit 0 committed) and p1 (bit 1) over shared labels."""

    p0: np.ndarray
    p1: np.ndarray
    outcomes: tuple = None

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=float)
        p1 = np.asarray(self.p1, dtype=float)
        if p0.ndim != 1 or p0.shape != p1.shape:
            raise ValidationError(f"distributions must be vectors of equal length, got {p0.shape}, {p1.shape}")
        for name, p in (("p0", p0), ("p1", p1)):
            if np.any(p < -CONSTRUCT_ATOL):
                raise ValidationError(f"{name} has a negative entry")
            if abs(p.sum() - 1.0) > CONSTRUCT_ATOL:
                raise ValidationError(f"{name} sums to {p.sum()!r}")
        object.__setattr__(self, "p0", np.clip(p0, 0.0, None))
        object.__setattr__(self, "p1", np.clip(p1, 0.0, None))
        outcomes = tuple(range(p0.size)) if self.outcomes is None else tuple(self.outcomes)
        if len(outcomes) != p0.size:
            raise ValidationError("one label per outcome required")
        object.__setattr__(self, "outcomes", outcomes)


def kolmogorov(dp: DistributionPair) -> float:
    """L1 distance sum_x |p0(x) - p1(x)|, in [0, 2]."""
    return float(np.abs(dp.p0 - dp.p1).sum())


def bhattacharyya(dp: DistributionPair) -> float:
    return float(min(1.0, np.sqrt(dp.p0 * dp.p1).sum()))


def _effects(m) -> np.ndarray:
    if isinstance(m, (GeneralMeasurement, Povm)):
        return m.effects()
    return np.asarray(m, dtype=complex)


def outcome_distributions(m, rho0, rho1) -> DistributionPair:
    """Distribution of the outcome of measurement ``m`` on rho0 and on rho1."""
    eff = _effects(m)
    a, b = as_matrix(rho0), as_matrix(rho1)
    if eff.shape[-1] != a.shape[0]:
        raise DimensionError("measurement and states differ in dimension")
    p0 = np.real(np.einsum("jkl,lk->j", eff, a))
    p1 = np.real(np.einsum("jkl,lk->j", eff, b))
    labels = getattr(m, "labels", None)
    return DistributionPair(p0, p1, labels)


def binary_coarsen(m: GeneralMeasurement, rho0, rho1) -> tuple[Povm, DistributionPair, DistributionPair]:
    """Merge outcomes into A0 = {j : p0(j) >= p1(j)} and A1 = the rest.

    The merge happens on effects, E'_x = sum_{j in A_x} M_j^dag M_j, so the
    returned binary POVM reproduces the merged probabilities exactly.
    Returns (binary POVM labelled 0/1, distributions before, after).
    """
    before = outcome_distributions(m, rho0, rho1)
    in_a0 = before.p0 >= before.p1
    eff = _effects(m)
    d = eff.shape[-1]
    e0 = eff[in_a0].sum(axis=0) if in_a0.any() else np.zeros((d, d), complex)
    e1 = eff[~in_a0].sum(axis=0) if (~in_a0).any() else np.zeros((d, d), complex)
    binary = Povm.from_effects((e0, e1), labels=(0, 1))
    after = outcome_distributions(binary, rho0, rho1)
    return binary, before, after


def probability_of_error(dp: DistributionPair, prior0: float = 0.5) -> float:
    """PE = Pr(b=0) Pr(guess 1 | 0) + Pr(b=1) Pr(guess 0 | 1); outcome i is the guess i."""
    if dp.p0.size != 2:
        raise ValidationError("probability of error needs a binary (guess 0 / guess 1) pair")
    if not 0.0 <= prior0 <= 1.0:
        raise ValueError("prior0 must lie in [0, 1]")
    return float(prior0 * dp.p0[1] + (1.0 - prior0) * dp.p1[0])


def helstrom(rho0, rho1, prior0: float = 0.5) -> tuple[Povm, float]:
    """Minimum-error measurement: guess 0 on the nonnegative eigenspace of p0 rho0 - p1 rho1."""
    a, b = as_matrix(rho0), as_matrix(rho1)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    if not 0.0 <= prior0 <= 1.0:
        raise ValueError("prior0 must lie in [0, 1]")
    gamma = prior0 * a - (1.0 - prior0) * b
    w, v = np.linalg.eigh(0.5 * (gamma + gamma.conj().T))
    pos = v[:, w >= 0]
    neg = v[:, w < 0]
    # projector factors: rows are basis bras
    povm = Povm((pos.conj().T if pos.size else np.zeros((1, a.shape[0])),
                 neg.conj().T if neg.size else np.zeros((1, a.shape[0]))), labels=(0, 1))
    pe = probability_of_error(outcome_distributions(povm, a, b), prior0)
    return povm, pe


def geometric_mean_operator(rho0, rho1) -> np.ndarray:
    """rho0^{-1/2} (rho0^{1/2} rho1 rho0^{1/2})^{1/2} rho0^{-1/2}, pseudo-inverse on the support of rho0."""
    a, b = as_matrix(rho0), as_matrix(rho1)
    s = matrix_sqrt(a)
    inv = psd_power(a, -0.5)
    mid = matrix_sqrt(0.5 * ((s @ b @ s) + (s @ b @ s).conj().T))
    return inv @ mid @ inv


def min_bw_measurement(rho0, rho1) -> tuple[Povm, float]:
    """Projective measurement minimising the Bhattacharyya coefficient.

    Measures in the eigenbasis of the geometric-mean operator; the attained
    coefficient equals the root fidelity of the two states.
    """
    a, b = as_matrix(rho0), as_matrix(rho1)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    g = geometric_mean_operator(a, b)
    _, v = np.linalg.eigh(0.5 * (g + g.conj().T))
    povm = Povm(tuple(v[:, j].conj()[None, :] for j in range(v.shape[1])))
    return povm, bhattacharyya(outcome_distributions(povm, a, b))


def bw_of_effects(effects: np.ndarray, rho0, rho1) -> np.ndarray:
    """Bhattacharyya coefficient for a batch of POVMs, effects shaped (batch, m, d, d)."""
    a, b = as_matrix(rho0), as_matrix(rho1)
    p0 = np.clip(np.real(np.einsum("bjkl,lk->bj", effects, a)), 0.0, None)
    p1 = np.clip(np.real(np.einsum("bjkl,lk->bj", effects, b)), 0.0, None)
    return np.sqrt(p0 * p1).sum(axis=1)


def pe_of_effects(effects: np.ndarray, rho0, rho1, prior0: float = 0.5) -> np.ndarray:
    """Probability of error for a batch of binary POVMs (outcome 0 = guess 0)."""
    a, b = as_matrix(rho0), as_matrix(rho1)
    wrong0 = np.real(np.einsum("bkl,lk->b", effects[:, 1], a))
    wrong1 = np.real(np.einsum("bkl,lk->b", effects[:, 0], b))
    return prior0 * wrong0 + (1.0 - prior0) * wrong1


@dataclass(frozen=True)
class SecurityReport:
    context: str
    pe: float
    epsilon_effective: float
    k_optimal: float
    bw_min: float
    fidelity_root: float
    fidelity_squared: float
    epsilon: float
    criterion_met: bool

    CSV_COLUMNS = ("context", "pe", "epsilon_effective", "k_optimal", "bw_min", "fidelity_root",
                   "criterion_met")

    def __post_init__(self):
        if not -EQUAL_ATOL <= self.pe <= 1 + EQUAL_ATOL:
            raise ValueError(f"pe = {self.pe} is not a probability")
        if abs(self.k_optimal - 4 * self.epsilon_effective) > CONSTRUCT_ATOL:
            raise ValueError("k_optimal != 4 |pe - 1/2|")
        if self.bw_min < 1 - self.k_optimal / 2 - EQUAL_ATOL:
            raise ValueError("bw_min violates 1 - BW <= K/2")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_COLUMNS}


def security_report(rho0, rho1, epsilon: float, context: str = "custom") -> SecurityReport:
    """PE of Bob's optimal guess, its Kolmogorov distance, minimum BW, and root fidelity.

    When |PE - 1/2| <= epsilon, also asserts the chain
    K <= 4 eps  =>  BW_min >= 1 - 2 eps  =>  F_root**2 >= (1 - 2 eps)**2.
    """
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    povm, pe = helstrom(rho0, rho1)
    k = kolmogorov(outcome_distributions(povm, rho0, rho1))
    _, bw = min_bw_measurement(rho0, rho1)
    f = root_fidelity(rho0, rho1)
    eps_eff = abs(pe - 0.5)
    met = eps_eff <= epsilon
    if met:
        assert k <= 4 * epsilon + EQUAL_ATOL
        assert bw >= 1 - 2 * epsilon - EQUAL_ATOL
        assert f**2 >= (1 - 2 * epsilon) ** 2 - 1e-6
    return SecurityReport(context, pe, eps_eff, k, bw, f, f**2, epsilon, met)
