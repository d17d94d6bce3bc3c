"""The purification attack: commit to phi0, steer the ancilla later to unveil either bit."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .protocol import (
    DEFAULT_POLICY,
    TestPolicy,
    Transcript,
    acceptance_expectations,
    honest_density_matrix,
    test_unveil,
)
from .quantum.measurement import GeneralMeasurement, Povm, bb84_measurement, joint_outcome_distribution
from .quantum.purification import (
    DISCARD,
    Purification,
    optimal_purifications,
    steered_vectors,
    steering_povm,
)
from .quantum.states import (
    EQUAL_ATOL,
    QUBIT_STATES,
    DensityMatrix,
    Ensemble,
    PureState,
    apply_local,
)


@dataclass(frozen=True, eq=False)
class AttackState:
    """Everything Alice prepares: aligned purifications and both steering measurements."""

    context: object
    rho0: DensityMatrix
    rho1: DensityMatrix
    phi0: Purification
    phi1: Purification
    steer0: Povm
    steer1: Povm
    ensembles: tuple[Ensemble, Ensemble]
    overlap: float

    def purification(self, b: int) -> Purification:
        return self.phi0 if b == 0 else self.phi1

    def steering(self, b: int) -> Povm:
        return self.steer0 if b == 0 else self.steer1


def build_attack(ctx) -> AttackState:
    rhos = (honest_density_matrix(0, ctx), honest_density_matrix(1, ctx))
    phi0, phi1 = optimal_purifications(*rhos)
    ensembles = (ctx.honest_ensemble(0), ctx.honest_ensemble(1))
    steer0 = steering_povm(phi0, ensembles[0])
    steer1 = steering_povm(phi1, ensembles[1])
    overlap = float(np.real(phi0.overlap(phi1)))
    return AttackState(ctx, rhos[0], rhos[1], phi0, phi1, steer0, steer1, ensembles, overlap)


class UnveilOutcome(NamedTuple):
    """One result of Alice's ancilla measurement.

    ``label`` is the announced ``(theta, c)`` as bit tuples, or ``"discard"``
    for the completion element of a rank-deficient steering POVM. Bob's
    conditional state is pure for every announced pair.
    """

    label: object
    probability: float
    state: PureState | None


def _steered(att: AttackState, b: int, committed: Purification) -> tuple[list, np.ndarray]:
    povm = att.steering(b)
    return list(povm.labels), steered_vectors(committed, povm)


def attack_unveil(att: AttackState, b: int, committed: Purification | None = None) -> list[UnveilOutcome]:
    """Alice measures the ancilla of the committed state (phi0 unless told otherwise) with steer_b."""
    committed = att.phi0 if committed is None else committed
    povm = att.steering(b)
    labels, vecs = _steered(att, b, committed)
    out = []
    for i, (label, f) in enumerate(zip(labels, povm.factors)):
        if f.shape[0] == 1:
            v = vecs[:, i]
            p = float(np.real(np.vdot(v, v)))
            state = PureState(v / np.sqrt(p), committed.system_dims) if p >= 1e-12 else None
        else:
            w = committed.matrix @ f.T
            p = float(np.real(np.vdot(w, w)))
            state = None
        out.append(UnveilOutcome(label, p, state))
    return out


def _announced(att: AttackState, b: int, vecs: np.ndarray):
    labels = att.steering(b).labels
    idx = [i for i, lab in enumerate(labels) if lab != DISCARD]
    thetas = np.array([labels[i][0] for i in idx], dtype=np.uint8)
    cs = np.array([labels[i][1] for i in idx], dtype=np.uint8)
    return thetas, cs, vecs[:, idx]


def _acceptance_from(att: AttackState, b: int, committed_matrix: np.ndarray, policy: TestPolicy) -> float:
    povm = att.steering(b)
    rows = np.stack([f[0] if f.shape[0] == 1 else np.zeros(povm.dim, complex) for f in povm.factors])
    vecs = committed_matrix @ rows.T
    thetas, cs, vecs = _announced(att, b, vecs)
    return float(acceptance_expectations(b, thetas, cs, vecs, att.context, policy).sum())


def _clip01(p: float) -> float:
    return min(1.0, max(0.0, p))


def attack_acceptance(att: AttackState, b: int, policy: TestPolicy = DEFAULT_POLICY) -> float:
    """Exact Pr(T_b = ok) when phi0 was committed and Alice unveils b."""
    return _clip01(_acceptance_from(att, b, att.phi0.matrix, policy))


def ideal_acceptance(att: AttackState, b: int, policy: TestPolicy = DEFAULT_POLICY) -> float:
    """Pr(T_b = ok) when Alice steers phi_b itself (the purification built for b)."""
    return _clip01(_acceptance_from(att, b, att.purification(b).matrix, policy))


def ok_operator_norm(att: AttackState, b: int, x: np.ndarray, policy: TestPolicy = DEFAULT_POLICY) -> float:
    """||M_{b,ok} x|| for a joint vector x given as a system x ancilla matrix.

    Uses the effect form ||M_ok x||^2 = <x| sum_i A_i (x) E_i |x>, valid for
    collapse operators with orthogonal ranges.
    """
    val = _acceptance_from(att, b, x, policy)
    return math.sqrt(max(val, 0.0))


def _exact_sqrt(q: Fraction) -> Fraction | float:
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return math.sqrt(q)


def attack_bound(overlap: float, epsilon_prime: float) -> float:
    """Lower bound 1 - eps' - 2 sqrt(2 (1 - <phi0|phi1>)) on the cheating acceptance."""
    if not 0.0 <= overlap <= 1.0 + EQUAL_ATOL:
        raise ValueError(f"overlap {overlap} outside [0, 1]")
    return 1.0 - epsilon_prime - 2.0 * math.sqrt(2.0 * max(0.0, 1.0 - overlap))


def classic_bound(epsilon, epsilon_prime):
    """1 - eps' - 4 sqrt(eps), exact when both arguments are rationals with square eps.

    Pass :class:`fractions.Fraction` values for an exact result; floats give
    a float.
    """
    if isinstance(epsilon, Fraction) and isinstance(epsilon_prime, Fraction):
        return 1 - epsilon_prime - 4 * _exact_sqrt(epsilon)
    return 1.0 - float(epsilon_prime) - 4.0 * math.sqrt(float(epsilon))


class DeltaCheck(NamedTuple):
    delta: float
    bound_delta: float
    holds: bool
    link_operator: float  # 2 ||M_ok (phi0 - phi1)||
    link_norm: float  # 2 ||phi0 - phi1||


def verify_delta_bound(att: AttackState, policy: TestPolicy = DEFAULT_POLICY, b: int = 1) -> DeltaCheck:
    """Check |Pr(ok | phi1) - Pr(ok | phi0)| <= 2 sqrt(2 (1 - overlap)) link by link."""
    accept = attack_acceptance(att, b, policy)
    ideal = ideal_acceptance(att, b, policy)
    delta = abs(ideal - accept)
    diff = att.phi0.matrix - att.phi1.matrix
    link_op = 2.0 * ok_operator_norm(att, b, diff, policy)
    link_norm = 2.0 * float(np.linalg.norm(diff))
    bound = 2.0 * math.sqrt(2.0 * max(0.0, 1.0 - att.overlap))
    tol = EQUAL_ATOL
    # the norm identity is compared squared: sqrt amplifies round-off near overlap 1
    identity = abs((link_norm / 2) ** 2 - 2.0 * (1.0 - att.overlap)) <= tol
    holds = delta <= link_op + tol and link_op <= link_norm + tol and identity
    return DeltaCheck(delta, bound, bool(holds and delta <= bound + tol), link_op, link_norm)


@dataclass(frozen=True)
class AttackReport:
    context: str
    overlap: float
    accept0: float
    accept1: float
    accept1_ideal: float
    delta: float
    bound_delta: float
    link_operator: float
    link_norm: float
    attack_bound: float
    classic_bound: float
    epsilon_used: float
    epsilon_prime_used: float
    holds: bool

    CSV_COLUMNS = ("context", "overlap", "accept0", "accept1", "accept1_ideal", "delta",
                   "bound_delta", "classic_bound")

    def __post_init__(self):
        for name in ("accept0", "accept1", "accept1_ideal"):
            p = getattr(self, name)
            if not -EQUAL_ATOL <= p <= 1 + EQUAL_ATOL:
                raise ValueError(f"{name} = {p} is not a probability")
        if self.delta > self.bound_delta + EQUAL_ATOL:
            raise ValueError("report violates delta <= bound_delta")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_COLUMNS}


def attack_report(att: AttackState, epsilon: float, epsilon_prime: float,
                  policy: TestPolicy = DEFAULT_POLICY) -> AttackReport:
    check = verify_delta_bound(att, policy)
    return AttackReport(
        context=getattr(att.context, "name", "custom"),
        overlap=att.overlap,
        accept0=attack_acceptance(att, 0, policy),
        accept1=attack_acceptance(att, 1, policy),
        accept1_ideal=ideal_acceptance(att, 1, policy),
        delta=check.delta,
        bound_delta=check.bound_delta,
        link_operator=check.link_operator,
        link_norm=check.link_norm,
        attack_bound=attack_bound(min(att.overlap, 1.0), epsilon_prime),
        classic_bound=float(classic_bound(Fraction(str(epsilon)), Fraction(str(epsilon_prime)))),
        epsilon_used=epsilon,
        epsilon_prime_used=epsilon_prime,
        holds=check.holds,
    )


def reports_to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


# --- transcript-level views (small n) ---------------------------------------

def _bob_measurement(n: int) -> GeneralMeasurement:
    """Bob's whole procedure as one measurement: random basis, then projective outcome.

    Labels are ``(theta_hat, c_hat)``; each operator carries the 2^-n/2 weight
    of the basis coin.
    """
    ops, labels = [], []
    weight = 2.0 ** (-n / 2)
    for j in range(2**n):
        theta_hat = tuple((j >> (n - 1 - i)) & 1 for i in range(n))
        m = bb84_measurement(theta_hat)
        for lab, op in zip(m.labels, m.operators):
            ops.append(weight * op)
            labels.append((theta_hat, lab))
    return GeneralMeasurement(tuple(ops), labels)


def transcript_distribution(att: AttackState, b: int, order: str = "alice_first",
                            committed: Purification | None = None) -> dict:
    """Exact distribution of ((theta, c), (theta_hat, c_hat)) on the committed state.

    ``order`` is ``"alice_first"`` or ``"bob_first"``; both use
    :func:`apply_measurement` on the full joint state, so this is meant for
    small n only.
    """
    committed = att.phi0 if committed is None else committed
    n = len(committed.system_dims)
    system = list(range(n))
    anc = committed.ancilla_index
    bob = (_bob_measurement(n), system)
    alice = (att.steering(b), anc)
    if order == "alice_first":
        return joint_outcome_distribution(committed.joint, alice, bob)
    if order == "bob_first":
        swapped = joint_outcome_distribution(committed.joint, bob, alice)
        return {(a, w): p for (w, a), p in swapped.items()}
    raise ValueError(f"unknown order {order!r}")


def bob_outcome_table(vectors: np.ndarray, n: int) -> np.ndarray:
    """Born probabilities P[i, theta_hat, c_hat] for normalized column vectors."""
    table = np.empty((vectors.shape[1], 2**n, 2**n))
    for j in range(2**n):
        theta_hat = [(j >> (n - 1 - i)) & 1 for i in range(n)]
        amps = apply_local(vectors, [QUBIT_STATES[t].conj() for t in theta_hat])
        table[:, j, :] = (np.abs(amps) ** 2).T
    return table


def sample_acceptance(att: AttackState, b: int, shots: int, rng: np.random.Generator,
                      policy: TestPolicy = DEFAULT_POLICY) -> tuple[float, int]:
    """Monte Carlo estimate of the cheating acceptance by sampling whole transcripts.

    Alice's outcome is drawn from her exact outcome distribution, Bob's
    basis uniformly, Bob's bits from the Born rule on the collapsed state,
    and the verdict comes from :func:`test_unveil` on the resulting
    transcript. Returns (estimate, accepted count).
    """
    outcomes = attack_unveil(att, b)
    n = att.context.n
    probs = np.array([o.probability for o in outcomes])
    probs = probs / probs.sum()
    alive = [i for i, o in enumerate(outcomes) if o.state is not None and o.label != DISCARD]
    vecs = np.stack([outcomes[i].state.amplitudes for i in alive], axis=1)
    table = bob_outcome_table(vecs, n)
    # verdict for every (alice outcome, theta_hat, c_hat), from the transcript-level test
    verdict = np.zeros((len(outcomes), 2**n, 2**n), dtype=bool)
    bits = np.array([[(j >> (n - 1 - i)) & 1 for i in range(n)] for j in range(2**n)], dtype=np.uint8)
    for i in alive:
        theta, c = outcomes[i].label
        for th in range(2**n):
            for ch in range(2**n):
                t = Transcript(np.array(theta), np.array(c), bits[th], bits[ch], att.context)
                verdict[i, th, ch] = test_unveil(b, t, policy)
    row_of = {i: k for k, i in enumerate(alive)}
    a = rng.choice(len(outcomes), size=shots, p=probs)
    th = rng.integers(0, 2**n, size=shots)
    u = rng.random(shots)
    accepted = 0
    for i in np.unique(a):
        if i not in row_of:
            continue
        sel = a == i
        cdf = np.cumsum(table[row_of[i]], axis=1)
        cdf[:, -1] = 1.0
        th_i = th[sel]
        ch_i = (u[sel][:, None] > cdf[th_i]).sum(axis=1)
        accepted += int(verdict[i, th_i, ch_i].sum())
    return accepted / shots, accepted
