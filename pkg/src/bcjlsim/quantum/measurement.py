"""Generalized measurements and their action on (sub)systems."""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ..errors import DimensionError, ValidationError
from .states import (
    CONSTRUCT_ATOL,
    EQUAL_ATOL,
    DensityMatrix,
    PureState,
    basis_rotation,
    matrix_sqrt,
)

NULL_PROBABILITY = 1e-12


def _labels(labels, m: int) -> tuple:
    labels = tuple(range(m)) if labels is None else tuple(labels)
    if len(labels) != m:
        raise ValidationError(f"{len(labels)} labels for {m} outcomes")
    return labels


@dataclass(frozen=True, eq=False)
class GeneralMeasurement:
    """Collapse operators ``M_j`` (d_out x d_in) with sum_j M_j^dag M_j = I.

    Output dimensions may exceed the input dimension, which is how an
    isometry-then-projectors measurement ``M_j = P_j U`` is represented.
    """

    operators: tuple[np.ndarray, ...]
    labels: tuple = None

    def __post_init__(self):
        ops = tuple(np.array(m, dtype=complex) for m in self.operators)
        if not ops:
            raise ValidationError("measurement needs at least one outcome")
        d_in = ops[0].shape[1]
        if any(m.ndim != 2 or m.shape[1] != d_in for m in ops):
            raise DimensionError("all collapse operators must share the input dimension")
        for m in ops:
            m.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "labels", _labels(self.labels, len(ops)))
        dev = np.max(np.abs(self.completeness() - np.eye(d_in)))
        if dev > EQUAL_ATOL:
            raise ValidationError(f"collapse operators incomplete (deviation {dev:.3g})")

    @classmethod
    def from_isometry(cls, isometry, projectors: Sequence, labels=None) -> "GeneralMeasurement":
        """``M_j = P_j U`` for an isometry ``U`` and orthogonal projectors ``P_j``."""
        u = np.asarray(isometry, dtype=complex)
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))) > EQUAL_ATOL:
            raise ValidationError("U is not an isometry")
        return cls(tuple(np.asarray(p) @ u for p in projectors), labels)

    @classmethod
    def in_basis(cls, basis, labels=None) -> "GeneralMeasurement":
        """Projective measurement onto the columns of a unitary ``basis``."""
        b = np.asarray(basis, dtype=complex)
        return cls(tuple(np.outer(b[:, j], b[:, j].conj()) for j in range(b.shape[1])), labels)

    @property
    def input_dim(self) -> int:
        return self.operators[0].shape[1]

    def __len__(self) -> int:
        return len(self.operators)

    def effects(self) -> np.ndarray:
        return np.stack([m.conj().T @ m for m in self.operators])

    def completeness(self) -> np.ndarray:
        return sum(m.conj().T @ m for m in self.operators)

    def kraus(self) -> tuple[np.ndarray, ...]:
        return self.operators


@dataclass(frozen=True, eq=False)
class Povm:
    """Effects stored in factored form ``E_j = F_j^dag F_j`` with ``F_j`` of shape (r_j, d).

    Rank-one effects (r_j = 1) are what steering produces; the factored form
    keeps thousands of them on a 256-dimensional ancilla affordable.
    """

    factors: tuple[np.ndarray, ...]
    labels: tuple = None

    def __post_init__(self):
        fs = tuple(np.atleast_2d(np.array(f, dtype=complex)) for f in self.factors)
        if not fs:
            raise ValidationError("POVM needs at least one element")
        d = fs[0].shape[1]
        if any(f.shape[1] != d for f in fs):
            raise DimensionError("POVM elements act on different dimensions")
        for f in fs:
            f.setflags(write=False)
        object.__setattr__(self, "factors", fs)
        object.__setattr__(self, "labels", _labels(self.labels, len(fs)))
        dev = np.max(np.abs(self.total() - np.eye(d)))
        if dev > EQUAL_ATOL:
            raise ValidationError(f"POVM elements do not sum to identity (deviation {dev:.3g})")

    @classmethod
    def from_effects(cls, effects: Iterable, labels=None) -> "Povm":
        effects = [np.asarray(e, dtype=complex) for e in effects]
        for e in effects:
            if np.max(np.abs(e - e.conj().T)) > CONSTRUCT_ATOL:
                raise ValidationError("POVM element is not Hermitian")
        # matrix_sqrt raises NotPSDError for effects with negative spectrum
        return cls(tuple(matrix_sqrt(e) for e in effects), labels)

    @property
    def dim(self) -> int:
        return self.factors[0].shape[1]

    def __len__(self) -> int:
        return len(self.factors)

    def effect(self, j: int) -> np.ndarray:
        f = self.factors[j]
        return f.conj().T @ f

    def effects(self) -> np.ndarray:
        return np.stack([self.effect(j) for j in range(len(self))])

    def total(self) -> np.ndarray:
        rows = [f for f in self.factors if f.shape[0] == 1]
        out = np.zeros((self.dim, self.dim), dtype=complex)
        if rows:
            r = np.concatenate(rows)
            out += r.conj().T @ r
        for f in self.factors:
            if f.shape[0] != 1:
                out += f.conj().T @ f
        return out

    def probabilities(self, rho) -> np.ndarray:
        rho = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
        return np.array([np.real(np.trace(f @ rho @ f.conj().T)) for f in self.factors])

    def kraus(self) -> tuple[np.ndarray, ...]:
        """Lueders operators sqrt(E_j)."""
        out = []
        for f in self.factors:
            if f.shape[0] == 1:
                g = f[0]
                norm = np.linalg.norm(g)
                out.append(np.outer(g.conj(), g) / norm if norm > 0 else np.zeros((g.size, g.size)))
            else:
                out.append(matrix_sqrt(f.conj().T @ f))
        return tuple(out)


class Outcome(NamedTuple):
    label: object
    probability: float
    state: PureState | DensityMatrix | None  # None when probability < 1e-12


def _targets(subsystem, n: int) -> list[int]:
    if subsystem is None:
        return list(range(n))
    if isinstance(subsystem, (int, np.integer)):
        subsystem = [subsystem]
    t = sorted(set(int(s) for s in subsystem))
    if not t or t[0] < 0 or t[-1] >= n:
        raise DimensionError(f"invalid subsystem selection {t} for {n} subsystems")
    return t


def _apply_operator(op: np.ndarray, arr: np.ndarray, dims: tuple[int, ...], targets: list[int]):
    """Apply ``op`` to the ``targets`` of ``arr`` (shape (D, *batch)); return (result, new_dims)."""
    n = len(dims)
    rest = [i for i in range(n) if i not in targets]
    d_t = prod(dims[i] for i in targets)
    batch = arr.shape[1:]
    t = arr.reshape(dims + batch)
    t = np.transpose(t, targets + rest + list(range(n, n + len(batch))))
    t = op @ t.reshape(d_t, -1)
    d_out = op.shape[0]
    rest_dims = tuple(dims[i] for i in rest)
    if d_out == d_t:
        tdims = tuple(dims[i] for i in targets)
        t = t.reshape(tdims + rest_dims + batch)
        t = np.transpose(t, np.argsort(targets + rest).tolist() + list(range(n, n + len(batch))))
        new_dims = dims
    else:
        pos = min(targets)
        insert = sum(1 for r in rest if r < pos)
        t = t.reshape((d_out,) + rest_dims + batch)
        t = np.moveaxis(t, 0, insert)
        new_dims = rest_dims[:insert] + (d_out,) + rest_dims[insert:]
    return t.reshape((prod(new_dims),) + batch), new_dims


def apply_measurement(m: GeneralMeasurement | Povm, state, subsystem=None) -> list[Outcome]:
    """Measure ``subsystem`` (default: everything) of ``state``.

    Returns one :class:`Outcome` per measurement outcome, in the
    measurement's order. Conditional states are renormalized and of the same
    kind as the input: collapse operators map pure states to pure states.
    For a :class:`Povm` the post-measurement state uses the Lueders
    operators sqrt(E_j).
    """
    dims = state.dims
    targets = _targets(subsystem, len(dims))
    d_t = prod(dims[i] for i in targets)
    in_dim = m.input_dim if isinstance(m, GeneralMeasurement) else m.dim
    if in_dim != d_t:
        raise DimensionError(f"measurement acts on dimension {in_dim}, subsystem has {d_t}")
    pure = isinstance(state, PureState)
    out = []
    for label, k in zip(m.labels, m.kraus()):
        if pure:
            v, new_dims = _apply_operator(k, state.amplitudes[:, None], dims, targets)
            v = v[:, 0]
            p = float(np.real(np.vdot(v, v)))
            cond = PureState(v / np.sqrt(p), new_dims) if p >= NULL_PROBABILITY else None
        else:
            half, new_dims = _apply_operator(k, state.matrix, dims, targets)
            full, _ = _apply_operator(k, half.conj().T.copy(), dims, targets)
            rho = full.conj().T
            p = float(np.real(np.trace(rho)))
            if p >= NULL_PROBABILITY:
                rho = rho / p
                cond = DensityMatrix(0.5 * (rho + rho.conj().T), new_dims, check=False)
            else:
                cond = None
        out.append(Outcome(label, p, cond))
    return out


def joint_outcome_distribution(state, first, second) -> dict:
    """Exact distribution of (first label, second label) for two sequential measurements.

    ``first`` and ``second`` are ``(measurement, subsystem)`` pairs. The
    second measurement acts on the conditional state left by the first, so
    its subsystem indices must stay valid after the first measurement.
    """
    (m1, s1), (m2, s2) = first, second
    dist = {}
    for l1, p1, cond in apply_measurement(m1, state, s1):
        if cond is None:
            for l2 in m2.labels:
                dist[(l1, l2)] = 0.0
            continue
        for l2, p2, _ in apply_measurement(m2, cond, s2):
            dist[(l1, l2)] = p1 * p2
    return dist


def bb84_measurement(theta_hat) -> GeneralMeasurement:
    """Projective measurement of n qubits in the product basis ``theta_hat``.

    Outcome labels are the measured bit tuples.
    """
    u = basis_rotation(theta_hat)
    n = int(round(np.log2(u.shape[0])))
    labels = [tuple((j >> (n - 1 - i)) & 1 for i in range(n)) for j in range(u.shape[0])]
    return GeneralMeasurement.in_basis(u, labels)
