"""Purifications, Uhlmann-aligned pairs, and ancilla-side steering.

A joint state on system (x) ancilla is handled through its coefficient
matrix ``Phi`` (system index = row, ancilla index = column), so that
``|phi> = sum_ij Phi_ij |i>|j>`` and the reduced system state is
``Phi Phi^dag``. Measuring the ancilla with effect ``E`` leaves the system in
the unnormalized state ``Phi E^T Phi^dag``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import DimensionError, SteeringInfeasibleError, ValidationError
from .measurement import Povm
from .states import (
    CONSTRUCT_ATOL,
    EQUAL_ATOL,
    DensityMatrix,
    Ensemble,
    PureState,
    as_matrix,
    matrix_sqrt,
)

DISCARD = "discard"


@dataclass(frozen=True, eq=False)
class Purification:
    """Pure joint state over system (x) ancilla.

    ``system_dims`` keeps the internal structure of the system (e.g. n
    qubits); ``joint.dims`` is ``system_dims + (ancilla_dim,)``.
    """

    joint: PureState
    system_dim: int
    ancilla_dim: int

    def __post_init__(self):
        if self.joint.dim != self.system_dim * self.ancilla_dim:
            raise DimensionError("joint dimension != system_dim * ancilla_dim")

    @classmethod
    def from_matrix(cls, phi: np.ndarray, system_dims=None) -> "Purification":
        d, a = phi.shape
        system_dims = (d,) if system_dims is None else tuple(system_dims)
        return cls(PureState(np.asarray(phi).reshape(-1), system_dims + (a,)), d, a)

    @property
    def system_dims(self) -> tuple[int, ...]:
        return self.joint.dims[:-1]

    @property
    def ancilla_index(self) -> int:
        return len(self.joint.dims) - 1

    @property
    def matrix(self) -> np.ndarray:
        return self.joint.amplitudes.reshape(self.system_dim, self.ancilla_dim)

    def reduced(self) -> DensityMatrix:
        phi = self.matrix
        return DensityMatrix(phi @ phi.conj().T, self.system_dims)

    def purifies(self, rho, atol: float = EQUAL_ATOL) -> bool:
        return bool(np.max(np.abs(self.reduced().matrix - as_matrix(rho))) <= atol)

    def overlap(self, other: "Purification") -> complex:
        return self.joint.overlap(other.joint)


def _system_dims(rho) -> tuple[int, ...] | None:
    return rho.dims if isinstance(rho, DensityMatrix) else None


def canonical_purification(rho) -> Purification:
    """(sqrt(rho) (x) I) sum_k |k>|k>, with an ancilla as large as the system."""
    return Purification.from_matrix(matrix_sqrt(rho), _system_dims(rho))


def optimal_purifications(rho0, rho1) -> tuple[Purification, Purification]:
    """Purifications with real, nonnegative and maximal overlap.

    phi0 is canonical; phi1 is the canonical purification of rho1 with an
    ancilla unitary taken from the SVD of sqrt(rho0) sqrt(rho1), which makes
    <phi0|phi1> equal the trace norm of that product.
    """
    a, b = as_matrix(rho0), as_matrix(rho1)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    s0, s1 = matrix_sqrt(a), matrix_sqrt(b)
    u, _, vh = np.linalg.svd(s0 @ s1)
    phi1 = s1 @ vh.conj().T @ u.conj().T
    dims = _system_dims(rho0)
    return Purification.from_matrix(s0, dims), Purification.from_matrix(phi1, dims)


def _pinv(phi: np.ndarray, cutoff: float) -> tuple[np.ndarray, int]:
    """Pseudo-inverse keeping singular values whose square exceeds ``cutoff``."""
    u, s, vh = np.linalg.svd(phi, full_matrices=False)
    keep = s**2 > cutoff
    inv = (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T
    return inv, int(keep.sum())


def steering_povm(phi: Purification, target: Ensemble, *, cutoff: float = CONSTRUCT_ATOL) -> Povm:
    """Ancilla POVM that prepares ``target`` on the system side of ``phi``.

    Element i is rank one, ``E_i^T = p_i Phi^+ |psi_i><psi_i| Phi^+dag``. When
    the reduced state is rank deficient an extra element labelled
    ``"discard"`` (the projector onto the ancilla kernel of Phi) completes
    the POVM; it has zero probability on ``phi`` itself.
    """
    phi_m = phi.matrix
    if target.vectors.shape[0] != phi.system_dim:
        raise DimensionError("ensemble and purification system dimensions differ")
    rho = phi_m @ phi_m.conj().T
    avg = target.average().matrix
    dev = np.max(np.abs(avg - rho))
    if dev > EQUAL_ATOL:
        raise SteeringInfeasibleError(f"ensemble average differs from reduced state by {dev:.3g}")
    inv, rank = _pinv(phi_m, cutoff)
    # rows f_i = (sqrt(p_i) Phi^+ psi_i)^T, so E_i = f_i^dag f_i
    rows = (inv @ (target.vectors * np.sqrt(target.probabilities))).T
    factors = [rows[i : i + 1] for i in range(rows.shape[0])]
    labels = list(target.labels)
    if rank < phi.ancilla_dim:
        kernel = np.eye(phi.ancilla_dim) - inv @ phi_m
        factors.append(kernel.conj())
        labels.append(DISCARD)
    try:
        return Povm(tuple(factors), labels)
    except ValidationError as exc:
        raise SteeringInfeasibleError(str(exc)) from exc


class SteeredOutcome(NamedTuple):
    label: object
    probability: float
    state: PureState | DensityMatrix | None


def steered_vectors(phi: Purification, povm: Povm) -> np.ndarray:
    """Unnormalized system vectors ``Phi f_i^T`` for the rank-one elements of ``povm``.

    Column i is the system state left by outcome i; its squared norm is the
    outcome probability. Non-rank-one elements get a zero column.
    """
    rank_one = [f.shape[0] == 1 for f in povm.factors]
    rows = np.stack([f[0] if r else np.zeros(povm.dim, complex) for f, r in zip(povm.factors, rank_one)])
    return phi.matrix @ rows.T


def steer(phi: Purification, povm: Povm) -> list[SteeredOutcome]:
    """Measure the ancilla of ``phi`` and report the system-side conditional states.

    Conditional states are pure for rank-one elements and density matrices
    otherwise; ``None`` marks outcomes with probability below 1e-12.
    """
    vecs = steered_vectors(phi, povm)
    out = []
    for i, (label, f) in enumerate(zip(povm.labels, povm.factors)):
        if f.shape[0] == 1:
            v = vecs[:, i]
            p = float(np.real(np.vdot(v, v)))
            state = PureState(v / np.sqrt(p), phi.system_dims) if p >= 1e-12 else None
        else:
            w = phi.matrix @ f.T
            sigma = w @ w.conj().T
            p = float(np.real(np.trace(sigma)))
            state = DensityMatrix(sigma / p, phi.system_dims, check=False) if p >= 1e-12 else None
        out.append(SteeredOutcome(label, p, state))
    return out
