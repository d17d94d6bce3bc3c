"""State containers and the basic linear-algebra primitives built on them.

Conventions used throughout the package:

* tensor products are row-major Kronecker products, the leftmost factor being
  the most significant index (``|0> (x) |1>`` is basis vector ``e_1`` of C^4);
* construction-time checks use ``CONSTRUCT_ATOL`` (1e-10), equalities between
  independently computed quantities use ``EQUAL_ATOL`` (1e-8).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import prod
from typing import Iterable, Sequence

import numpy as np

from ..errors import DimensionError, NotPSDError, ValidationError

CONSTRUCT_ATOL = 1e-10
EQUAL_ATOL = 1e-8
MAX_QUBITS = 10

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def _frozen_array(a, dtype=complex) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _normalize_dims(dims, size: int) -> tuple[int, ...]:
    if dims is None:
        return (size,)
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims) or prod(dims) != size:
        raise DimensionError(f"dims {dims} do not multiply to {size}")
    return dims


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector over a composite space with subsystem ``dims``."""

    amplitudes: np.ndarray
    dims: tuple[int, ...] = None

    def __post_init__(self):
        amps = np.asarray(self.amplitudes)
        if amps.ndim != 1:
            raise DimensionError("amplitudes must be a vector")
        object.__setattr__(self, "amplitudes", _frozen_array(amps))
        object.__setattr__(self, "dims", _normalize_dims(self.dims, amps.size))
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > CONSTRUCT_ATOL:
            raise ValidationError(f"state norm {norm!r} differs from 1")

    @classmethod
    def normalized(cls, vector, dims=None) -> "PureState":
        v = np.asarray(vector, dtype=complex)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(v / norm, dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density_matrix(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()), self.dims)

    def overlap(self, other: "PureState") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix with subsystem ``dims``."""

    matrix: np.ndarray
    dims: tuple[int, ...] = None
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        object.__setattr__(self, "matrix", _frozen_array(m))
        object.__setattr__(self, "dims", _normalize_dims(self.dims, m.shape[0]))
        if self.check:
            _check_density(self.matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


def _check_density(m: np.ndarray) -> None:
    herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm > CONSTRUCT_ATOL:
        raise ValidationError(f"matrix is not Hermitian (deviation {herm:.3g})")
    tr = np.trace(m)
    if abs(tr - 1.0) > CONSTRUCT_ATOL:
        raise ValidationError(f"trace {tr!r} differs from 1")
    lo = np.linalg.eigvalsh(m).min()
    if lo < -CONSTRUCT_ATOL:
        raise NotPSDError(f"smallest eigenvalue {lo:.3g} is negative")


def as_matrix(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    if isinstance(x, PureState):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    return np.asarray(x, dtype=complex)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A mixture: pure states drawn with given probabilities.

    ``labels`` is optional bookkeeping (e.g. the (theta, c) pair that
    produced each member); when omitted members are labelled 0..m-1.
    """

    entries: tuple[tuple[float, PureState], ...]
    labels: tuple = None

    def __post_init__(self):
        entries = tuple((float(p), s) for p, s in self.entries)
        if not entries:
            raise ValidationError("ensemble must be nonempty")
        object.__setattr__(self, "entries", entries)
        probs = self.probabilities
        if np.any(probs < -CONSTRUCT_ATOL) or np.any(probs > 1 + CONSTRUCT_ATOL):
            raise ValidationError("ensemble probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1.0) > CONSTRUCT_ATOL:
            raise ValidationError(f"ensemble probabilities sum to {probs.sum()!r}")
        d = entries[0][1].dim
        if any(s.dim != d for _, s in entries):
            raise DimensionError("ensemble members have different dimensions")
        labels = tuple(range(len(entries))) if self.labels is None else tuple(self.labels)
        if len(labels) != len(entries):
            raise ValidationError("one label per ensemble entry required")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.entries])

    @property
    def vectors(self) -> np.ndarray:
        """Member states as the columns of a ``dim x m`` matrix."""
        return np.stack([s.amplitudes for _, s in self.entries], axis=1)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.entries[0][1].dims

    def average(self) -> DensityMatrix:
        v = self.vectors
        rho = (v * self.probabilities) @ v.conj().T
        return DensityMatrix(rho, self.dims)


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product; the left factor is the most significant index."""
    return np.kron(np.asarray(a), np.asarray(b))


def tensor_all(factors: Iterable) -> np.ndarray:
    return reduce(np.kron, factors)


def kron_states(a: PureState, b: PureState) -> PureState:
    return PureState(np.kron(a.amplitudes, b.amplitudes), a.dims + b.dims)


def kron_density(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(np.kron(a.matrix, b.matrix), a.dims + b.dims)


def _check_keep(keep, n: int) -> list[int]:
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"invalid subsystem selection {keep} for {n} subsystems")
    return keep


def partial_trace(state, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the subsystems in ``keep`` (kept in their original order).

    Accepts a :class:`DensityMatrix` or a :class:`PureState`; the pure path
    never forms the full joint density matrix.
    """
    dims = state.dims
    keep = _check_keep(keep, len(dims))
    traced = [i for i in range(len(dims)) if i not in keep]
    kept_dims = tuple(dims[i] for i in keep)
    dk = prod(kept_dims)
    if isinstance(state, PureState):
        t = state.amplitudes.reshape(dims)
        t = np.transpose(t, keep + traced).reshape(dk, -1)
        return DensityMatrix(t @ t.conj().T, kept_dims)
    n = len(dims)
    t = state.matrix.reshape(dims + dims)
    # trace pairs (i, n+i) for traced i; einsum keeps the remaining axes in order
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    for i in traced:
        letters[n + i] = letters[i]
    out = "".join(letters[i] for i in keep) + "".join(letters[n + i] for i in keep)
    reduced = np.einsum("".join(letters) + "->" + out, t).reshape(dk, dk)
    return DensityMatrix(reduced, kept_dims)


def _hermitian_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(m, dtype=complex)
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def matrix_sqrt(rho) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix.

    Eigenvalues in ``[-1e-10, 0)`` are clamped to zero; anything more
    negative raises :class:`NotPSDError`.
    """
    w, v = _hermitian_eigh(as_matrix(rho))
    if w.size and w.min() < -CONSTRUCT_ATOL:
        raise NotPSDError(f"eigenvalue {w.min():.3g} below tolerance")
    root = np.sqrt(np.clip(w, 0.0, None))
    return (v * root) @ v.conj().T


def psd_power(rho, power: float, cutoff: float = CONSTRUCT_ATOL) -> np.ndarray:
    """``rho**power`` on the support of ``rho`` (eigenvalues <= cutoff dropped).

    Negative powers therefore give the spectral pseudo-inverse.
    """
    w, v = _hermitian_eigh(as_matrix(rho))
    keep = w > cutoff
    scaled = np.zeros_like(w)
    scaled[keep] = w[keep] ** power
    return (v * scaled) @ v.conj().T


def support_projector(rho, cutoff: float = CONSTRUCT_ATOL) -> np.ndarray:
    w, v = _hermitian_eigh(as_matrix(rho))
    vs = v[:, w > cutoff]
    return vs @ vs.conj().T


def root_fidelity(rho0, rho1) -> float:
    """Tr sqrt(sqrt(rho0) rho1 sqrt(rho0)), the unsquared Uhlmann fidelity."""
    a, b = as_matrix(rho0), as_matrix(rho1)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    s = matrix_sqrt(a)
    w = np.linalg.eigvalsh(0.5 * ((s @ b @ s) + (s @ b @ s).conj().T))
    return float(min(1.0, np.sqrt(np.clip(w, 0.0, None)).sum()))


def fidelity(rho0, rho1) -> float:
    """Squared convention: the maximal |<phi0|phi1>|**2 over purifications."""
    return root_fidelity(rho0, rho1) ** 2


def trace_norm(m) -> float:
    return float(np.abs(np.linalg.eigvalsh(0.5 * (m + np.conj(m).T))).sum())


# --- conjugate coding -------------------------------------------------------

RECTILINEAR, DIAGONAL = 0, 1
_BASIS_SYMBOLS = {"+": RECTILINEAR, "0": RECTILINEAR, "x": DIAGONAL, "X": DIAGONAL,
                  "×": DIAGONAL, "1": DIAGONAL}

# QUBIT_STATES[basis][bit]
QUBIT_STATES = np.array(
    [
        [[1.0, 0.0], [0.0, 1.0]],
        [[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]],
    ],
    dtype=complex,
)


def parse_bits(bits) -> np.ndarray:
    """Bit vector from a bitstring or an int sequence."""
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return np.array([int(ch) for ch in bits], dtype=np.uint8)
    if isinstance(bits, np.ndarray) and bits.dtype == np.uint8 and bits.ndim == 1:
        if bits.size and bits.max() > 1:
            raise ValueError(f"not a bit vector: {bits!r}")
        return bits
    arr = np.asarray(bits, dtype=np.int64).ravel()
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError(f"not a bit vector: {bits!r}")
    return arr.astype(np.uint8)


def parse_bases(theta) -> np.ndarray:
    """Basis vector with 0 = rectilinear ('+') and 1 = diagonal ('x')."""
    if isinstance(theta, str):
        try:
            return np.array([_BASIS_SYMBOLS[ch] for ch in theta], dtype=np.uint8)
        except KeyError as exc:
            raise ValueError(f"unknown basis symbol in {theta!r}") from exc
    return parse_bits(theta)


def format_bases(theta: Sequence[int]) -> str:
    return "".join("+x"[int(t)] for t in theta)


def format_bits(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def bb84_vector(c, theta) -> np.ndarray:
    c, theta = parse_bits(c), parse_bases(theta)
    if c.shape != theta.shape:
        raise DimensionError(f"bit/basis lengths differ: {c.size} vs {theta.size}")
    return bb84_vectors(c[None, :], theta[None, :])[:, 0]


def encode_bb84(c, theta) -> PureState:
    """Product state |c_1>_{theta_1} (x) ... (x) |c_n>_{theta_n}."""
    v = bb84_vector(c, theta)
    return PureState(v, (2,) * int(round(np.log2(v.size))))


def bb84_vectors(cs: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Batch of BB84 product vectors, one column per row of ``cs``/``thetas``."""
    cs = np.asarray(cs, dtype=np.intp)
    thetas = np.asarray(thetas, dtype=np.intp)
    m, n = cs.shape
    single = QUBIT_STATES[thetas, cs]  # (m, n, 2)
    out = single[:, 0, :]
    for i in range(1, n):
        out = (out[:, :, None] * single[:, i, None, :]).reshape(m, -1)
    return out.T


def basis_rotation(theta) -> np.ndarray:
    """Unitary whose column j is the product basis vector |j>_theta."""
    theta = parse_bases(theta)
    return tensor_all(QUBIT_STATES[t].T for t in theta)


def apply_local(vector: np.ndarray, ops: Sequence[np.ndarray]) -> np.ndarray:
    """Apply ``ops[0] (x) ... (x) ops[n-1]`` to an n-qubit vector (or a batch of them).

    ``vector`` has shape ``(2**n,)`` or ``(2**n, batch)``.
    """
    n = len(ops)
    batch = vector.shape[1:]
    t = vector
    for i, op in enumerate(ops):
        # qubit i sits between 2**i leading and 2**(n-i-1) * batch trailing entries
        t = np.matmul(op, t.reshape(2**i, 2, -1))
    return t.reshape(vector.shape)


def apply_local_columns(vectors: np.ndarray, ops: np.ndarray) -> np.ndarray:
    """Apply a different product operator to each column.

    ``vectors`` is ``(2**n, m)``; ``ops[j, i]`` is the 2x2 factor on qubit i
    for column j, so ``ops`` has shape ``(m, n, 2, 2)``.
    """
    m, n = ops.shape[:2]
    t = vectors
    for i in range(n):
        t4 = t.reshape(2**i, 2, -1, m)
        f = ops[:, i].transpose(1, 2, 0)  # (row, col, column index)
        t = f[None, :, 0, None, :] * t4[:, None, 0] + f[None, :, 1, None, :] * t4[:, None, 1]
    return t.reshape(vectors.shape)
