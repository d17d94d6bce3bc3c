"""The honest BCJL commitment: codes, shared context, commit, Bob's measurement, unveil test.

Bits and bases are ``uint8`` vectors; basis 0 is rectilinear ("+") and
basis 1 diagonal ("x").
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from .errors import DimensionError, FeasibilityError, InfeasibleContextError, InvalidCodeError
from .quantum.states import (
    MAX_QUBITS,
    QUBIT_STATES,
    DensityMatrix,
    Ensemble,
    PureState,
    apply_local,
    apply_local_columns,
    basis_rotation,
    bb84_vectors,
    encode_bb84,
    format_bits,
    parse_bases,
    parse_bits,
)

TOY42_GENERATOR = ("1010", "0101")
HAMMING84_GENERATOR = ("10000111", "01001011", "00101101", "00011110")

_IDENTITY = np.eye(2, dtype=complex)


def gf2_rank(rows: np.ndarray) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    rank = 0
    for col in range(m.shape[1]):
        pivot = next((r for r in range(rank, m.shape[0]) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(m.shape[0]):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
    return rank


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Binary [n, k] code given by a full-rank k x n generator matrix."""

    generator: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.array(self.generator, dtype=np.uint8))
        if g.size == 0 or np.any(g > 1):
            raise InvalidCodeError("generator must be a nonempty 0/1 matrix")
        if gf2_rank(g) != g.shape[0]:
            raise InvalidCodeError("generator rows are linearly dependent over GF(2)")
        g.setflags(write=False)
        object.__setattr__(self, "generator", g)

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @cached_property
    def codewords(self) -> np.ndarray:
        """All 2**k codewords, ordered by their message bits."""
        msgs = np.array(list(product((0, 1), repeat=self.k)), dtype=np.uint8)
        words = (msgs.astype(np.int64) @ self.generator) % 2
        return words.astype(np.uint8)

    @cached_property
    def _word_set(self) -> frozenset:
        return frozenset(w.tobytes() for w in self.codewords)

    def __contains__(self, c) -> bool:
        c = parse_bits(c)
        return c.size == self.n and c.tobytes() in self._word_set

    def min_distance(self) -> int:
        weights = self.codewords.sum(axis=1)
        return int(weights[weights > 0].min())

    def generator_strings(self) -> list[str]:
        return [format_bits(row) for row in self.generator]


def make_code(spec) -> LinearCode:
    """Build a code from a name ("toy42", "hamming84") or a generator matrix."""
    if isinstance(spec, LinearCode):
        return spec
    if isinstance(spec, str):
        key = spec.lower().replace(" ", "")
        if key in ("toy42", "[4,2]", "toy"):
            return LinearCode([parse_bits(r) for r in TOY42_GENERATOR])
        if key in ("hamming84", "[8,4]", "extended-hamming"):
            return LinearCode([parse_bits(r) for r in HAMMING84_GENERATOR])
        raise InvalidCodeError(f"unknown built-in code {spec!r}")
    rows = [parse_bits(r) for r in spec]
    if len({r.size for r in rows}) != 1:
        raise InvalidCodeError("generator rows have different lengths")
    return LinearCode(np.array(rows))


def inner_bit(c, r) -> int:
    """GF(2) inner product: parity of the bitwise AND."""
    c, r = parse_bits(c), parse_bits(r)
    if c.shape != r.shape:
        raise DimensionError(f"length mismatch {c.size} vs {r.size}")
    return int(np.bitwise_and(c, r).sum() % 2)


class _Context:
    """Shared behaviour of commitment contexts.

    Subclasses define ``n``, ``name``, ``announcement_valid`` and
    ``_class_pairs``; ``honest_pairs(b)`` then lists every announced
    (theta, c) with its honest probability p(theta, c | b).
    """

    n: int

    def honest_pairs(self, b: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``(thetas, cs, probs)`` with one row per honest (theta, c)."""
        return self._pairs_cache(int(b))

    def honest_ensemble(self, b: int) -> Ensemble:
        thetas, cs, probs = self.honest_pairs(b)
        vecs = bb84_vectors(cs, thetas)
        dims = (2,) * self.n
        entries = tuple((p, PureState(vecs[:, i], dims)) for i, p in enumerate(probs))
        labels = tuple((tuple(t), tuple(c)) for t, c in zip(thetas.tolist(), cs.tolist()))
        return Ensemble(entries, labels)


@dataclass(frozen=True, eq=False)
class SharedContext(_Context):
    """The pair (C, r) fixed before Alice sends her photons."""

    code: LinearCode
    r: np.ndarray
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        r = parse_bits(self.r).copy()
        if r.size != self.code.n:
            raise DimensionError(f"r has length {r.size}, code length is {self.code.n}")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)
        parities = (self.code.codewords.astype(np.int64) @ r) % 2
        if not parities.any():
            raise InfeasibleContextError("every codeword has c.r = 0; the b = 1 class is empty")

    @property
    def n(self) -> int:
        return self.code.n

    def commit_class(self, b: int) -> np.ndarray:
        """Codewords c with c.r = b."""
        cache = self.__dict__.setdefault("_classes", {})
        b = int(b)
        if b not in cache:
            parities = (self.code.codewords.astype(np.int64) @ self.r) % 2
            cls = self.code.codewords[parities == b]
            cls.setflags(write=False)
            cache[b] = cls
        return cache[b]

    def announcement_valid(self, b: int, theta, c) -> bool:
        c = parse_bits(c)
        return c in self.code and inner_bit(c, self.r) == b

    def _pairs_cache(self, b: int):
        cache = self.__dict__.setdefault("_pairs", {})
        if b not in cache:
            cls = self.commit_class(b)
            thetas = np.array(list(product((0, 1), repeat=self.n)), dtype=np.uint8)
            t = np.repeat(thetas, len(cls), axis=0)
            c = np.tile(cls, (len(thetas), 1))
            p = np.full(len(t), 1.0 / len(t))
            cache[b] = (t, c, p)
        return cache[b]

    def sample(self, b: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        cls = self.commit_class(b)
        if len(cls) == 0:
            raise InfeasibleContextError(f"no codeword with c.r = {b}")
        theta = rng.integers(0, 2, self.n).astype(np.uint8)
        return theta, cls[rng.integers(len(cls))]

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.code.k, "generator": self.code.generator_strings(),
                "r": format_bits(self.r)}


@dataclass(frozen=True, eq=False)
class BasisCommitment(_Context):
    """Synthetic equal-density commitment: the bit selects one basis for all photons.

    With b = 0 every photon is rectilinear, with b = 1 every photon diagonal,
    and c is uniform over all n-bit strings, so both commitments send the
    maximally mixed state. Used to exercise the equal-density attack.
    """

    n: int
    name: str = field(default="bb84-basis", compare=False)

    def announcement_valid(self, b: int, theta, c) -> bool:
        theta = parse_bases(theta)
        return theta.size == self.n and bool(np.all(theta == b))

    def _pairs_cache(self, b: int):
        cache = self.__dict__.setdefault("_pairs", {})
        if b not in cache:
            cs = np.array(list(product((0, 1), repeat=self.n)), dtype=np.uint8)
            t = np.full_like(cs, b)
            cache[b] = (t, cs, np.full(len(cs), 1.0 / len(cs)))
        return cache[b]

    def sample(self, b: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        return np.full(self.n, b, dtype=np.uint8), rng.integers(0, 2, self.n).astype(np.uint8)

    def to_dict(self) -> dict:
        return {"kind": "basis", "n": self.n}


def random_r(code: LinearCode, rng: np.random.Generator) -> np.ndarray:
    """Draw r uniformly until it splits the code into two nonempty classes."""
    while True:
        r = rng.integers(0, 2, code.n).astype(np.uint8)
        if ((code.codewords.astype(np.int64) @ r) % 2).any():
            return r


def builtin_context(name: str):
    """Named contexts used by tests and the command line.

    ``single``: n = 1, C = {0, 1}, r = 1. ``toy42``: the [4,2] toy code with
    r = 1000. ``hamming84``: extended Hamming code with r drawn from seed 0.
    ``bb84-basis``: the two-photon equal-density commitment.
    """
    key = name.lower()
    if key == "single":
        return SharedContext(LinearCode([[1]]), parse_bits("1"), name="single")
    if key == "toy42":
        return SharedContext(make_code("toy42"), parse_bits("1000"), name="toy42")
    if key == "hamming84":
        code = make_code("hamming84")
        return SharedContext(code, random_r(code, np.random.default_rng(0)), name="hamming84")
    if key.startswith("bb84-basis"):
        n = int(key.split(":")[1]) if ":" in key else 2
        return BasisCommitment(n, name=key)
    raise KeyError(f"unknown built-in context {name!r}")


BUILTIN_CONTEXTS = ("single", "toy42", "hamming84", "bb84-basis")


def context_from_dict(doc: dict, name: str = "custom"):
    """Parse ``{"n", "k", "generator": [bitstrings], "r": bitstring}`` (or a basis context)."""
    if doc.get("kind") == "basis":
        return BasisCommitment(int(doc["n"]), name=name)
    code = make_code(doc["generator"])
    if int(doc["n"]) != code.n or int(doc.get("k", code.k)) != code.k:
        raise InvalidCodeError(f"declared n/k ({doc['n']}, {doc.get('k')}) do not match generator")
    return SharedContext(code, parse_bits(doc["r"]), name=name)


def load_context(source: str):
    """Built-in context name, or path to a context JSON document."""
    try:
        return builtin_context(source)
    except KeyError:
        pass
    with open(source) as fh:
        doc = json.load(fh)
    stem = source.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return context_from_dict(doc, name=stem)


@dataclass(frozen=True)
class AliceRecord:
    b: int
    theta: np.ndarray
    c: np.ndarray


@dataclass(frozen=True, eq=False)
class Transcript:
    """W = (theta, c, theta_hat, c_hat) together with the shared context."""

    theta: np.ndarray
    c: np.ndarray
    theta_hat: np.ndarray
    c_hat: np.ndarray
    context: _Context

    def __post_init__(self):
        for name in ("theta", "c", "theta_hat", "c_hat"):
            v = parse_bits(getattr(self, name))
            if v.size != self.context.n:
                raise DimensionError(f"{name} has length {v.size}, expected {self.context.n}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class TestPolicy:
    """Allowed error rate on the positions where Bob guessed Alice's basis."""

    __test__ = False
    max_error_fraction: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.max_error_fraction <= 1.0:
            raise ValueError("max_error_fraction must lie in [0, 1]")


DEFAULT_POLICY = TestPolicy()


def honest_commit(b: int, ctx, rng: np.random.Generator) -> tuple[AliceRecord, PureState]:
    theta, c = ctx.sample(int(b), rng)
    return AliceRecord(int(b), theta, c), encode_bb84(c, theta)


_BRAS = QUBIT_STATES.conj()


def bob_measure(state: PureState, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Measure every photon in a uniformly random basis; exact Born-rule sampling."""
    d = state.dim
    n = d.bit_length() - 1
    if d != 1 << n or n == 0:
        raise DimensionError(f"state dimension {d} is not a power of two")
    theta_hat = rng.integers(0, 2, n).astype(np.uint8)
    # amplitudes in the measured basis: <j|_theta_hat psi
    amps = apply_local(state.amplitudes, _BRAS[theta_hat])
    cdf = np.cumsum(np.abs(amps) ** 2)
    j = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), d - 1)
    c_hat = ((j >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)
    return theta_hat, c_hat


def honest_rounds(b: int, ctx, seed: int, trials: int, chunk: int = 2048):
    """Many honest commit-and-measure rounds at once.

    Round i draws from ``default_rng([seed, b, i])`` in the same order as
    :func:`honest_commit` followed by :func:`bob_measure`, so every row equals
    the sequential result; only the linear algebra is batched.
    Returns arrays ``(thetas, cs, theta_hats, c_hats)`` of shape ``(trials, n)``.
    """
    n, d = ctx.n, 2**ctx.n
    thetas = np.empty((trials, n), dtype=np.uint8)
    cs = np.empty_like(thetas)
    theta_hats = np.empty_like(thetas)
    u = np.empty(trials)
    for i in range(trials):
        rng = np.random.default_rng([seed, b, i])
        thetas[i], cs[i] = ctx.sample(int(b), rng)
        theta_hats[i] = rng.integers(0, 2, n)
        u[i] = rng.random()
    js = np.empty(trials, dtype=np.int64)
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        vecs = bb84_vectors(cs[lo:hi], thetas[lo:hi])
        amps = apply_local_columns(vecs, _BRAS[theta_hats[lo:hi]])
        cdf = np.cumsum(np.abs(amps) ** 2, axis=0)
        j = (cdf <= u[lo:hi] * cdf[-1]).sum(axis=0)
        js[lo:hi] = np.minimum(j, d - 1)
    c_hats = ((js[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)
    return thetas, cs, theta_hats, c_hats


def error_fraction(theta, c, theta_hat, c_hat) -> float:
    """Disagreement rate on the positions where theta_hat matches theta."""
    match = np.asarray(theta) == np.asarray(theta_hat)
    k = np.count_nonzero(match)
    if k == 0:
        return 0.0
    return np.count_nonzero(np.asarray(c)[match] != np.asarray(c_hat)[match]) / k


def test_unveil(b: int, t: Transcript, policy: TestPolicy = DEFAULT_POLICY) -> bool:
    """Bob's test T_b; True means "ok"."""
    if not t.context.announcement_valid(int(b), t.theta, t.c):
        return False
    return error_fraction(t.theta, t.c, t.theta_hat, t.c_hat) <= policy.max_error_fraction


test_unveil.__test__ = False


def honest_density_matrix(b: int, ctx) -> DensityMatrix:
    """rho_b = sum_{theta, c} p(theta, c | b) |c><c|_theta, by exact enumeration."""
    if ctx.n > MAX_QUBITS:
        raise FeasibilityError(f"n = {ctx.n} exceeds the {MAX_QUBITS}-qubit enumeration limit")
    thetas, cs, probs = ctx.honest_pairs(b)
    v = bb84_vectors(cs, thetas)
    return DensityMatrix((v * probs) @ v.conj().T, (2,) * ctx.n)


def acceptance_factors(b: int, theta, c, ctx) -> list[np.ndarray] | None:
    """Single-qubit factors 1/2 I + 1/2 |c_i><c_i|_theta_i, or None if the announcement fails."""
    theta, c = parse_bases(theta), parse_bits(c)
    if not ctx.announcement_valid(int(b), theta, c):
        return None
    return [0.5 * _IDENTITY + 0.5 * np.outer(QUBIT_STATES[t, x], QUBIT_STATES[t, x].conj())
            for t, x in zip(theta, c)]


def _enumerated_acceptance(b: int, theta, c, ctx, policy: TestPolicy) -> np.ndarray:
    n = ctx.n
    d = 2**n
    a = np.zeros((d, d), dtype=complex)
    if not ctx.announcement_valid(int(b), theta, c):
        return a
    outcomes = np.array(list(product((0, 1), repeat=n)), dtype=np.uint8)
    for theta_hat in product((0, 1), repeat=n):
        theta_hat = np.array(theta_hat, dtype=np.uint8)
        match = theta_hat == theta
        if match.any():
            errors = (outcomes[:, match] != c[match]).mean(axis=1)
            ok = errors <= policy.max_error_fraction
        else:
            ok = np.ones(d, dtype=bool)
        u = basis_rotation(theta_hat)
        a += (u[:, ok] @ u[:, ok].conj().T)
    return a / 2**n


def acceptance_operator(b: int, theta, c, ctx, policy: TestPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Effect A with Pr(T_b = ok | announced (theta, c), Bob holds sigma) = Tr(A sigma).

    Bob's uniformly random basis choice is averaged in. The default
    zero-error policy has the product form; other policies enumerate Bob's
    outcomes explicitly.
    """
    theta, c = parse_bases(theta), parse_bits(c)
    if theta.size != ctx.n or c.size != ctx.n:
        raise DimensionError("announcement length does not match the context")
    if policy.max_error_fraction != 0.0:
        return _enumerated_acceptance(b, theta, c, ctx, policy)
    factors = acceptance_factors(b, theta, c, ctx)
    if factors is None:
        return np.zeros((2**ctx.n, 2**ctx.n), dtype=complex)
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def acceptance_expectations(b: int, thetas, cs, vectors: np.ndarray, ctx,
                            policy: TestPolicy = DEFAULT_POLICY) -> np.ndarray:
    """<v_i| A(theta_i, c_i) |v_i> for each column v_i (vectors need not be normalized)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.intp))
    cs = np.atleast_2d(np.asarray(cs, dtype=np.intp))
    out = np.zeros(vectors.shape[1])
    valid = np.array([ctx.announcement_valid(int(b), t.astype(np.uint8), c.astype(np.uint8))
                      for t, c in zip(thetas, cs)], dtype=bool)
    if not valid.any():
        return out
    if policy.max_error_fraction != 0.0:
        for i in np.flatnonzero(valid):
            v = vectors[:, i]
            out[i] = np.real(np.vdot(v, acceptance_operator(b, thetas[i], cs[i], ctx, policy) @ v))
        return out
    v = vectors[:, valid]
    q = QUBIT_STATES[thetas[valid], cs[valid]]  # (m, n, 2)
    ops = 0.5 * _IDENTITY + 0.5 * q[..., :, None] * q[..., None, :].conj()
    t = apply_local_columns(v, ops)
    out[valid] = np.real(np.einsum("dm,dm->m", v.conj(), t))
    return out
