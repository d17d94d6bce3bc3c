"""Seeding scheme and random instance generators for property sweeps.

Trial ``i`` under root seed ``s`` always uses ``numpy.random.default_rng([s, i])``,
so any single trial can be replayed without running the ones before it.
"""

from __future__ import annotations

import numpy as np

from .quantum.measurement import GeneralMeasurement, Povm
from .quantum.states import DensityMatrix, Ensemble, PureState


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial)])


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_pure_state(d: int, rng: np.random.Generator) -> PureState:
    return PureState.normalized(ginibre(rng, d, 1)[:, 0])


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    g = ginibre(rng, d, d if rank is None else rank)
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def random_probabilities(m: int, rng: np.random.Generator) -> np.ndarray:
    p = rng.dirichlet(np.ones(m))
    return p / p.sum()


def random_ensemble(d: int, m: int, rng: np.random.Generator) -> Ensemble:
    probs = random_probabilities(m, rng)
    return Ensemble(tuple((p, random_pure_state(d, rng)) for p in probs))


def _normalizer(effect_sum: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(effect_sum)
    return (v / np.sqrt(w)) @ v.conj().T


def random_effects(d: int, m: int, rng: np.random.Generator, batch: int | None = None) -> np.ndarray:
    """Random m-outcome POVM effects, shape ``(m, d, d)`` or ``(batch, m, d, d)``.

    Built as E_j = S^{-1/2} G_j^dag G_j S^{-1/2} with S = sum_j G_j^dag G_j.
    """
    shape = (1 if batch is None else batch, m, d, d)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    raw = np.conj(np.swapaxes(g, -1, -2)) @ g
    total = raw.sum(axis=1)
    w, v = np.linalg.eigh(total)
    norm = (v / np.sqrt(w)[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))
    eff = norm[:, None] @ raw @ norm[:, None]
    eff = 0.5 * (eff + np.conj(np.swapaxes(eff, -1, -2)))
    return eff[0] if batch is None else eff


def random_povm(d: int, m: int, rng: np.random.Generator) -> Povm:
    return Povm.from_effects(random_effects(d, m, rng))


def random_measurement(d: int, m: int, rng: np.random.Generator, d_out: int | None = None) -> GeneralMeasurement:
    """Random Kraus measurement with m collapse operators of shape (d_out, d)."""
    d_out = d if d_out is None else d_out
    ops = [ginibre(rng, d_out, d) for _ in range(m)]
    norm = _normalizer(sum(k.conj().T @ k for k in ops))
    return GeneralMeasurement(tuple(k @ norm for k in ops))


def random_distribution_pair(m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Two random distributions on m outcomes, occasionally with disjoint zeros."""
    p0, p1 = random_probabilities(m, rng), random_probabilities(m, rng)
    if m > 2 and rng.random() < 0.2:
        p0[rng.integers(m)] = 0.0
        p1[rng.integers(m)] = 0.0
        p0, p1 = p0 / p0.sum(), p1 / p1.sum()
    return p0, p1
