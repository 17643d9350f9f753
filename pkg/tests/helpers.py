"""Shared test oracles: Monte Carlo estimators and random instance generators.

These deliberately avoid the code paths they are used to check: the bid
oracle conditions by rejection and averages closed-form VCG payments, and the
instance generator builds plain numpy arrays.
"""

from __future__ import annotations

import numpy as np

from posauction import BayesSetting, SlotCurve, ValueProfile


def mc_bstar(j: int, v: float, setting: BayesSetting, samples: int, seed: int):
    """Estimate b*_j(v): sample n-1 opponents, keep draws where v is the
    j-highest value overall, average the truthful VCG payment for slot j.

    Returns (mean, standard error).
    """
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    n, k = setting.n, setting.k
    betas = np.append(setting.curve.betas, 0.0)
    opponents = np.asarray(setting.dist.sample(rng, (samples, n - 1)))
    above = (opponents > v).sum(axis=1)
    kept = opponents[above == j - 1]
    if kept.shape[0] < 100:
        raise RuntimeError("conditioning event too rare for a useful estimate")
    full = np.concatenate([kept, np.full((kept.shape[0], 1), v)], axis=1)
    ranked = -np.sort(-full, axis=1)
    ext = np.zeros((ranked.shape[0], k + 1))
    take = min(n, k + 1)
    ext[:, :take] = ranked[:, :take]
    payments = np.zeros(ranked.shape[0])
    for s in range(j, k + 1):
        payments += (betas[s - 1] - betas[s]) * ext[:, s]
    return float(payments.mean()), float(payments.std(ddof=1) / np.sqrt(len(payments)))


def random_instance(rng: np.random.Generator, n_max: int = 8, k_max: int = 5):
    """A random complete-information instance with distinct values and a valid
    slot curve, scaled to order one."""
    n = int(rng.integers(2, n_max + 1))
    k = int(rng.integers(1, min(n - 1, k_max) + 1))
    while True:
        values = rng.random(n)
        if np.unique(values).size == n:
            break
    betas = np.sort(rng.random(k))[::-1] + 0.05
    return ValueProfile(values), SlotCurve(betas)
