"""Shared fixtures-by-hand for the test suite."""

import math

import numpy as np

from stprune import TokenSet


def random_instance(seed, n_max=64, d_max=16, k_max=16):
    """One seeded (tokens, base, k) selection instance."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(2, d_max + 1))
    k = int(rng.integers(1, min(k_max, n) + 1))
    feats = rng.standard_normal((n, d))
    cls = rng.standard_normal(d)
    base = rng.uniform(0.0, 1.0, size=n)
    return TokenSet(features=feats, cls=cls), base, k


def lr_dot(a, b):
    """Strict left-to-right scalar accumulation; reduction-order oracle."""
    acc = 0.0
    for x, y in zip(np.asarray(a, dtype=np.float64).tolist(), np.asarray(b, dtype=np.float64).tolist()):
        acc += x * y
    return acc


def lr_cosine(a, b):
    na = math.sqrt(lr_dot(a, a))
    nb = math.sqrt(lr_dot(b, b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return min(1.0, max(-1.0, lr_dot(a, b) / (na * nb)))
