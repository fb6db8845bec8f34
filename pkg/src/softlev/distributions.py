"""Finite discrete distributions: exact distances, moments, seeded sampling.

Indices are 0-based throughout: a distribution on n outcomes is supported on
{0, ..., n-1}.
"""

import numpy as np

from . import _kernels
from .errors import ShapeMismatch
from .rng import generator

_NEG_TOL = 1e-12  # entries below -_NEG_TOL are rejected; above, clamped to 0
_SUM_TOL = 1e-9  # |sum - 1| beyond this is rejected rather than renormalized


class DiscreteDistribution:
    """An immutable probability vector whose float sum is 1.0 to within 2 ulp.

    Construction clamps tiny negatives, rejects anything worse, renormalizes
    sums within ``1e-9`` of one, and then nudges the largest entry toward an
    exact float sum.  The nudge usually lands bitwise on 1.0 but cannot
    always: numpy's blocked summation can step over it.  Within-2-ulp is the
    contract; both downstream samplers (multinomial, inverse-CDF with a
    clamped final bin) accept that.
    """

    __slots__ = ("probs",)

    def __init__(self, probs):
        p = np.array(probs, dtype=np.float64, copy=True, order="C")
        if p.ndim != 1 or p.size < 1:
            raise ShapeMismatch(f"probability vector must be 1-D and non-empty, got shape {p.shape}")
        if not np.isfinite(p).all():
            raise ValueError("probabilities must be finite")
        if p.min() < -_NEG_TOL:
            raise ValueError(f"negative probability {p.min()!r}")
        np.maximum(p, 0.0, out=p)
        total = p.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {_SUM_TOL}")
        p /= total
        for _ in range(3):
            resid = 1.0 - p.sum()
            if resid == 0.0:
                break
            p[int(p.argmax())] += resid
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteDistribution is immutable")

    @property
    def n(self) -> int:
        return self.probs.size

    def __repr__(self):
        return f"DiscreteDistribution(n={self.n})"


def _paired(P: DiscreteDistribution, Q: DiscreteDistribution):
    if P.n != Q.n:
        raise ShapeMismatch(f"distributions live on different supports: {P.n} vs {Q.n}")
    return P.probs, Q.probs


def tv(P: DiscreteDistribution, Q: DiscreteDistribution) -> float:
    """Total variation distance, half the l1 difference."""
    p, q = _paired(P, Q)
    _, t = _kernels.h2_tv(p, q)
    return float(t)


def hellinger_sq(P: DiscreteDistribution, Q: DiscreteDistribution) -> float:
    """Squared Hellinger distance, 1 minus the Bhattacharyya coefficient.

    Computed as half the squared l2 gap of the root-probability vectors,
    which is the same quantity without the cancellation: identical inputs
    give exactly 0.  Clamped into [0, 1].
    """
    p, q = _paired(P, Q)
    h2, _ = _kernels.h2_tv(p, q)
    return float(h2)


def mean_under(P: DiscreteDistribution, values) -> float:
    """Expectation of a value vector under P."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    if v.shape != (P.n,):
        raise ShapeMismatch(f"values must have shape ({P.n},), got {v.shape}")
    return float(_kernels.weighted_mean(P.probs, v))


def variance_under(P: DiscreteDistribution, values) -> float:
    """Variance of a value vector under P (never negative)."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    if v.shape != (P.n,):
        raise ShapeMismatch(f"values must have shape ({P.n},), got {v.shape}")
    return max(float(_kernels.weighted_variance(P.probs, v)), 0.0)


def draw(P: DiscreteDistribution, seed: int, count: int) -> np.ndarray:
    """``count`` iid indices from P via inverse-CDF on a counter-based stream.

    The same (P, seed, count) triple always reproduces the same sequence.
    """
    if count < 0:
        raise ValueError(f"count must be nonnegative, got {count}")
    cdf = np.cumsum(P.probs)
    u = generator(seed).random(count)
    return _kernels.searchsorted_right(cdf, u)
