"""Dissimilarity between the edge-probability estimates of consecutive windows.

Tracked dyads are conditionally independent, so each window's estimate
defines a product-of-Bernoulli joint distribution.  Comparing full joints is
exponential in the number of dyads; instead the dyads are partitioned into
``g`` equal-sized groups, each group is scored on its own, and the median
group score is the window-pair dissimilarity.  Three measures are supported:

* ``kl``: Kullback-Leibler divergence of the group joints, which factorizes
  into a sum of per-dyad Bernoulli divergences;
* ``ks``: two-sample Kolmogorov-Smirnov statistic between bootstrap samples
  of the two group joints, each binary vector encoded as an integer;
* ``euclidean``: plain L2 distance over the full probability vector (no
  grouping; a grouped variant is available as ``euclidean-grouped``).
"""

from __future__ import annotations

import numpy as np

from .estimators import WindowEstimate

__all__ = [
    "GroupPartition",
    "bernoulli_kl",
    "kl_group",
    "ks_group",
    "euclidean",
    "score_pair",
    "MEASURES",
]

MEASURES = ("kl", "ks", "euclidean", "euclidean-grouped")

_MAX_KS_GROUP = 30  # integer encoding of a group must fit comfortably in int64


class GroupPartition:
    """Deterministic contiguous partition of ``k`` dyads into ``g`` groups.

    The tracked dyads are already in random order, so contiguous blocks are
    an unbiased partition; sizes differ by at most one.
    """

    def __init__(self, k: int, g: int):
        if not 1 <= g <= k:
            raise ValueError(f"need 1 <= g <= k, got g={g}, k={k}")
        self.k = k
        self.g = g
        base, extra = divmod(k, g)
        sizes = [base + 1] * extra + [base] * (g - extra)
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        self.slices = [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    def __iter__(self):
        return iter(self.slices)


def _check_vectors(p_prev: np.ndarray, p_curr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_prev = np.asarray(p_prev, dtype=np.float64)
    p_curr = np.asarray(p_curr, dtype=np.float64)
    if p_prev.shape != p_curr.shape or p_prev.ndim != 1:
        raise ValueError("probability vectors must be 1-D and of equal length")
    for vec in (p_prev, p_curr):
        if np.any(vec < 0) or np.any(vec > 1):
            raise ValueError("probabilities must lie in [0, 1]")
    return p_prev, p_curr


def bernoulli_kl(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise KL(Bernoulli(p) || Bernoulli(q)); inputs may touch 0 and 1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        term1 = np.where(p > 0, p * np.log(p / q), 0.0)
        term0 = np.where(p < 1, (1 - p) * np.log((1 - p) / (1 - q)), 0.0)
    return term1 + term0


def kl_group(p_prev, p_curr, eps: float = 0.0) -> float:
    """KL divergence between two product-of-Bernoulli joints.

    Equals the divergence of the full joint distributions (the joints
    factorize), computed as the sum of per-dyad Bernoulli divergences.  With
    ``eps > 0`` both vectors are clamped into ``[eps, 1 - eps]`` first, which
    keeps the result finite when an estimate hits 0 or 1 exactly.
    """
    p_prev, p_curr = _check_vectors(p_prev, p_curr)
    if eps > 0.0:
        p_prev = np.clip(p_prev, eps, 1.0 - eps)
        p_curr = np.clip(p_curr, eps, 1.0 - eps)
    return float(bernoulli_kl(p_prev, p_curr).sum())


def _encode_samples(bits: np.ndarray) -> np.ndarray:
    weights = (1 << np.arange(bits.shape[1], dtype=np.int64))
    return bits.astype(np.int64) @ weights


def ks_two_sample(x: np.ndarray, y: np.ndarray) -> float:
    """Two-sample KS statistic: the largest empirical CDF gap."""
    xs = np.sort(x)
    ys = np.sort(y)
    grid = np.unique(np.concatenate([xs, ys]))
    cdf_x = np.searchsorted(xs, grid, side="right") / xs.size
    cdf_y = np.searchsorted(ys, grid, side="right") / ys.size
    return float(np.abs(cdf_x - cdf_y).max())


def ks_group(p_prev, p_curr, n_samples: int, rng: np.random.Generator) -> float:
    """Bootstrap two-sample KS statistic between two group joints.

    Draws ``n_samples`` binary vectors from each product distribution,
    encodes each vector as an integer (dyad ``j`` contributes bit ``j``), and
    returns the maximal gap between the two empirical CDFs.  The value is
    defined relative to this bit ordering.
    """
    p_prev, p_curr = _check_vectors(p_prev, p_curr)
    if p_prev.size > _MAX_KS_GROUP:
        raise ValueError(f"KS groups are limited to {_MAX_KS_GROUP} dyads")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    a = _encode_samples(rng.random((n_samples, p_prev.size)) < p_prev)
    b = _encode_samples(rng.random((n_samples, p_curr.size)) < p_curr)
    return ks_two_sample(a, b)


def euclidean(p_prev, p_curr) -> float:
    """L2 distance between two probability vectors."""
    p_prev, p_curr = _check_vectors(p_prev, p_curr)
    return float(np.linalg.norm(p_prev - p_curr))


def _median(values: list[float]) -> float:
    return float(np.median(values))


def score_pair(
    est_prev: WindowEstimate,
    est_curr: WindowEstimate,
    measure: str,
    partition: GroupPartition,
    rng: np.random.Generator | None = None,
    *,
    ks_samples: int = 100_000,
    kl_direction: str = "prev-curr",
) -> float:
    """Dissimilarity of two consecutive window estimates.

    Grouped measures score each group and return the median; probabilities
    are clamped by half a snapshot's resolution (``1 / (2 s)`` of each
    window) before KL so that extreme estimates stay finite.
    """
    if est_prev.k != est_curr.k:
        raise ValueError("window estimates cover different dyad samples")
    if partition.k != est_prev.k:
        raise ValueError("partition size does not match the dyad sample")
    prev, curr = est_prev.p_hat, est_curr.p_hat

    if measure == "kl":
        if kl_direction not in ("prev-curr", "curr-prev"):
            raise ValueError(f"unknown kl direction {kl_direction!r}")
        eps_prev = 1.0 / (2.0 * est_prev.size)
        eps_curr = 1.0 / (2.0 * est_curr.size)
        a = np.clip(prev, eps_prev, 1.0 - eps_prev)
        b = np.clip(curr, eps_curr, 1.0 - eps_curr)
        if kl_direction == "curr-prev":
            a, b = b, a
        return _median([kl_group(a[s], b[s]) for s in partition])

    if measure == "ks":
        if rng is None:
            raise ValueError("the ks measure needs a random source")
        rngs = rng.spawn(partition.g)
        return _median(
            [ks_group(prev[s], curr[s], ks_samples, r) for s, r in zip(partition, rngs)]
        )

    if measure == "euclidean":
        return euclidean(prev, curr)

    if measure == "euclidean-grouped":
        return _median([euclidean(prev[s], curr[s]) for s in partition])

    raise ValueError(f"unknown measure {measure!r}")
