"""Per-window edge-probability and resampling-rate estimators.

Each tracked dyad within a window is a two-state Markov chain with
transition probabilities ``alpha * p`` (off to on) and ``alpha * (1 - p)``
(on to off).  Three estimators are provided:

* the exact per-chain maximum-likelihood estimator, in closed form;
* its multi-chain extension, which averages per-chain ``alpha`` estimates
  weighted by how informative each chain is (chains visiting both states
  carry more information about ``alpha``);
* the frequency estimator ``n1 / s``, which ignores temporal structure and
  is unbiased in equilibrium with a single random quantity per chain.

A chain is *degenerate* when it never leaves one state, in which case the
likelihood carries no usable information and the MLE is undefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chains import ChainCounts

__all__ = [
    "WindowEstimate",
    "DegenerateChainError",
    "mle_single_chain",
    "mle_approx_multi",
    "frequency_estimate",
    "estimate_window",
]


class DegenerateChainError(ValueError):
    """Raised when a chain (or every chain) carries no likelihood information."""


@dataclass(frozen=True)
class WindowEstimate:
    """Estimated edge probabilities for one window.

    ``alpha_hat`` is ``None`` for the frequency method, which does not
    estimate the resampling rate.  ``degenerate`` flags chains whose MLE was
    undefined; their ``p_hat`` falls back to the occupancy fraction so the
    vector is always complete.
    """

    p_hat: np.ndarray
    alpha_hat: float | None
    method: str
    degenerate: np.ndarray
    size: int

    @property
    def k(self) -> int:
        return int(self.p_hat.size)


def mle_single_chain(n00: int, n01: int, n10: int, n11: int) -> tuple[float, float]:
    """Closed-form maximum-likelihood ``(alpha, p)`` for one chain.

    ``alpha`` may legitimately exceed 1 (an alternating chain gives 2); the
    implied transition probabilities ``alpha * p`` and ``alpha * (1 - p)``
    never exceed 1.  Raises :class:`DegenerateChainError` when the chain
    never starts a transition from one of the states.
    """
    n0s = n00 + n01
    n1s = n10 + n11
    if n0s == 0 or n1s == 0 or n01 + n10 == 0:
        raise DegenerateChainError("degenerate chain: MLE undefined")
    cross = n01 * n1s + n10 * n0s
    return cross / (n0s * n1s), n01 * n1s / cross


def _vector_mle(counts: ChainCounts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-chain MLEs plus the degeneracy mask, vectorized over all chains."""
    n0s = counts.n0_star.astype(np.float64)
    n1s = counts.n1_star.astype(np.float64)
    degenerate = (n0s == 0) | (n1s == 0) | (counts.n01 + counts.n10 == 0)
    cross = counts.n01 * n1s + counts.n10 * n0s
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = cross / (n0s * n1s)
        p = counts.n01 * n1s / cross
    fallback = counts.n1 / counts.size
    p = np.where(degenerate, fallback, p)
    alpha = np.where(degenerate, np.nan, alpha)
    return alpha, np.clip(p, 0.0, 1.0), degenerate


def mle_approx_multi(counts: ChainCounts, weight_exponent: float = math.inf) -> WindowEstimate:
    """Multi-chain estimate: per-chain MLE for ``p``, weighted average for ``alpha``.

    Weights are proportional to ``(n0_star * n1_star) ** weight_exponent``
    over the non-degenerate chains.  The default exponent of infinity keeps
    only the chains attaining the maximal product and averages them; an
    exponent of 0 averages all non-degenerate chains equally.
    """
    alpha, p, degenerate = _vector_mle(counts)
    live = ~degenerate
    if not live.any():
        raise DegenerateChainError("all chains are degenerate")
    info = (counts.n0_star * counts.n1_star).astype(np.float64)
    if math.isinf(weight_exponent):
        top = info == info[live].max()
        alpha_hat = float(alpha[top & live].mean())
    elif weight_exponent == 0:
        alpha_hat = float(alpha[live].mean())
    else:
        w = info[live] ** weight_exponent
        alpha_hat = float((w * alpha[live]).sum() / w.sum())
    return WindowEstimate(
        p_hat=p, alpha_hat=alpha_hat, method="mle-approx", degenerate=degenerate, size=counts.size
    )


def frequency_estimate(counts: ChainCounts) -> WindowEstimate:
    """Occupancy fraction ``n1 / s`` per dyad; no degenerate cases, no alpha."""
    p = counts.n1 / counts.size
    return WindowEstimate(
        p_hat=p,
        alpha_hat=None,
        method="frequency",
        degenerate=np.zeros(counts.k, dtype=bool),
        size=counts.size,
    )


def estimate_window(
    counts: ChainCounts, method: str, weight_exponent: float = math.inf
) -> WindowEstimate:
    """Dispatch on the estimator name: ``frequency`` or ``mle``."""
    if method == "frequency":
        return frequency_estimate(counts)
    if method == "mle":
        return mle_approx_multi(counts, weight_exponent)
    raise ValueError(f"unknown estimator {method!r}")
