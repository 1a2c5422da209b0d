"""Exact distributions over mental states.

The mental system is a birth-death chain on the integer states -K..K with
reflecting ends: processed evidence for state 1 moves one step up, evidence
for state 2 one step down, censored signals leave the state alone. Distribution
vectors are plain numpy arrays ordered from -K to K (the multi-theory ladder
uses its own ordering, see ``ladder_state_labels``).
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .signals import FullyCensored, TransitionKernel

__all__ = [
    "stationary",
    "upper_tail",
    "finite_n_distribution",
    "kernel_from_p",
    "ladder_state_labels",
    "ladder_transition",
    "general_stationary",
]


def _check_k(K: int) -> None:
    if not isinstance(K, (int, np.integer)) or K < 1:
        raise ValueError(f"K must be a positive integer, got {K!r}")


def stationary(r: float, K: int) -> np.ndarray:
    """Long-run state distribution of the chain with up/down odds r.

    probs(s) is proportional to r**s for s in -K..K. The sentinels r = inf
    and r = 0 give point masses at +K and -K (one-sided dynamics are legal
    and flow through the welfare analysis unchanged).
    """
    _check_k(K)
    n = 2 * K + 1
    if r == math.inf:
        out = np.zeros(n)
        out[-1] = 1.0
        return out
    if r == 0.0:
        out = np.zeros(n)
        out[0] = 1.0
        return out
    if not r > 0.0:
        raise ValueError(f"r must be positive (or the 0/inf sentinel), got {r!r}")
    s = np.arange(-K, K + 1, dtype=float)
    # anchor the largest power at r**0 so extreme r cannot overflow
    w = r ** (s - K) if r >= 1.0 else r ** (s + K)
    return w / w.sum()


def upper_tail(k: int, r: float, K: int) -> float:
    """Probability that the chain settles at state k or above."""
    _check_k(K)
    if not -K <= k <= K + 1:
        raise ValueError(f"k={k} outside -K..K+1 for K={K}")
    if k == K + 1:
        return 0.0
    return float(stationary(r, K)[k + K :].sum())


def kernel_from_p(p11: float, p22: float) -> TransitionKernel:
    """Kernel with no stay probability, moving by (p11, p22) per signal."""
    return TransitionKernel(
        up=(p11, 1.0 - p22), down=(1.0 - p11, p22), stay=(0.0, 0.0)
    )


def finite_n_distribution(
    q: TransitionKernel,
    theta: int,
    K: int,
    N: int,
    processed_only: bool = False,
) -> np.ndarray:
    """Exact state distribution after N signals, starting from state 0.

    Evolves the probability vector directly (no sampling). With
    ``processed_only`` the stay probability is dropped and the move
    probabilities rescaled, so N counts processed signals rather than raw
    ones.
    """
    _check_k(K)
    if N < 0:
        raise ValueError("N must be nonnegative")
    up, down, stay = q.column(theta)
    if processed_only:
        total = up + down
        if total <= 0.0:
            raise FullyCensored(theta)
        up, down, stay = up / total, down / total, 0.0
    v = np.zeros(2 * K + 1)
    v[K] = 1.0
    for _ in range(N):
        nxt = stay * v
        nxt[1:] += up * v[:-1]
        nxt[:-1] += down * v[1:]
        nxt[-1] += up * v[-1]  # blocked up move at +K
        nxt[0] += down * v[0]  # blocked down move at -K
        v = nxt
    return v


# ---------------------------------------------------------------------------
# multi-theory ladder


def ladder_state_labels(K: int) -> list[str]:
    """State labels in storage order: 0, then ladders 1..3 bottom-up."""
    _check_k(K)
    labels = ["0"]
    for i in (1, 2, 3):
        labels.extend(f"({i},{k})" for k in range(1, K + 1))
    return labels


def _ladder_index(i: int, k: int, K: int) -> int:
    return 1 + (i - 1) * K + (k - 1)


def ladder_transition(p3: np.ndarray, K: int, theta: int) -> np.ndarray:
    """Ladder-chain transition matrix under underlying state theta.

    ``p3[i - 1, theta - 1]`` is the probability that a processed signal
    points to state i given theta (columns must sum to 1). Evidence for i
    climbs the i-ladder one rung (sticking at the top) and pushes any other
    ladder down one rung, through the shared bottom state 0.
    """
    _check_k(K)
    p3 = np.asarray(p3, dtype=float)
    if p3.shape != (3, 3):
        raise ValueError(f"p3 must be 3x3, got shape {p3.shape}")
    if np.any(p3 < -1e-15) or np.any(np.abs(p3.sum(axis=0) - 1.0) > 1e-12):
        raise ValueError("p3 columns must be probability vectors summing to 1")
    if theta not in (1, 2, 3):
        raise ValueError(f"theta must be 1, 2 or 3, got {theta}")
    weights = p3[:, theta - 1]
    n = 3 * K + 1
    P = np.zeros((n, n))
    for i in (1, 2, 3):
        w = weights[i - 1]
        P[0, _ladder_index(i, 1, K)] += w  # center climbs onto ladder i
        for j in (1, 2, 3):
            for k in range(1, K + 1):
                src = _ladder_index(j, k, K)
                if j == i:
                    dst = src if k == K else _ladder_index(i, k + 1, K)
                else:
                    dst = 0 if k == 1 else _ladder_index(j, k - 1, K)
                P[src, dst] += w
    return P


def _strongly_connected(support: np.ndarray) -> bool:
    n = support.shape[0]

    def reach(adj) -> set[int]:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in np.nonzero(adj[u])[0]:
                if v not in seen:
                    seen.add(int(v))
                    stack.append(int(v))
        return seen

    return len(reach(support)) == n and len(reach(support.T)) == n


def general_stationary(
    matrix: np.ndarray | Sequence[Sequence[float]],
    tol: float = 1e-12,
    max_iter: int = 10**6,
) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix by power iteration.

    The support graph must be strongly connected (reducible chains are
    rejected since their stationary distribution is not unique). Iteration
    runs on the lazy half-step matrix (P + I) / 2, which shares the same
    stationary vector but cannot oscillate; the residual is measured against
    the original matrix.
    """
    P = np.asarray(matrix, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError(f"matrix must be square, got shape {P.shape}")
    if np.any(P < -1e-15):
        raise ValueError("matrix entries must be nonnegative")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
        raise ValueError("matrix rows must sum to 1 within 1e-12")
    if not _strongly_connected(P > 0.0):
        raise ValueError("reducible chain: no unique stationary distribution")
    n = P.shape[0]
    v = np.full(n, 1.0 / n)
    residual = math.inf
    for _ in range(max_iter):
        nxt = 0.5 * (v @ P + v)
        nxt /= nxt.sum()
        residual = np.abs(nxt @ P - nxt).max()
        if residual <= tol:
            return nxt
        v = nxt
    raise RuntimeError(
        f"power iteration did not converge: residual {residual:.3e} "
        f"after {max_iter} iterations"
    )
