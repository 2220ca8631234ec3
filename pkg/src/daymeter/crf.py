"""Linear-chain CRF over activity labels.

Scores, decodes, and trains over sequences of per-frame label scores.  A
label sequence y = (y_1..y_n) is scored as

    score(y) = sum_{i=0..n} A[y_i, y_{i+1}] + sum_{i=1..n} P[i, y_i]

where P is the n x k emission matrix, A is the transition matrix augmented
with two virtual states (START = k, STOP = k+1), y_0 = START and
y_{n+1} = STOP.  Everything here works directly on log-potentials: P rows
are raw scores, never probabilities.

All functions are pure; none mutate their inputs.
"""

from __future__ import annotations

import numpy as np

NEG_INF = -np.inf


def start_state(a: np.ndarray) -> int:
    return a.shape[0] - 2


def stop_state(a: np.ndarray) -> int:
    return a.shape[0] - 1


def make_transitions(
    k: int, priors: list[tuple[int, int, float]] | None = None
) -> np.ndarray:
    """Build a (k+2) x (k+2) transition matrix.

    Valid entries start at zero; transitions into START and out of STOP are
    masked to -inf.  ``priors`` is an optional list of (from, to, score)
    triples over the augmented state indices, applied on top.
    """
    a = np.zeros((k + 2, k + 2))
    a[:, k] = NEG_INF  # nothing enters START
    a[k + 1, :] = NEG_INF  # nothing leaves STOP
    if priors:
        for i, j, score in priors:
            if not (0 <= i <= k and 0 <= j <= k + 1):
                raise ValueError(f"transition prior ({i}, {j}) out of range")
            a[i, j] = score
    return a


def _check(p: np.ndarray, a: np.ndarray) -> int:
    if p.ndim != 2 or p.shape[0] < 1:
        raise ValueError(f"emission matrix must be 2-D and non-empty, got {p.shape}")
    k = p.shape[1]
    if a.shape != (k + 2, k + 2):
        raise ValueError(
            f"transition matrix shape {a.shape} inconsistent with k={k} emissions"
        )
    if not np.all(np.isfinite(p)):
        raise ValueError("emission matrix contains non-finite entries")
    return k


def logsumexp(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-shifted log-sum-exp along ``axis``; all -inf reduces to -inf."""
    m = np.max(x, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    out = np.squeeze(safe, axis=axis) + np.log(
        np.sum(np.exp(x - safe), axis=axis)
    )
    return np.where(np.squeeze(np.isfinite(m), axis=axis), out, NEG_INF)


def sequence_score(p: np.ndarray, a: np.ndarray, y: np.ndarray) -> float:
    """Score of one label sequence under emissions ``p`` and transitions ``a``."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=int)
    k = _check(p, a)
    n = p.shape[0]
    if y.shape != (n,):
        raise ValueError(f"label sequence length {y.shape} does not match n={n}")
    if np.any(y < 0) or np.any(y >= k):
        raise ValueError("label codes out of range")
    start, stop = k, k + 1
    score = a[start, y[0]] + a[y[-1], stop]
    score += np.sum(a[y[:-1], y[1:]])
    score += np.sum(p[np.arange(n), y])
    return float(score)


def viterbi(p: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, float]:
    """Highest-scoring label sequence and its score.

    Ties are broken toward the lowest label code at each backtrack step,
    so decoding is fully deterministic.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    k = _check(p, a)
    n = p.shape[0]
    start, stop = k, k + 1
    trans = a[:k, :k]

    delta = a[start, :k] + p[0]
    back = np.zeros((n, k), dtype=int)
    for t in range(1, n):
        cand = delta[:, None] + trans  # cand[i, j]: best ending in i, then i->j
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(k)] + p[t]

    final = delta + a[:k, stop]
    y = np.zeros(n, dtype=int)
    y[-1] = int(np.argmax(final))
    best = float(final[y[-1]])
    for t in range(n - 1, 0, -1):
        y[t - 1] = back[t, y[t]]
    return y, best


def _forward(p: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, float]:
    k = p.shape[1]
    n = p.shape[0]
    start, stop = k, k + 1
    trans = a[:k, :k]
    alpha = np.zeros((n, k))
    alpha[0] = a[start, :k] + p[0]
    for t in range(1, n):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + trans, axis=0) + p[t]
    log_z = float(logsumexp(alpha[-1] + a[:k, stop], axis=0))
    return alpha, log_z


def _backward(p: np.ndarray, a: np.ndarray) -> np.ndarray:
    k = p.shape[1]
    n = p.shape[0]
    stop = k + 1
    trans = a[:k, :k]
    beta = np.zeros((n, k))
    beta[-1] = a[:k, stop]
    for t in range(n - 2, -1, -1):
        beta[t] = logsumexp(trans + (p[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def log_partition(p: np.ndarray, a: np.ndarray) -> float:
    """log sum over all k^n sequences of exp(sequence_score), by the
    forward algorithm."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    _check(p, a)
    return _forward(p, a)[1]


def marginals(p: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact posterior marginals under the Gibbs distribution of the chain.

    Returns (unary, pairwise) with shapes (n, k) and (n-1, k, k); each unary
    row sums to 1.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    k = _check(p, a)
    n = p.shape[0]
    trans = a[:k, :k]
    alpha, log_z = _forward(p, a)
    beta = _backward(p, a)
    unary = np.exp(alpha + beta - log_z)
    pairwise = np.zeros((max(n - 1, 0), k, k))
    for t in range(n - 1):
        pairwise[t] = np.exp(
            alpha[t][:, None] + trans + (p[t + 1] + beta[t + 1])[None, :] - log_z
        )
    return unary, pairwise


def _centered_nll(p: np.ndarray, a: np.ndarray, y: np.ndarray) -> float:
    """log_partition - sequence_score(y), by a forward recursion on scores
    re-centered around the gold path.

    Subtracting each gold increment inside the recursion keeps the gold
    path's running score at exactly zero, so the result is exactly 0 for a
    point mass (e.g. k = 1) and can never go negative.
    """
    k = p.shape[1]
    n = p.shape[0]
    start, stop = k, k + 1
    trans = a[:k, :k]
    alpha = (a[start, :k] - a[start, y[0]]) + (p[0] - p[0, y[0]])
    for t in range(1, n):
        alpha = logsumexp(alpha[:, None] + trans, axis=0) + p[t]
        alpha -= a[y[t - 1], y[t]] + p[t, y[t]]
    loss = float(logsumexp(alpha + a[:k, stop], axis=0)) - a[y[-1], stop]
    return max(loss, 0.0)


def nll_and_grad(
    p: np.ndarray, a: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative log-likelihood of ``y`` and its gradients w.r.t. P and A.

    loss = log_partition - sequence_score(y) >= 0.  dP is the difference
    between unary marginals and the one-hot truth; dA likewise compares
    expected and observed transition counts (including the virtual
    START row and STOP column).
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=int)
    k = _check(p, a)
    n = p.shape[0]
    start, stop = k, k + 1
    if y.shape != (n,) or np.any(y < 0) or np.any(y >= k):
        raise ValueError("label sequence does not match the emission matrix")

    loss = _centered_nll(p, a, y)
    unary, pairwise = marginals(p, a)

    dp = unary.copy()
    dp[np.arange(n), y] -= 1.0

    da = np.zeros_like(a)
    da[start, :k] = unary[0]
    da[:k, stop] = unary[-1]
    if n > 1:
        da[:k, :k] = pairwise.sum(axis=0)
    da[start, y[0]] -= 1.0
    da[y[-1], stop] -= 1.0
    np.add.at(da, (y[:-1], y[1:]), -1.0)
    return float(loss), dp, da
