"""Joint NLL training of the labeling pipeline by minibatch SGD.

The loss is the mean per-window CRF negative log-likelihood; gradients flow
through the transition matrix and, when windows carry raw features, through
the projection, BiLSTM, and fusion head as well.  Windows of equal length
are processed as one batch, so the heavy work happens inside a handful of
array operations; the batched chain computations are verified against the
per-instance ones in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .crf import logsumexp
from .inference import (
    Window,
    frames_emissions,
    frames_features,
    resolve_input_mode,
)
from .nn import (
    BilstmCrfModel,
    bilstm_backward,
    bilstm_forward_cached,
    emission_backward,
    emission_forward,
    fusion_backward,
    fusion_forward_many,
)


class TrainingDivergedError(RuntimeError):
    """Raised when the loss stops being finite; carries diagnostics."""


@dataclass
class TrainOptions:
    learning_rate: float = 0.1
    epochs: int = 10
    batch_size: int = 256
    seed: int = 0
    shuffle: bool = True


@dataclass
class TrainingTrace:
    losses: list[float] = field(default_factory=list)
    n_windows: int = 0
    input_mode: str = ""

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def batch_nll_and_grad(
    p: np.ndarray, a: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Summed NLL and gradients for a batch of equal-length windows.

    ``p`` is (B, n, k), ``y`` is (B, n); returns (loss_sum, dP, dA) where dA
    aggregates over the batch.  Matches per-window crf.nll_and_grad summed.
    """
    b, n, k = p.shape
    start, stop = k, k + 1
    trans = a[:k, :k]

    alpha = np.zeros((b, n, k))
    alpha[:, 0] = a[start, :k][None] + p[:, 0]
    for t in range(1, n):
        alpha[:, t] = (
            logsumexp(alpha[:, t - 1][:, :, None] + trans[None], axis=1) + p[:, t]
        )
    log_z = logsumexp(alpha[:, -1] + a[:k, stop][None], axis=1)

    beta = np.zeros((b, n, k))
    beta[:, -1] = a[:k, stop][None]
    for t in range(n - 2, -1, -1):
        beta[:, t] = logsumexp(
            trans[None] + (p[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2
        )

    rows = np.arange(b)[:, None]
    cols = np.arange(n)[None, :]
    emit_scores = p[rows, cols, y].sum(axis=1)
    trans_scores = a[start, y[:, 0]] + a[y[:, -1], stop]
    if n > 1:
        trans_scores = trans_scores + a[y[:, :-1], y[:, 1:]].sum(axis=1)
    loss_sum = float(np.sum(log_z - (emit_scores + trans_scores)))

    unary = np.exp(alpha + beta - log_z[:, None, None])
    dp = unary.copy()
    dp[rows, cols, y] -= 1.0

    da = np.zeros_like(a)
    da[start, :k] = unary[:, 0].sum(axis=0)
    da[:k, stop] = unary[:, -1].sum(axis=0)
    for t in range(n - 1):
        da[:k, :k] += np.exp(
            alpha[:, t][:, :, None]
            + trans[None]
            + (p[:, t + 1] + beta[:, t + 1])[:, None, :]
            - log_z[:, None, None]
        ).sum(axis=0)
    np.add.at(da, (np.full(b, start), y[:, 0]), -1.0)
    np.add.at(da, (y[:, -1], np.full(b, stop)), -1.0)
    if n > 1:
        np.add.at(da, (y[:, :-1].ravel(), y[:, 1:].ravel()), -1.0)
    return loss_sum, dp, da


def _batch_scores_cached(
    model: BilstmCrfModel, wins: list[Window], mode: str
) -> tuple[np.ndarray, tuple | None]:
    if mode == "emissions":
        p = np.stack([frames_emissions(w.frames) for w in wins])
        return p, None
    n = len(wins[0])
    scenes = []
    stacks = []
    counts = []
    for w in wins:
        s, st, c = frames_features(w.frames)
        scenes.append(s)
        counts.append(c)
        if st.size:
            stacks.append(st)
    scene_mat = np.concatenate(scenes, axis=0)
    count_arr = np.concatenate(counts)
    stack = (
        np.concatenate(stacks, axis=0)
        if stacks
        else np.zeros((0, model.fusion.fc2.in_dim))
    )
    xs_flat, fusion_cache = fusion_forward_many(model.fusion, scene_mat, stack, count_arr)
    xs = xs_flat.reshape(len(wins), n, -1)
    hs, lstm_cache = bilstm_forward_cached(model.fwd, model.bwd, xs)
    p = emission_forward(model.proj, hs)
    return p, (fusion_cache, lstm_cache, hs)


def _batch_backward(
    model: BilstmCrfModel, cache: tuple, dp: np.ndarray
) -> dict[str, np.ndarray]:
    fusion_cache, lstm_cache, hs = cache
    d_hs, proj_grads = emission_backward(model.proj, hs, dp)
    d_xs, fwd_grads, bwd_grads = bilstm_backward(model.fwd, model.bwd, lstm_cache, d_hs)
    fusion_grads = fusion_backward(
        model.fusion, fusion_cache, d_xs.reshape(-1, d_xs.shape[-1])
    )
    out: dict[str, np.ndarray] = {}
    for k, v in fusion_grads.items():
        out[f"fusion.{k}"] = v
    for k, v in fwd_grads.items():
        out[f"fwd.{k}"] = v
    for k, v in bwd_grads.items():
        out[f"bwd.{k}"] = v
    for k, v in proj_grads.items():
        out[f"proj.{k}"] = v
    return out


def window_loss_and_grads(
    model: BilstmCrfModel, wins: list[Window], mode: str
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean NLL over equal-length windows and gradients for every parameter
    on the active path."""
    b = len(wins)
    p, cache = _batch_scores_cached(model, wins, mode)
    y = np.stack([w.label_codes() for w in wins])
    loss_sum, dp, da = batch_nll_and_grad(p, model.transitions, y)
    grads: dict[str, np.ndarray] = {"transitions": da / b}
    if cache is not None:
        grads.update(_batch_backward(model, cache, dp / b))
    return loss_sum / b, grads


def fit(
    model: BilstmCrfModel,
    windows: list[Window],
    opts: TrainOptions | None = None,
    log_fn: Callable[[int, float], None] | None = None,
) -> TrainingTrace:
    """Minibatch SGD on the mean window NLL; deterministic given the seed.

    Windows are bucketed by length so every batch is rectangular.  Raises
    TrainingDivergedError with diagnostics if the loss leaves the reals.
    """
    if not windows:
        raise ValueError("empty training set")
    opts = opts or TrainOptions()
    mode = resolve_input_mode(windows[0].frames, "auto")
    for w in windows:
        resolve_input_mode(w.frames, mode)

    buckets: dict[int, list[Window]] = {}
    for w in windows:
        buckets.setdefault(len(w), []).append(w)

    rng = np.random.Generator(np.random.PCG64(opts.seed))
    params = model.named_params()
    trans_mask = ~np.isfinite(model.transitions)
    trace = TrainingTrace(n_windows=len(windows), input_mode=mode)

    for epoch in range(opts.epochs):
        total_loss = 0.0
        for n in sorted(buckets):
            group = buckets[n]
            order = rng.permutation(len(group)) if opts.shuffle else np.arange(len(group))
            for lo in range(0, len(group), opts.batch_size):
                batch = [group[i] for i in order[lo:lo + opts.batch_size]]
                loss, grads = window_loss_and_grads(model, batch, mode)
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        f"non-finite loss {loss} at epoch {epoch}, window length {n}, "
                        f"batch offset {lo} (lr={opts.learning_rate})"
                    )
                grads["transitions"][trans_mask] = 0.0
                for key, g in grads.items():
                    params[key] -= opts.learning_rate * g
                total_loss += loss * len(batch)
        epoch_loss = total_loss / len(windows)
        trace.losses.append(epoch_loss)
        if log_fn is not None:
            log_fn(epoch, epoch_loss)
    return trace
