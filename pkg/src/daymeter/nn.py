"""Trainable feature pipeline: fusion layers, coupled-gate BiLSTM, projection.

The LSTM cell couples its input and forget gates (forget = 1 - input) and
uses full-matrix peephole terms on both the input and output gates:

    i_t = sigmoid(W_xi x_t + W_hi h_{t-1} + W_ci c_{t-1} + b_i)
    c_t = (1 - i_t) * c_{t-1} + i_t * tanh(W_xc x_t + W_hc h_{t-1} + b_c)
    o_t = sigmoid(W_xo x_t + W_ho h_{t-1} + W_co c_t + b_o)
    h_t = o_t * tanh(c_t)

Note the output-gate peephole reads the *new* cell state c_t.  With a zero
initial state every c_t is a convex combination of 0 and tanh values, so
|c_t| <= 1 and |h_t| < 1 for any parameters and inputs.

All forward helpers accept either a single example (vectors) or a batch
(leading batch axis); weight matrices are stored (out, in) and applied as
``x @ w.T``.  Everything is float64.  Backward passes produce exact
reverse-mode gradients against caches captured during the forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activities import NUM_ACTIVITIES
from .crf import make_transitions


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _uniform_init(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    fan_out, fan_in = shape
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape)


@dataclass
class LstmCellParams:
    """All weights of one coupled-gate cell, sized for (d_x, d_h)."""

    w_xi: np.ndarray
    w_hi: np.ndarray
    w_ci: np.ndarray
    b_i: np.ndarray
    w_xc: np.ndarray
    w_hc: np.ndarray
    b_c: np.ndarray
    w_xo: np.ndarray
    w_ho: np.ndarray
    w_co: np.ndarray
    b_o: np.ndarray

    @classmethod
    def create(cls, d_x: int, d_h: int, rng: np.random.Generator) -> "LstmCellParams":
        return cls(
            w_xi=_uniform_init(rng, (d_h, d_x)),
            w_hi=_uniform_init(rng, (d_h, d_h)),
            w_ci=_uniform_init(rng, (d_h, d_h)),
            b_i=np.zeros(d_h),
            w_xc=_uniform_init(rng, (d_h, d_x)),
            w_hc=_uniform_init(rng, (d_h, d_h)),
            b_c=np.zeros(d_h),
            w_xo=_uniform_init(rng, (d_h, d_x)),
            w_ho=_uniform_init(rng, (d_h, d_h)),
            w_co=_uniform_init(rng, (d_h, d_h)),
            b_o=np.zeros(d_h),
        )

    @property
    def input_dim(self) -> int:
        return self.w_xi.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_xi.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {
            "w_xi": self.w_xi, "w_hi": self.w_hi, "w_ci": self.w_ci, "b_i": self.b_i,
            "w_xc": self.w_xc, "w_hc": self.w_hc, "b_c": self.b_c,
            "w_xo": self.w_xo, "w_ho": self.w_ho, "w_co": self.w_co, "b_o": self.b_o,
        }


@dataclass
class LstmState:
    """Hidden and cell vectors; zeros() builds the conventional start state."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, d_h: int) -> "LstmState":
        return cls(h=np.zeros(d_h), c=np.zeros(d_h))


def _step(
    p: LstmCellParams, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray
) -> tuple[np.ndarray, ...]:
    if x.shape[-1] != p.input_dim:
        raise ValueError(f"input width {x.shape[-1]} != cell input dim {p.input_dim}")
    a_i = x @ p.w_xi.T + h_prev @ p.w_hi.T + c_prev @ p.w_ci.T + p.b_i
    i = sigmoid(a_i)
    g = np.tanh(x @ p.w_xc.T + h_prev @ p.w_hc.T + p.b_c)
    c = (1.0 - i) * c_prev + i * g
    o = sigmoid(x @ p.w_xo.T + h_prev @ p.w_ho.T + c @ p.w_co.T + p.b_o)
    tc = np.tanh(c)
    h = o * tc
    return h, c, i, g, o, tc


def lstm_step(p: LstmCellParams, x: np.ndarray, prev: LstmState) -> LstmState:
    """Advance one cell step; pure function of (params, input, state)."""
    x = np.asarray(x, dtype=float)
    h, c, *_ = _step(p, x, prev.h, prev.c)
    return LstmState(h=h, c=c)


class _SeqCache:
    """Per-direction forward intermediates for a (B, n, *) run."""

    __slots__ = ("xs", "h_prev", "c_prev", "i", "g", "c", "o", "tc")

    def __init__(self, b: int, n: int, d_x: int, d_h: int):
        self.xs = np.zeros((b, n, d_x))
        self.h_prev = np.zeros((b, n, d_h))
        self.c_prev = np.zeros((b, n, d_h))
        self.i = np.zeros((b, n, d_h))
        self.g = np.zeros((b, n, d_h))
        self.c = np.zeros((b, n, d_h))
        self.o = np.zeros((b, n, d_h))
        self.tc = np.zeros((b, n, d_h))


def _run_direction(p: LstmCellParams, xs: np.ndarray) -> tuple[np.ndarray, _SeqCache]:
    b, n, d_x = xs.shape
    d_h = p.hidden_dim
    cache = _SeqCache(b, n, d_x, d_h)
    cache.xs[...] = xs
    h = np.zeros((b, d_h))
    c = np.zeros((b, d_h))
    hs = np.zeros((b, n, d_h))
    for t in range(n):
        cache.h_prev[:, t] = h
        cache.c_prev[:, t] = c
        h, c, i, g, o, tc = _step(p, xs[:, t], h, c)
        cache.i[:, t], cache.g[:, t], cache.c[:, t] = i, g, c
        cache.o[:, t], cache.tc[:, t] = o, tc
        hs[:, t] = h
    return hs, cache


def _direction_backward(
    p: LstmCellParams, cache: _SeqCache, d_hs: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    b, n, d_x = cache.xs.shape
    d_h = p.hidden_dim
    grads = {k: np.zeros_like(v) for k, v in p.params().items()}
    d_xs = np.zeros((b, n, d_x))
    dh_next = np.zeros((b, d_h))
    dc_next = np.zeros((b, d_h))
    for t in range(n - 1, -1, -1):
        i, g, c, o, tc = (
            cache.i[:, t], cache.g[:, t], cache.c[:, t], cache.o[:, t], cache.tc[:, t],
        )
        x, h_prev, c_prev = cache.xs[:, t], cache.h_prev[:, t], cache.c_prev[:, t]
        dh = d_hs[:, t] + dh_next
        da_o = dh * tc * o * (1.0 - o)
        # c feeds h through tanh, the next step through the coupled gate,
        # and o through the output-gate peephole
        dc = dh * o * (1.0 - tc * tc) + dc_next + da_o @ p.w_co
        da_g = dc * i * (1.0 - g * g)
        da_i = dc * (g - c_prev) * i * (1.0 - i)
        dc_next = dc * (1.0 - i) + da_i @ p.w_ci
        dh_next = da_i @ p.w_hi + da_g @ p.w_hc + da_o @ p.w_ho
        d_xs[:, t] = da_i @ p.w_xi + da_g @ p.w_xc + da_o @ p.w_xo
        grads["w_xi"] += da_i.T @ x
        grads["w_hi"] += da_i.T @ h_prev
        grads["w_ci"] += da_i.T @ c_prev
        grads["b_i"] += da_i.sum(axis=0)
        grads["w_xc"] += da_g.T @ x
        grads["w_hc"] += da_g.T @ h_prev
        grads["b_c"] += da_g.sum(axis=0)
        grads["w_xo"] += da_o.T @ x
        grads["w_ho"] += da_o.T @ h_prev
        grads["w_co"] += da_o.T @ c
        grads["b_o"] += da_o.sum(axis=0)
    return d_xs, grads


def bilstm_forward(
    fwd: LstmCellParams, bwd: LstmCellParams, xs: np.ndarray
) -> np.ndarray:
    """Per-step concat of the forward pass and the reversed backward pass.

    ``xs`` is (n, d_x) for one sequence or (B, n, d_x) for a batch; the
    output widens the last axis to 2 * d_h.
    """
    out, _ = bilstm_forward_cached(fwd, bwd, xs)
    return out


def bilstm_forward_cached(
    fwd: LstmCellParams, bwd: LstmCellParams, xs: np.ndarray
) -> tuple[np.ndarray, tuple]:
    xs = np.asarray(xs, dtype=float)
    single = xs.ndim == 2
    if single:
        xs = xs[None]
    if xs.ndim != 3 or xs.shape[1] == 0:
        raise ValueError(f"expected a nonempty (n, d_x) or (B, n, d_x) input, got {xs.shape}")
    hs_f, cache_f = _run_direction(fwd, xs)
    hs_b_rev, cache_b = _run_direction(bwd, xs[:, ::-1])
    out = np.concatenate([hs_f, hs_b_rev[:, ::-1]], axis=-1)
    cache = (cache_f, cache_b, single)
    return (out[0] if single else out), cache


def bilstm_backward(
    fwd: LstmCellParams, bwd: LstmCellParams, cache: tuple, d_out: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Gradients of both cells and of the inputs, given d(output)."""
    cache_f, cache_b, single = cache
    d_out = np.asarray(d_out, dtype=float)
    if single:
        d_out = d_out[None]
    d_h = fwd.hidden_dim
    d_xs_f, grads_f = _direction_backward(fwd, cache_f, d_out[..., :d_h])
    d_xs_b, grads_b = _direction_backward(bwd, cache_b, d_out[:, ::-1, d_h:])
    d_xs = d_xs_f + d_xs_b[:, ::-1]
    return (d_xs[0] if single else d_xs), grads_f, grads_b


@dataclass
class DenseLayer:
    """Affine map, no activation; w is (out, in)."""

    w: np.ndarray
    b: np.ndarray

    @classmethod
    def create(cls, d_in: int, d_out: int, rng: np.random.Generator) -> "DenseLayer":
        return cls(w=_uniform_init(rng, (d_out, d_in)), b=np.zeros(d_out))

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]

    @property
    def in_dim(self) -> int:
        return self.w.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x @ self.w.T + self.b

    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}


@dataclass
class FusionHeadParams:
    """FC1 on the scene feature, FC2 on each object proposal, FC3 on the
    concatenation of FC1 output and the pooled FC2 outputs."""

    fc1: DenseLayer
    fc2: DenseLayer
    fc3: DenseLayer

    def __post_init__(self) -> None:
        expect = self.fc1.out_dim + self.fc2.out_dim
        if self.fc3.in_dim != expect:
            raise ValueError(
                f"fc3 input dim {self.fc3.in_dim} != fc1 out + fc2 out = {expect}"
            )

    @classmethod
    def create(
        cls,
        scene_dim: int,
        object_dim: int,
        rng: np.random.Generator,
        fc1_out: int = 500,
        fc2_out: int = 400,
        fc3_out: int = 500,
    ) -> "FusionHeadParams":
        return cls(
            fc1=DenseLayer.create(scene_dim, fc1_out, rng),
            fc2=DenseLayer.create(object_dim, fc2_out, rng),
            fc3=DenseLayer.create(fc1_out + fc2_out, fc3_out, rng),
        )

    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in (("fc1", self.fc1), ("fc2", self.fc2), ("fc3", self.fc3)):
            for k, v in layer.params().items():
                out[f"{name}.{k}"] = v
        return out


def fusion_forward(
    head: FusionHeadParams,
    scene_feat: np.ndarray,
    object_feats: list[np.ndarray] | None,
) -> np.ndarray:
    """Fuse one frame's scene feature with its (possibly empty) proposals.

    Proposals are mean-pooled after FC2 so the result is invariant to their
    order; an empty list contributes the zero vector in place of the pool.
    """
    scene_feat = np.asarray(scene_feat, dtype=float)
    feats = [np.asarray(f, dtype=float) for f in (object_feats or [])]
    stack = (
        np.stack(feats) if feats else np.zeros((0, head.fc2.in_dim))
    )
    counts = np.array([len(feats)])
    out, _ = fusion_forward_many(head, scene_feat[None], stack, counts)
    return out[0]


def fusion_forward_many(
    head: FusionHeadParams,
    scenes: np.ndarray,
    proposal_stack: np.ndarray,
    counts: np.ndarray,
) -> tuple[np.ndarray, tuple]:
    """Batched fusion over F frames.

    ``scenes`` is (F, scene_dim); ``proposal_stack`` is every proposal of
    every frame, concatenated in frame order, with ``counts[f]`` proposals
    belonging to frame f.
    """
    f = scenes.shape[0]
    if counts.shape != (f,):
        raise ValueError("counts must have one entry per frame")
    if int(counts.sum()) != proposal_stack.shape[0]:
        raise ValueError("proposal stack size does not match counts")
    s_out = head.fc1.apply(scenes)
    p_out = head.fc2.apply(proposal_stack)
    frame_ids = np.repeat(np.arange(f), counts)
    pooled = np.zeros((f, head.fc2.out_dim))
    np.add.at(pooled, frame_ids, p_out)
    denom = np.maximum(counts, 1)[:, None]
    pooled = pooled / denom
    z = np.concatenate([s_out, pooled], axis=1)
    x = head.fc3.apply(z)
    cache = (scenes, proposal_stack, frame_ids, counts, z)
    return x, cache


def fusion_backward(
    head: FusionHeadParams, cache: tuple, d_x: np.ndarray
) -> dict[str, np.ndarray]:
    scenes, proposal_stack, frame_ids, counts, z = cache
    d1 = head.fc1.out_dim
    dz = d_x @ head.fc3.w
    ds = dz[:, :d1]
    dpool = dz[:, d1:]
    d_per = dpool[frame_ids] / np.maximum(counts, 1)[frame_ids, None]
    return {
        "fc3.w": d_x.T @ z,
        "fc3.b": d_x.sum(axis=0),
        "fc1.w": ds.T @ scenes,
        "fc1.b": ds.sum(axis=0),
        "fc2.w": d_per.T @ proposal_stack,
        "fc2.b": d_per.sum(axis=0),
    }


def emission_forward(proj: DenseLayer, hs: np.ndarray) -> np.ndarray:
    """Project BiLSTM outputs to one raw score row per frame (no softmax)."""
    hs = np.asarray(hs, dtype=float)
    if hs.shape[-1] != proj.in_dim:
        raise ValueError(f"hidden width {hs.shape[-1]} != projection input {proj.in_dim}")
    return proj.apply(hs)


def emission_backward(
    proj: DenseLayer, hs: np.ndarray, d_p: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    flat_h = hs.reshape(-1, hs.shape[-1])
    flat_d = d_p.reshape(-1, d_p.shape[-1])
    grads = {"w": flat_d.T @ flat_h, "b": flat_d.sum(axis=0)}
    return d_p @ proj.w, grads


@dataclass
class BilstmCrfModel:
    """Every trainable parameter of the labeling pipeline."""

    fusion: FusionHeadParams
    fwd: LstmCellParams
    bwd: LstmCellParams
    proj: DenseLayer
    transitions: np.ndarray

    @classmethod
    def create(
        cls,
        scene_dim: int,
        object_dim: int,
        hidden_dim: int = 100,
        fc1_out: int = 500,
        fc2_out: int = 400,
        fc3_out: int = 500,
        num_labels: int = NUM_ACTIVITIES,
        seed: int = 0,
        transition_priors: list[tuple[int, int, float]] | None = None,
    ) -> "BilstmCrfModel":
        rng = np.random.Generator(np.random.PCG64(seed))
        fusion = FusionHeadParams.create(
            scene_dim, object_dim, rng, fc1_out=fc1_out, fc2_out=fc2_out, fc3_out=fc3_out
        )
        fwd = LstmCellParams.create(fc3_out, hidden_dim, rng)
        bwd = LstmCellParams.create(fc3_out, hidden_dim, rng)
        proj = DenseLayer.create(2 * hidden_dim, num_labels, rng)
        return cls(
            fusion=fusion,
            fwd=fwd,
            bwd=bwd,
            proj=proj,
            transitions=make_transitions(num_labels, transition_priors),
        )

    @property
    def num_labels(self) -> int:
        return self.proj.out_dim

    @property
    def hidden_dim(self) -> int:
        return self.fwd.hidden_dim

    def named_params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for k, v in self.fusion.params().items():
            out[f"fusion.{k}"] = v
        for k, v in self.fwd.params().items():
            out[f"fwd.{k}"] = v
        for k, v in self.bwd.params().items():
            out[f"bwd.{k}"] = v
        for k, v in self.proj.params().items():
            out[f"proj.{k}"] = v
        out["transitions"] = self.transitions
        return out
