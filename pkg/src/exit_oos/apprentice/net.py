"""Feed-forward policy network with a masked softmax head.

Inference goes through a small compiled dense kernel whose per-row
arithmetic does not depend on the batch size, so a batched evaluation is
bitwise equal to evaluating each row alone.  Training uses numpy matmuls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

ADAM_LR = 1e-3
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class NetConfig:
    input_dim: int
    hidden: tuple
    output_dim: int

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError(f"invalid layer sizes in {self}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def sizes(self) -> list:
        return [self.input_dim, *self.hidden, self.output_dim]

    @classmethod
    def for_game(cls, game) -> "NetConfig":
        gid = game.game_id
        if gid.startswith("goof"):
            hidden = (128, 64) if game.n <= 6 else (128, 128, 64)
        else:
            hidden = (128,)
        return cls(game.encoding_dim, hidden, game.num_actions)


@dataclass
class NetworkParams:
    config: NetConfig
    weights: list
    biases: list
    version: int = 0

    def arrays(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.config, [w.copy() for w in self.weights],
                             [b.copy() for b in self.biases], self.version)

    @property
    def dtype(self):
        return self.weights[0].dtype


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    lr: float = ADAM_LR
    beta1: float = ADAM_BETAS[0]
    beta2: float = ADAM_BETAS[1]
    eps: float = ADAM_EPS

    @classmethod
    def zeros_like(cls, params: NetworkParams, **kw) -> "AdamState":
        arrays = params.arrays()
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays], **kw)


def init(config: NetConfig, rng, dtype=np.float32) -> NetworkParams:
    """He-style uniform fan-in initialisation, zero biases."""
    sizes = config.sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return NetworkParams(config, weights, biases)


@njit(cache=True)
def _dense(x, w, b, relu):
    rows, fan_in = x.shape
    fan_out = w.shape[1]
    out = np.empty((rows, fan_out), np.float64)
    for r in range(rows):
        for j in range(fan_out):
            out[r, j] = b[j]
        for i in range(fan_in):
            xi = np.float64(x[r, i])
            if xi != 0.0:
                for j in range(fan_out):
                    out[r, j] += xi * w[i, j]
        if relu:
            for j in range(fan_out):
                if out[r, j] < 0.0:
                    out[r, j] = 0.0
    return out


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax with illegal entries zeroed and the rest renormalised."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise ValueError("every row needs at least one legal action")
    z = np.where(mask, logits, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.where(mask, np.exp(z), 0.0)
    return e / e.sum(axis=-1, keepdims=True)


def logits(params: NetworkParams, features) -> np.ndarray:
    x = np.atleast_2d(np.asarray(features))
    if x.shape[1] != params.config.input_dim:
        raise ValueError(f"feature length {x.shape[1]} != input_dim {params.config.input_dim}")
    h = np.ascontiguousarray(x, dtype=np.float64)
    last = len(params.weights) - 1
    for li, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = _dense(h, w, b, li < last)
    return h


def forward(params: NetworkParams, features, mask) -> np.ndarray:
    """Action distribution ``p = f(features)`` restricted to ``mask``.

    Accepts a single vector or a batch; the output has the matching shape.
    """
    single = np.ndim(features) == 1
    mask = np.atleast_2d(np.asarray(mask, dtype=bool))
    z = logits(params, features)
    if mask.shape != z.shape:
        raise ValueError(f"mask shape {mask.shape} does not match output {z.shape}")
    p = masked_softmax(z, mask)
    return p[0] if single else p


def kl_loss(target, output) -> float:
    """KL(target || output) with 0 log 0 = 0."""
    t = np.asarray(target, dtype=np.float64)
    p = np.asarray(output, dtype=np.float64)
    if t.shape != p.shape:
        raise ValueError("target and output differ in length")
    sup = t > 0.0
    if np.any(p[sup] <= 0.0):
        raise ValueError("infinite loss: output gives zero mass to a target action")
    return float(np.sum(t[sup] * (np.log(t[sup]) - np.log(p[sup]))))


def _train_forward(params: NetworkParams, x: np.ndarray):
    acts = [x]
    pre = []
    h = x
    last = len(params.weights) - 1
    for li, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0) if li < last else z
        acts.append(h)
    return acts, pre


def loss_and_grad(params: NetworkParams, features, masks, targets):
    """Mean KL loss over a minibatch and its gradient (list like ``params.arrays()``)."""
    x = np.asarray(features, dtype=params.dtype)
    masks = np.asarray(masks, dtype=bool)
    t = np.asarray(targets, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("empty minibatch")
    acts, pre = _train_forward(params, x)
    p = masked_softmax(pre[-1].astype(np.float64), masks)
    sup = t > 0.0
    if np.any(p[sup] <= 0.0):
        raise ValueError("infinite loss: output gives zero mass to a target action")
    tl = np.where(sup, t * (np.log(np.where(sup, t, 1.0)) - np.log(np.where(sup, p, 1.0))), 0.0)
    loss = float(tl.sum(axis=1).mean())

    rows = len(x)
    # masked entries have p = t = 0, so they get no gradient
    delta = ((p - t) / rows).astype(params.dtype)
    grads = [None] * (2 * len(params.weights))
    for li in range(len(params.weights) - 1, -1, -1):
        grads[2 * li] = acts[li].T @ delta
        grads[2 * li + 1] = delta.sum(axis=0)
        if li:
            delta = (delta @ params.weights[li].T) * (pre[li - 1] > 0.0)
    return loss, grads


def grad(params: NetworkParams, features, masks, targets) -> list:
    return loss_and_grad(params, features, masks, targets)[1]


def adam_step(params: NetworkParams, adam: AdamState, grads: list):
    """One bias-corrected Adam update; returns fresh params and optimizer state."""
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise ValueError("non-finite gradient")
    step = adam.step + 1
    b1, b2 = adam.beta1, adam.beta2
    corr1 = 1.0 - b1**step
    corr2 = 1.0 - b2**step
    new_arrays, new_m, new_v = [], [], []
    for a, g, m, v in zip(params.arrays(), grads, adam.m, adam.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / corr1
        v_hat = v / corr2
        new_arrays.append((a - adam.lr * m_hat / (np.sqrt(v_hat) + adam.eps)).astype(a.dtype))
        new_m.append(m.astype(a.dtype))
        new_v.append(v.astype(a.dtype))
    out = NetworkParams(params.config, new_arrays[0::2], new_arrays[1::2], params.version)
    return out, AdamState(new_m, new_v, step, adam.lr, b1, b2, adam.eps)
