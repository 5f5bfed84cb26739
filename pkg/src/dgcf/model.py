"""Deep graph collaborative filtering forward pass.

The model embeds all m+n nodes (users first, then items) and propagates
through L layers that mix each layer's neighborhood aggregate with the
initial embedding (initial residual) and blend the per-layer transform
with the identity matrix (identity mapping):

    E(0) = S W            (or E(0) = W in free-embedding mode)
    E(l) = act(((1-a) S E(l-1) + a E(0)) ((1-b) I + b W(l-1)))
    E*   = sum_k w_k E(k)
    score(u, i) = <E*[u], E*[m+i]>

Both mixing weights live in [0, 1]; the endpoints are reduction modes
(a=0, b=0 is plain propagation, a=1, b=0 freezes E(l) at E(0)) used by
baselines and diagnostics rather than trained configurations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DivergenceError
from .graph import spmm

ACTIVATIONS = ("identity", "relu")
EMBEDDING_MODES = ("sw", "free")


@dataclass
class Hyperparams:
    d: int = 64
    L: int = 4
    alpha: float = 0.1
    beta: float = 0.1
    layer_weights: np.ndarray | None = None  # length L+1; None = uniform
    activation: str = "relu"
    embedding_mode: str = "sw"
    reg_lambda: float = 1e-4
    lr: float = 1e-3

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.L < 0:
            raise ConfigError(f"L must be >= 0, got {self.L}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must be in [0, 1], got {self.beta}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.embedding_mode not in EMBEDDING_MODES:
            raise ConfigError(
                f"embedding_mode must be one of {EMBEDDING_MODES}, got {self.embedding_mode!r}")
        if self.reg_lambda < 0 or self.lr < 0:
            raise ConfigError("reg_lambda and lr must be >= 0")
        if self.layer_weights is None:
            self.layer_weights = np.full(self.L + 1, 1.0 / (self.L + 1))
        else:
            self.layer_weights = np.asarray(self.layer_weights, dtype=np.float64)
            if self.layer_weights.shape != (self.L + 1,):
                raise ConfigError(
                    f"layer_weights must have length L+1={self.L + 1}, "
                    f"got shape {self.layer_weights.shape}")


@dataclass
class ModelParams:
    """Everything trainable: base weights W and per-layer transforms W(l)."""

    m: int
    n: int
    W: np.ndarray  # (m+n, d)
    W_layers: list[np.ndarray]  # L matrices, each (d, d)

    def copy(self) -> "ModelParams":
        return ModelParams(self.m, self.n, self.W.copy(), [w.copy() for w in self.W_layers])


@dataclass
class ForwardTrace:
    """All intermediates of one forward pass, kept for backprop and diagnostics.

    mixed_layers holds the pre-transform mixes M(l) = (1-a) S E(l-1) + a E(0);
    preact_layers holds Z(l) = M(l) ((1-b) I + b W(l-1)), so E(l) = act(Z(l)).
    """

    m: int
    E_layers: list[np.ndarray]  # E(0)..E(L)
    mixed_layers: list[np.ndarray]  # M(1)..M(L)
    preact_layers: list[np.ndarray]  # Z(1)..Z(L)
    E_star: np.ndarray = field(repr=False, default=None)


def init_params(m: int, n: int, hyper: Hyperparams, rng: np.random.Generator) -> ModelParams:
    """W ~ N(0, 0.1^2); W(l) = 0 so every transform starts at (1-b) I exactly."""
    W = rng.normal(0.0, 0.1, size=(m + n, hyper.d))
    W_layers = [np.zeros((hyper.d, hyper.d)) for _ in range(hyper.L)]
    return ModelParams(m=m, n=n, W=W, W_layers=W_layers)


def initial_embedding(S: sp.csr_array, W: np.ndarray) -> np.ndarray:
    # E(0) = S W
    return spmm(S, W)


def _mix(S, E_prev, E0, alpha: float) -> np.ndarray:
    # M = (1-a) S E_prev + a E0; endpoints skip work and stay exact
    if alpha == 1.0:
        return E0
    P = spmm(S, E_prev)
    if alpha == 0.0:
        return P
    return (1.0 - alpha) * P + alpha * E0


def _transform(M: np.ndarray, beta: float, W_l: np.ndarray | None) -> np.ndarray:
    # Z = M ((1-b) I + b W)
    if beta == 0.0:
        return M
    if W_l is None:
        raise ValueError("beta > 0 requires a layer transform matrix")
    d = M.shape[1]
    T = (1.0 - beta) * np.eye(d)
    T += beta * W_l
    return M @ T


def _activate(Z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "identity":
        return Z
    if activation == "relu":
        return np.maximum(Z, 0.0)
    raise ConfigError(f"unknown activation {activation!r}")


def propagate_layer(E_prev, E0, S, alpha, beta, W_l, activation) -> tuple[np.ndarray, np.ndarray]:
    """One propagation layer; returns (Z, E_next) with E_next = act(Z)."""
    if E_prev.shape != E0.shape:
        raise ValueError(f"E_prev {E_prev.shape} and E0 {E0.shape} disagree")
    if S.shape[0] != E_prev.shape[0]:
        raise ValueError(f"S {S.shape} does not match embeddings {E_prev.shape}")
    Z = _transform(_mix(S, E_prev, E0, alpha), beta, W_l)
    if not np.isfinite(Z).all():
        raise DivergenceError("non-finite values in propagation layer output")
    return Z, _activate(Z, activation)


def forward(params: ModelParams, S: sp.csr_array, hyper: Hyperparams) -> ForwardTrace:
    """Full forward pass: E(0), L propagation layers, layer combination."""
    N = params.m + params.n
    if S.shape != (N, N):
        raise ValueError(f"S {S.shape} does not match m+n={N}")
    if params.W.shape != (N, hyper.d):
        raise ValueError(f"W {params.W.shape}, expected {(N, hyper.d)}")
    if len(params.W_layers) != hyper.L:
        raise ValueError(f"expected {hyper.L} layer transforms, got {len(params.W_layers)}")
    if hyper.embedding_mode == "sw":
        E0 = initial_embedding(S, params.W)
    else:
        E0 = params.W
    E_layers = [E0]
    mixed, preact = [], []
    for l in range(1, hyper.L + 1):
        M = _mix(S, E_layers[-1], E0, hyper.alpha)
        Z = _transform(M, hyper.beta, params.W_layers[l - 1])
        if not np.isfinite(Z).all():
            raise DivergenceError(f"non-finite values at layer {l}")
        mixed.append(M)
        preact.append(Z)
        E_layers.append(_activate(Z, hyper.activation))
    trace = ForwardTrace(m=params.m, E_layers=E_layers, mixed_layers=mixed, preact_layers=preact)
    trace.E_star = combine_layers(E_layers, hyper.layer_weights)
    return trace


def combine_layers(E_layers: list[np.ndarray], layer_weights) -> np.ndarray:
    # E* = sum_k w_k E(k), accumulated in layer order for reproducibility
    w = np.asarray(layer_weights, dtype=np.float64)
    if len(E_layers) != len(w):
        raise ValueError(f"{len(E_layers)} layers but {len(w)} weights")
    E_star = w[0] * E_layers[0]
    for k in range(1, len(w)):
        E_star += w[k] * E_layers[k]
    return E_star


def predict(E_star: np.ndarray, m: int, u: int, i: int) -> float:
    """Score of item i for user u: dot of user row u and item row m+i."""
    n = E_star.shape[0] - m
    if not 0 <= u < m:
        raise IndexError(f"user index {u} out of range [0, {m})")
    if not 0 <= i < n:
        raise IndexError(f"item index {i} out of range [0, {n})")
    return float(np.sum(E_star[u] * E_star[m + i]))


def score_all_items(E_star: np.ndarray, m: int, u: int) -> np.ndarray:
    """All n item scores for user u; row i agrees bit-for-bit with predict."""
    if not 0 <= u < m:
        raise IndexError(f"user index {u} out of range [0, {m})")
    return np.sum(E_star[m:] * E_star[u], axis=1)
