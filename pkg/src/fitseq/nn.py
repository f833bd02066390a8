"""Recurrent network kernels: LSTM cell, bidirectional wrapper, dropout,
softmax cross-entropy, and full backpropagation through time.

Everything is plain float64 numpy. Gate order inside the stacked weight
matrices is (input i, forget f, cell g, output o); each gate occupies one
contiguous block of ``units`` rows.

The cell recurrence, with sigmoid gates and tanh nonlinearities:

    z = W x_t + R h_{t-1} + b
    i = sig(z_i)   f = sig(z_f)   g = tanh(z_g)   o = sig(z_o)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

Initial state is zero. A reversed pass processes t = T..1 and returns its
outputs re-aligned to forward time order, so element t of either direction's
output refers to the same input frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# --- parameters ---------------------------------------------------------------

@dataclass(eq=False)
class LstmParams:
    """Stacked gate weights for one direction of one recurrent layer."""

    W: np.ndarray   # (4U, D) input weights
    R: np.ndarray   # (4U, U) recurrent weights
    b: np.ndarray   # (4U,)

    def __post_init__(self):
        U = self.R.shape[1]
        if self.W.shape[0] != 4 * U or self.R.shape != (4 * U, U) or self.b.shape != (4 * U,):
            raise ShapeMismatch(
                f"inconsistent LSTM shapes W{self.W.shape} R{self.R.shape} b{self.b.shape}"
            )

    @property
    def units(self) -> int:
        return self.R.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))


def init_lstm_params(units: int, input_dim: int, rng: np.random.Generator) -> LstmParams:
    """Glorot-uniform input weights, orthogonal recurrent weights per gate,
    zero biases except the forget gate's, which starts at 1."""
    limit = np.sqrt(6.0 / (input_dim + units))
    W = rng.uniform(-limit, limit, size=(4 * units, input_dim))
    R = np.concatenate([_orthogonal(rng, units) for _ in range(4)], axis=0)
    b = np.zeros(4 * units)
    b[units : 2 * units] = 1.0
    return LstmParams(W, R, b)


# --- LSTM forward / backward ----------------------------------------------------

@dataclass(eq=False)
class LstmCache:
    x: np.ndarray        # (N, T, D) inputs in processing order
    i: np.ndarray        # (N, T, U) gate activations, processing order
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray        # (N, T, U) cell states
    tanh_c: np.ndarray
    h: np.ndarray        # (N, T, U) hidden states
    reverse: bool


def _ensure_batched(inputs: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 2:
        return x[None], True
    if x.ndim == 3:
        return x, False
    raise ShapeMismatch(f"inputs must be (T, D) or (N, T, D), got {x.shape}")


def lstm_forward(
    params: LstmParams, inputs: np.ndarray, reverse: bool = False
) -> tuple[np.ndarray, LstmCache]:
    """Run the recurrence over a (T, D) sequence or an (N, T, D) batch.

    Returns hidden states aligned to forward time order regardless of
    direction, plus the cache needed for backpropagation.
    """
    x, squeeze = _ensure_batched(inputs)
    N, T, D = x.shape
    U = params.units
    if D != params.input_dim:
        raise ShapeMismatch(f"input dim {D} != layer input dim {params.input_dim}")

    xp = x[:, ::-1] if reverse else x
    gates_i = np.empty((N, T, U))
    gates_f = np.empty((N, T, U))
    gates_g = np.empty((N, T, U))
    gates_o = np.empty((N, T, U))
    cs = np.empty((N, T, U))
    tanh_cs = np.empty((N, T, U))
    hs = np.empty((N, T, U))

    Wt, Rt = params.W.T, params.R.T
    h = np.zeros((N, U))
    c = np.zeros((N, U))
    for t in range(T):
        z = xp[:, t] @ Wt + h @ Rt + params.b
        i = sigmoid(z[:, :U])
        f = sigmoid(z[:, U : 2 * U])
        g = np.tanh(z[:, 2 * U : 3 * U])
        o = sigmoid(z[:, 3 * U :])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        gates_i[:, t], gates_f[:, t], gates_g[:, t], gates_o[:, t] = i, f, g, o
        cs[:, t], tanh_cs[:, t], hs[:, t] = c, tc, h

    cache = LstmCache(xp, gates_i, gates_f, gates_g, gates_o, cs, tanh_cs, hs, reverse)
    out = hs[:, ::-1] if reverse else hs
    return (out[0] if squeeze else out), cache


def lstm_backward(
    params: LstmParams, cache: LstmCache, dh_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """BPTT for one direction.

    ``dh_out`` is the loss gradient of the forward-time-aligned output
    sequence, shape (N, T, U). Returns (dx, dW, dR, db) with dx in forward
    time order.
    """
    N, T, U = cache.h.shape
    dh_seq = np.ascontiguousarray(dh_out[:, ::-1] if cache.reverse else dh_out, dtype=np.float64)

    dW = np.zeros_like(params.W)
    dR = np.zeros_like(params.R)
    db = np.zeros_like(params.b)
    dx = np.empty_like(cache.x)
    dh_rec = np.zeros((N, U))
    dc = np.zeros((N, U))
    dz = np.empty((N, 4 * U))

    for t in range(T - 1, -1, -1):
        i, f, g, o = cache.i[:, t], cache.f[:, t], cache.g[:, t], cache.o[:, t]
        tc = cache.tanh_c[:, t]
        c_prev = cache.c[:, t - 1] if t > 0 else np.zeros((N, U))
        h_prev = cache.h[:, t - 1] if t > 0 else np.zeros((N, U))

        dh = dh_seq[:, t] + dh_rec
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev

        dz[:, :U] = di * i * (1.0 - i)
        dz[:, U : 2 * U] = df * f * (1.0 - f)
        dz[:, 2 * U : 3 * U] = dg * (1.0 - g * g)
        dz[:, 3 * U :] = do * o * (1.0 - o)

        dW += dz.T @ cache.x[:, t]
        dR += dz.T @ h_prev
        db += dz.sum(axis=0)
        dx[:, t] = dz @ params.W
        dh_rec = dz @ params.R
        dc = dc * f

    if cache.reverse:
        dx = dx[:, ::-1]
    return dx, dW, dR, db


def bilstm_forward(
    fwd: LstmParams, bwd: LstmParams, inputs: np.ndarray
) -> tuple[np.ndarray, tuple[LstmCache, LstmCache]]:
    """Per-timestep concatenation [forward_h_t ; backward_h_t], width 2U."""
    if fwd.units != bwd.units:
        raise ShapeMismatch(f"direction widths differ: {fwd.units} vs {bwd.units}")
    x, squeeze = _ensure_batched(inputs)
    hf, cache_f = lstm_forward(fwd, x, reverse=False)
    hb, cache_b = lstm_forward(bwd, x, reverse=True)
    out = np.concatenate([hf, hb], axis=-1)
    return (out[0] if squeeze else out), (cache_f, cache_b)


# --- network spec ----------------------------------------------------------------

@dataclass(frozen=True)
class LayerSpec:
    kind: str                        # "lstm" | "dropout" | "dense_softmax"
    units: int = 0
    rate: float = 0.0
    bidirectional: bool = False
    return_sequences: bool = False


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[LayerSpec, ...]
    window_len: int
    feature_dim: int

    def __post_init__(self):
        if not self.layers or self.layers[-1].kind != "dense_softmax":
            raise ValueError("network must end with exactly one dense_softmax layer")
        if any(l.kind == "dense_softmax" for l in self.layers[:-1]):
            raise ValueError("dense_softmax must be terminal")
        recurrent = [l for l in self.layers if l.kind == "lstm"]
        if not recurrent:
            raise ValueError("network needs at least one recurrent layer")
        if recurrent[-1].return_sequences:
            raise ValueError("last recurrent layer must not return sequences")

    @property
    def n_classes(self) -> int:
        return self.layers[-1].units

    def layer_widths(self) -> list[int]:
        """Input width of every layer plus the final output width."""
        widths = [self.feature_dim]
        for layer in self.layers:
            if layer.kind == "lstm":
                widths.append(layer.units * (2 if layer.bidirectional else 1))
            elif layer.kind == "dropout":
                widths.append(widths[-1])
            else:
                widths.append(layer.units)
        return widths

    def to_dict(self) -> dict:
        return {
            "window_len": self.window_len,
            "feature_dim": self.feature_dim,
            "layers": [vars(l) for l in self.layers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        layers = tuple(LayerSpec(**l) for l in d["layers"])
        return cls(layers, int(d["window_len"]), int(d["feature_dim"]))


def build_spec(
    arch: str,
    units: int,
    dropout_rate: float,
    window_len: int,
    feature_dim: int,
    n_classes: int,
    second_layer_bidirectional: bool = True,
) -> NetworkSpec:
    """Two recurrent layers with dropout after each, then a softmax head.

    ``arch`` is "lstm" or "bilstm". Both recurrent layers share ``units``;
    for the bidirectional variant the second layer can optionally be made
    unidirectional.
    """
    if arch not in ("lstm", "bilstm"):
        raise ValueError(f"unknown architecture {arch!r}")
    bi1 = arch == "bilstm"
    bi2 = bi1 and second_layer_bidirectional
    layers = (
        LayerSpec("lstm", units=units, bidirectional=bi1, return_sequences=True),
        LayerSpec("dropout", rate=dropout_rate),
        LayerSpec("lstm", units=units, bidirectional=bi2, return_sequences=False),
        LayerSpec("dropout", rate=dropout_rate),
        LayerSpec("dense_softmax", units=n_classes),
    )
    return NetworkSpec(layers, window_len, feature_dim)


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Flat name->array parameter store; names encode layer index/direction."""
    params: dict[str, np.ndarray] = {}
    width = spec.feature_dim
    for idx, layer in enumerate(spec.layers):
        if layer.kind == "lstm":
            fwd = init_lstm_params(layer.units, width, rng)
            params[f"L{idx}.fwd.W"] = fwd.W
            params[f"L{idx}.fwd.R"] = fwd.R
            params[f"L{idx}.fwd.b"] = fwd.b
            if layer.bidirectional:
                bwd = init_lstm_params(layer.units, width, rng)
                params[f"L{idx}.bwd.W"] = bwd.W
                params[f"L{idx}.bwd.R"] = bwd.R
                params[f"L{idx}.bwd.b"] = bwd.b
            width = layer.units * (2 if layer.bidirectional else 1)
        elif layer.kind == "dense_softmax":
            limit = np.sqrt(6.0 / (width + layer.units))
            params["dense.W"] = rng.uniform(-limit, limit, size=(layer.units, width))
            params["dense.b"] = np.zeros(layer.units)
    return params


def _layer_lstm_params(params: dict, idx: int, direction: str) -> LstmParams:
    return LstmParams(
        params[f"L{idx}.{direction}.W"],
        params[f"L{idx}.{direction}.R"],
        params[f"L{idx}.{direction}.b"],
    )


# --- whole-network forward / backward ----------------------------------------------

def forward_network(
    spec: NetworkSpec,
    params: dict[str, np.ndarray],
    batch: np.ndarray,
    train_mode: bool = False,
    rng_seed: int = 0,
) -> tuple[np.ndarray, list]:
    """Class probabilities for an (N, T, D) batch, plus per-layer caches.

    Dropout is active only in train mode, with inverted scaling and masks
    drawn per timestep from a generator seeded by ``rng_seed`` (so a given
    seed fully determines the stochastic path).
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 3 or x.shape[1] != spec.window_len or x.shape[2] != spec.feature_dim:
        raise ShapeMismatch(
            f"batch shape {x.shape} does not match spec "
            f"(N, {spec.window_len}, {spec.feature_dim})"
        )
    rng = np.random.default_rng(rng_seed)
    caches: list = []
    act = x
    for idx, layer in enumerate(spec.layers):
        if layer.kind == "lstm":
            fwd = _layer_lstm_params(params, idx, "fwd")
            if layer.bidirectional:
                bwd = _layer_lstm_params(params, idx, "bwd")
                hf, cache_f = lstm_forward(fwd, act, reverse=False)
                hb, cache_b = lstm_forward(bwd, act, reverse=True)
                if layer.return_sequences:
                    act = np.concatenate([hf, hb], axis=-1)
                else:
                    # each direction contributes its own final state
                    act = np.concatenate([hf[:, -1], hb[:, 0]], axis=-1)
                caches.append(("lstm", cache_f, cache_b))
            else:
                h, cache = lstm_forward(fwd, act, reverse=False)
                act = h if layer.return_sequences else h[:, -1]
                caches.append(("lstm", cache, None))
        elif layer.kind == "dropout":
            if train_mode and layer.rate > 0.0:
                keep = 1.0 - layer.rate
                mask = (rng.random(act.shape) >= layer.rate) / keep
                act = act * mask
                caches.append(("dropout", mask))
            else:
                caches.append(("dropout", None))
        else:
            logits = act @ params["dense.W"].T + params["dense.b"]
            probs = softmax(logits)
            caches.append(("dense", act))
            act = probs
    return act, caches


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean categorical cross-entropy against one-hot targets."""
    if probs.shape != targets.shape:
        raise ShapeMismatch(f"probs {probs.shape} vs targets {targets.shape}")
    return float(-(targets * np.log(probs + 1e-12)).sum(axis=1).mean())


def loss_and_grads(
    spec: NetworkSpec,
    params: dict[str, np.ndarray],
    batch: np.ndarray,
    targets: np.ndarray,
    train_mode: bool = True,
    rng_seed: int = 0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy and its gradient for every parameter, via BPTT.

    The dropout masks are replayed from ``rng_seed``, so the loss is a
    deterministic, differentiable function of the parameters for a fixed
    seed (which is what the finite-difference checks rely on).
    """
    loss, grads, _probs = loss_grads_probs(spec, params, batch, targets, train_mode, rng_seed)
    return loss, grads


def loss_grads_probs(
    spec: NetworkSpec,
    params: dict[str, np.ndarray],
    batch: np.ndarray,
    targets: np.ndarray,
    train_mode: bool = True,
    rng_seed: int = 0,
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """As ``loss_and_grads`` but also hands back the forward probabilities."""
    probs, caches = forward_network(spec, params, batch, train_mode, rng_seed)
    y = np.asarray(targets, dtype=np.float64)
    loss = cross_entropy(probs, y)

    N = probs.shape[0]
    grads: dict[str, np.ndarray] = {}
    delta = (probs - y) / N    # gradient at the softmax input

    for idx in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[idx]
        kind = caches[idx][0]
        if kind == "dense":
            h_in = caches[idx][1]
            grads["dense.W"] = delta.T @ h_in
            grads["dense.b"] = delta.sum(axis=0)
            delta = delta @ params["dense.W"]
        elif kind == "dropout":
            mask = caches[idx][1]
            if mask is not None:
                delta = delta * mask
        else:
            _, cache_f, cache_b = caches[idx]
            T = cache_f.h.shape[1]
            U = layer.units
            if layer.return_sequences:
                d_fwd = delta[..., :U]
                d_bwd = delta[..., U:] if layer.bidirectional else None
            else:
                d_fwd = np.zeros_like(cache_f.h)
                d_fwd[:, -1] = delta[..., :U]
                if layer.bidirectional:
                    d_bwd = np.zeros_like(cache_b.h)
                    d_bwd[:, 0] = delta[..., U:]
                else:
                    d_bwd = None
            fwd = _layer_lstm_params(params, idx, "fwd")
            dx, dW, dR, db = lstm_backward(fwd, cache_f, np.ascontiguousarray(d_fwd))
            grads[f"L{idx}.fwd.W"] = dW
            grads[f"L{idx}.fwd.R"] = dR
            grads[f"L{idx}.fwd.b"] = db
            delta_next = dx
            if layer.bidirectional:
                bwd = _layer_lstm_params(params, idx, "bwd")
                dxb, dWb, dRb, dbb = lstm_backward(bwd, cache_b, np.ascontiguousarray(d_bwd))
                grads[f"L{idx}.bwd.W"] = dWb
                grads[f"L{idx}.bwd.R"] = dRb
                grads[f"L{idx}.bwd.b"] = dbb
                delta_next = delta_next + dxb
            delta = delta_next
    return loss, grads, probs
