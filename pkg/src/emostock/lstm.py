"""Stacked LSTM classifier in numpy (float64 throughout).

Architecture: ``num_layers`` LSTM layers, inverted dropout on every layer's
output sequence, and a dense softmax head on the top layer's last hidden
state. Parameters live in a flat ``{name: ndarray}`` dict so the optimizer,
checkpointing and gradient checking can treat them uniformly.

Gate order inside a layer is input, forget, cell candidate, output.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from .dataset import MovementLabel, make_sequences
from .errors import NonFiniteInput, NonFiniteLoss, ShapeMismatch, StaleCache

GATES = ("i", "f", "g", "o")
CHECKPOINT_FORMAT = "emostock-lstm/1"


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int
    hidden_units: int = 128
    num_layers: int = 2
    dropout_rate: float = 0.2
    num_classes: int = 3
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    window: int = 1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        for name in ("input_dim", "hidden_units", "num_layers", "num_classes", "batch_size", "window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    def replace(self, **changes):
        return ModelConfig(**{**asdict(self), **changes})


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()}, 0)


@dataclass
class TrainedModel:
    config: ModelConfig
    params: dict
    loss_trace: list
    metadata: dict = field(default_factory=dict)


def param_names(num_layers):
    names = []
    for layer in range(num_layers):
        names += [f"l{layer}.W_{g}" for g in GATES] + [f"l{layer}.b_{g}" for g in GATES]
    return names + ["out.W", "out.b"]


def init_params(config, rng=None):
    """Uniform(+-1/sqrt(hidden)) weights, forget-gate bias 1, other biases 0."""
    rng = np.random.default_rng([config.seed, 0]) if rng is None else rng
    h = config.hidden_units
    bound = 1.0 / math.sqrt(h)
    params = {}
    for layer in range(config.num_layers):
        fan_in = (config.input_dim if layer == 0 else h) + h
        for g in GATES:
            params[f"l{layer}.W_{g}"] = rng.uniform(-bound, bound, size=(h, fan_in))
        for g in GATES:
            params[f"l{layer}.b_{g}"] = np.ones(h) if g == "f" else np.zeros(h)
    params["out.W"] = rng.uniform(-bound, bound, size=(config.num_classes, h))
    params["out.b"] = np.zeros(config.num_classes)
    return params


def num_layers_of(params):
    return sum(1 for k in params if k.endswith(".W_i"))


def _layer_weights(params, layer):
    W = np.concatenate([params[f"l{layer}.W_{g}"] for g in GATES], axis=0)
    b = np.concatenate([params[f"l{layer}.b_{g}"] for g in GATES])
    return W, b


def dropout_masks(rng, batch, window, hidden, num_layers, rate):
    if rate == 0.0:
        return [np.ones((batch, window, hidden)) for _ in range(num_layers)]
    return [(rng.random((batch, window, hidden)) >= rate) / (1.0 - rate) for _ in range(num_layers)]


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def forward(params, X, mode="eval", rng=None, dropout_rate=0.0, masks=None):
    """Class probabilities for a batch of sequences ``X`` of shape (batch, window, features).

    In ``"train"`` mode, dropout masks are drawn from ``rng`` unless given
    explicitly via ``masks`` (one (batch, window, hidden) array per layer,
    already scaled by 1/(1-p)). Returns ``(probs, cache)``.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 3:
        raise ShapeMismatch(f"expected (batch, window, features), got shape {X.shape}")
    n_layers = num_layers_of(params)
    hidden = params["l0.W_i"].shape[0]
    in_dim = params["l0.W_i"].shape[1] - hidden
    if X.shape[2] != in_dim:
        raise ShapeMismatch(f"model expects {in_dim} features, batch has {X.shape[2]}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("input batch contains NaN or inf")
    B, T, _ = X.shape

    if mode == "train" and masks is None:
        if dropout_rate > 0 and rng is None:
            raise ValueError("train mode with dropout needs an rng")
        masks = dropout_masks(rng, B, T, hidden, n_layers, dropout_rate)
    elif mode == "eval":
        masks = None

    layers = []
    inputs = X
    for layer in range(n_layers):
        W, b = _layer_weights(params, layer)
        h_prev = np.zeros((B, hidden))
        c_prev = np.zeros((B, hidden))
        zs, gates, cs, tcs = [], [], [], []
        H = np.empty((B, T, hidden))
        for t in range(T):
            z = np.concatenate([inputs[:, t, :], h_prev], axis=1)
            a = z @ W.T + b
            i = expit(a[:, :hidden])
            f = expit(a[:, hidden:2 * hidden])
            g = np.tanh(a[:, 2 * hidden:3 * hidden])
            o = expit(a[:, 3 * hidden:])
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h_prev = o * tc
            zs.append(z)
            gates.append((i, f, g, o))
            cs.append(c)
            tcs.append(tc)
            H[:, t, :] = h_prev
            c_prev = c
        out = H * masks[layer] if masks is not None else H
        layers.append({"W": W, "z": zs, "gates": gates, "c": cs, "tc": tcs, "in_dim": inputs.shape[2]})
        inputs = out

    last = inputs[:, -1, :]
    logits = last @ params["out.W"].T + params["out.b"]
    logp = _log_softmax(logits)
    probs = np.exp(logp)
    cache = {"mode": mode, "params": params, "layers": layers, "masks": masks, "last": last,
             "logp": logp, "probs": probs, "shape": X.shape}
    return probs, cache


def cross_entropy(probs_or_logp, y, from_logp=False):
    y = np.asarray(y)
    logp = probs_or_logp if from_logp else np.log(probs_or_logp)
    return float(-logp[np.arange(len(y)), y].mean())


def backward(cache, y):
    """Gradients of the mean cross-entropy over the batch for every parameter."""
    if cache.get("mode") != "train":
        raise StaleCache("backward needs the cache of a train-mode forward pass")
    params = cache["params"]
    y = np.asarray(y, dtype=np.int64)
    B, T, _ = cache["shape"]
    if y.shape != (B,):
        raise ShapeMismatch(f"expected {B} labels, got shape {y.shape}")
    hidden = params["l0.W_i"].shape[0]
    grads = {}

    dlogits = cache["probs"].copy()
    dlogits[np.arange(B), y] -= 1.0
    dlogits /= B
    grads["out.W"] = dlogits.T @ cache["last"]
    grads["out.b"] = dlogits.sum(axis=0)

    d_out = np.zeros((B, T, hidden))
    d_out[:, -1, :] = dlogits @ params["out.W"]

    for layer in reversed(range(len(cache["layers"]))):
        lc = cache["layers"][layer]
        W = lc["W"]
        in_dim = lc["in_dim"]
        dH = d_out * cache["masks"][layer]
        dW = np.zeros_like(W)
        db = np.zeros(W.shape[0])
        d_in = np.zeros((B, T, in_dim))
        dh_next = np.zeros((B, hidden))
        dc_next = np.zeros((B, hidden))
        for t in reversed(range(T)):
            i, f, g, o = lc["gates"][t]
            tc = lc["tc"][t]
            c_prev = lc["c"][t - 1] if t > 0 else np.zeros((B, hidden))
            dh = dH[:, t, :] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            da = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g * g),
                do * o * (1.0 - o),
            ], axis=1)
            dW += da.T @ lc["z"][t]
            db += da.sum(axis=0)
            dz = da @ W
            d_in[:, t, :] = dz[:, :in_dim]
            dh_next = dz[:, in_dim:]
            dc_next = dc * f
        for k, gname in enumerate(GATES):
            grads[f"l{layer}.W_{gname}"] = dW[k * hidden:(k + 1) * hidden]
            grads[f"l{layer}.b_{gname}"] = db[k * hidden:(k + 1) * hidden]
        d_out = d_in
    return grads


def loss_and_grads(params, X, y, masks=None, rng=None, dropout_rate=0.0):
    probs, cache = forward(params, X, "train", rng=rng, dropout_rate=dropout_rate, masks=masks)
    return cross_entropy(cache["logp"], y, from_logp=True), backward(cache, y)


def numerical_gradients(params, X, y, masks=None, h=1e-5):
    """Central finite differences of the mean cross-entropy, one entry at a time."""
    def loss():
        _, cache = forward(params, X, "train", masks=masks, dropout_rate=0.0)
        return cross_entropy(cache["logp"], y, from_logp=True)

    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + h
            up = loss()
            flat[j] = old - h
            down = loss()
            flat[j] = old
            gflat[j] = (up - down) / (2 * h)
        grads[name] = g
    return grads


def max_relative_error(analytic, numeric):
    """Largest per-tensor relative error ``|a - n| / max(|a|, |n|)`` (Euclidean norms)."""
    worst = 0.0
    for name in analytic:
        a, n = analytic[name], numeric[name]
        scale = max(np.linalg.norm(a), np.linalg.norm(n))
        if scale == 0.0:
            continue
        worst = max(worst, float(np.linalg.norm(a - n) / scale))
    return worst


def _adam_update(params, grads, state, learning_rate, beta1, beta2, eps):
    """In-place Adam update of ``params`` and ``state``."""
    if set(grads) != set(params):
        raise ShapeMismatch(f"gradient keys {sorted(set(grads) ^ set(params))} do not match parameters")
    for k, p in params.items():
        if grads[k].shape != p.shape or state.m[k].shape != p.shape:
            raise ShapeMismatch(f"{k}: gradient {grads[k].shape} vs parameter {p.shape}")
    state.step += 1
    c1 = 1.0 - beta1**state.step
    c2 = 1.0 - beta2**state.step
    for k, p in params.items():
        g = grads[k]
        m, v = state.m[k], state.v[k]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + eps)


def adam_step(params, grads, state, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update. Returns new ``(params, state)``; inputs are left untouched."""
    new_params = {k: p.copy() for k, p in params.items()}
    new_state = AdamState({k: m.copy() for k, m in state.m.items()},
                          {k: v.copy() for k, v in state.v.items()}, state.step)
    _adam_update(new_params, grads, new_state, learning_rate, beta1, beta2, eps)
    return new_params, new_state


def fit(X, y, config, metadata=None):
    """Train on pre-built sequences ``X`` (n, window, features) with integer labels ``y``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 3 or X.shape[2] != config.input_dim or X.shape[1] != config.window:
        raise ShapeMismatch(f"sequences of shape {X.shape} do not fit config "
                            f"(window={config.window}, input_dim={config.input_dim})")
    if X.shape[0] == 0 or y.shape != (X.shape[0],):
        raise ShapeMismatch("need a non-empty batch with one label per sequence")
    params = init_params(config)
    rng = np.random.default_rng([config.seed, 1])
    state = AdamState.zeros_like(params)
    trace = []
    n = X.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = loss_and_grads(params, X[idx], y[idx], rng=rng, dropout_rate=config.dropout_rate)
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch, loss)
            _adam_update(params, grads, state, config.learning_rate, config.beta1, config.beta2, config.eps)
            total += loss * len(idx)
        trace.append(total / n)
    return TrainedModel(config, params, trace, dict(metadata or {}))


def train(split, config):
    """Fit on the training part of a :class:`SplitDataset`.

    Each training target at row ``i`` sees rows ``i-window+1 .. i``; the first
    ``window-1`` training rows only serve as history.
    """
    if config.input_dim != split.n_features:
        raise ShapeMismatch(f"config input_dim {config.input_dim} != dataset features {split.n_features}")
    seqs, idx = make_sequences(split.X_train, config.window)
    meta = {"scaler": split.scaler.to_dict()}
    return fit(seqs, split.y_train[idx], config, meta)


def eval_sequences(split, window):
    """Test sequences; history for the first test rows is taken from the end of the training rows."""
    X = np.concatenate([split.X_train, split.X_test])
    seqs, _ = make_sequences(X, window, start=len(split.X_train))
    return seqs


def labels_from_probabilities(probs):
    # np.argmax returns the first maximum, i.e. the lowest class index on ties
    return [MovementLabel(int(k)) for k in np.argmax(np.asarray(probs), axis=1)]


def predict_proba(model, X):
    probs, _ = forward(model.params, X, "eval")
    return probs


def predict(model, X):
    return labels_from_probabilities(predict_proba(model, X))


def save_checkpoint(model, path=None):
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(model.config),
        "loss_trace": [float(x) for x in model.loss_trace],
        "metadata": model.metadata,
        "tensors": {k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()} for k, v in model.params.items()},
    }
    data = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    if path is not None:
        with open(path, "wb") as fh:
            fh.write(data)
    return data


def load_checkpoint(source):
    if isinstance(source, (bytes, bytearray)):
        doc = json.loads(source)
    else:
        with open(source, "rb") as fh:
            doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not an emostock checkpoint (format={doc.get('format')!r})")
    params = {k: np.asarray(t["data"], dtype=float).reshape(t["shape"]) for k, t in doc["tensors"].items()}
    return TrainedModel(ModelConfig(**doc["config"]), params, doc["loss_trace"], doc.get("metadata", {}))
