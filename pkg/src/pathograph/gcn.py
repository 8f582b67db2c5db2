"""Compact graph convolutional classifier with manual gradients.

Symmetric-normalized propagation, ReLU + inverted dropout between layers,
mean-pool readout, softmax cross-entropy, full-batch Adam with decoupled
weight decay.  Gradients are hand-derived and verified by finite differences.
"""

import json
import struct
import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NumericalFailure, ShapeMismatch
from .rng import substream


@dataclass
class GcnConfig:
    layers: int = 2
    hidden: int = 32
    dropout: float = 0.5
    learning_rate: float = 5e-3
    epochs: int = 200
    weight_decay: float = 3e-3
    seed: int = 0

    def __post_init__(self):
        if self.layers < 1:
            raise InvalidInput("need at least one graph-conv layer")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidInput("dropout must lie in [0, 1)")


def normalize_adjacency(a):
    """D^{-1/2} (A + I) D^{-1/2} with absolute-value degrees.

    Absolute degrees keep the normalization real-valued under signed
    correlation edges; the raw signed weights still propagate.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"adjacency must be square, got {a.shape}")
    if not np.allclose(a, a.T, atol=1e-9):
        raise InvalidInput("adjacency is not symmetric within 1e-9")
    a_hat = a + np.eye(a.shape[0])
    deg = np.abs(a_hat).sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return (inv_sqrt[:, None] * a_hat) * inv_sqrt[None, :]


class GcnModel:
    """Weights plus efficiency counters (params, bookkept bytes, epoch times)."""

    def __init__(self, config, in_features, n_classes):
        self.config = config
        self.in_features = int(in_features)
        self.n_classes = int(n_classes)
        self.params = {}
        rng = substream(config.seed, "init")
        fan_in = self.in_features
        for layer in range(config.layers):
            limit = np.sqrt(6.0 / (fan_in + config.hidden))
            self.params[f"W{layer}"] = rng.uniform(
                -limit, limit, size=(fan_in, config.hidden)
            )
            self.params[f"b{layer}"] = np.zeros(config.hidden)
            fan_in = config.hidden
        limit = np.sqrt(6.0 / (config.hidden + self.n_classes))
        self.params["Wout"] = rng.uniform(
            -limit, limit, size=(config.hidden, self.n_classes)
        )
        self.params["bout"] = np.zeros(self.n_classes)
        self.peak_feature_bytes = 0
        self.epoch_times = []
        self.history = []

    def param_keys(self):
        keys = []
        for layer in range(self.config.layers):
            keys += [f"W{layer}", f"b{layer}"]
        return keys + ["Wout", "bout"]

    def parameter_count(self):
        return int(sum(self.params[k].size for k in self.param_keys()))

    def parameter_bytes(self):
        return int(sum(self.params[k].nbytes for k in self.param_keys()))


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(model, features, adjacency, training=False, rng=None):
    """Class probabilities for a batch; returns (probs, cache)."""
    x = np.asarray(features, dtype=np.float64)
    a = np.asarray(adjacency, dtype=np.float64)
    if x.ndim == 2:
        x = x[None, ...]
    if a.ndim == 2:
        a = np.broadcast_to(a, (x.shape[0],) + a.shape)
    if x.shape[-1] != model.in_features or a.shape[-1] != x.shape[1]:
        raise ShapeMismatch(
            f"features {x.shape} / adjacency {a.shape} do not fit the model"
        )
    keep = 1.0 - model.config.dropout
    h = x
    cache = {"a": a, "layers": []}
    live_bytes = model.parameter_bytes() + x.nbytes + a.nbytes
    for layer in range(model.config.layers):
        ah = np.matmul(a, h)
        z = np.matmul(ah, model.params[f"W{layer}"]) + model.params[f"b{layer}"]
        h = np.maximum(z, 0.0)
        drop = None
        if training and model.config.dropout > 0.0:
            drop = (rng.random(h.shape) < keep).astype(np.float64) / keep
            h = h * drop
        cache["layers"].append({"ah": ah, "z": z, "drop": drop})
        live_bytes += ah.nbytes + z.nbytes + h.nbytes
    pooled = h.mean(axis=1)
    logits = pooled @ model.params["Wout"] + model.params["bout"]
    probs = _softmax(logits)
    cache["pooled"] = pooled
    live_bytes += pooled.nbytes + logits.nbytes + probs.nbytes
    model.peak_feature_bytes = max(model.peak_feature_bytes, int(live_bytes))
    return probs, cache


def cross_entropy(probs, labels):
    p = np.clip(probs[np.arange(labels.size), labels], 1e-300, None)
    return float(-np.mean(np.log(p)))


def backward(model, cache, probs, labels):
    """Analytic gradients of mean cross-entropy w.r.t. every parameter."""
    batch = labels.size
    n_nodes = cache["a"].shape[1]
    grads = {}
    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch
    grads["Wout"] = cache["pooled"].T @ dlogits
    grads["bout"] = dlogits.sum(axis=0)
    dpooled = dlogits @ model.params["Wout"].T
    dh = np.repeat(dpooled[:, None, :], n_nodes, axis=1) / n_nodes
    for layer in range(model.config.layers - 1, -1, -1):
        entry = cache["layers"][layer]
        if entry["drop"] is not None:
            dh = dh * entry["drop"]
        dz = dh * (entry["z"] > 0.0)
        grads[f"W{layer}"] = np.einsum("bnf,bnh->fh", entry["ah"], dz)
        grads[f"b{layer}"] = dz.sum(axis=(0, 1))
        if layer > 0:
            dz_w = np.matmul(dz, model.params[f"W{layer}"].T)
            dh = np.matmul(cache["a"].transpose(0, 2, 1), dz_w)
    return grads


def train(model, features, adjacency, labels, val=None):
    """Full-batch Adam training; returns the per-epoch loss history.

    When ``val=(features, adjacency, labels)`` is given, the weights of the
    epoch with the best validation accuracy are restored at the end.
    """
    cfg = model.config
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise InvalidInput("empty training batch")
    rng = substream(cfg.seed, "dropout")
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m_state = {k: np.zeros_like(model.params[k]) for k in model.param_keys()}
    v_state = {k: np.zeros_like(model.params[k]) for k in model.param_keys()}
    best_val, best_params = -1.0, None
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        probs, cache = forward(model, features, adjacency, training=True, rng=rng)
        loss = cross_entropy(probs, labels)
        if not np.isfinite(loss):
            raise NumericalFailure(f"NaN loss at epoch {epoch}")
        grads = backward(model, cache, probs, labels)
        t = epoch + 1
        for key in model.param_keys():
            g = grads[key]
            m_state[key] = beta1 * m_state[key] + (1 - beta1) * g
            v_state[key] = beta2 * v_state[key] + (1 - beta2) * g * g
            m_hat = m_state[key] / (1 - beta1**t)
            v_hat = v_state[key] / (1 - beta2**t)
            step = m_hat / (np.sqrt(v_hat) + eps)
            if key.startswith("W"):  # decoupled decay on weight matrices only
                step = step + cfg.weight_decay * model.params[key]
            model.params[key] = model.params[key] - cfg.learning_rate * step
        model.epoch_times.append(time.perf_counter() - t0)
        model.history.append(loss)
        if val is not None:
            v_probs, _ = forward(model, val[0], val[1], training=False)
            v_acc = float(np.mean(v_probs.argmax(axis=1) == val[2]))
            if v_acc > best_val:
                best_val = v_acc
                best_params = {k: p.copy() for k, p in model.params.items()}
    if best_params is not None:
        model.params = best_params
    return model.history


def predict(model, features, adjacency):
    probs, _ = forward(model, features, adjacency, training=False)
    return probs


def gradient_check(model, features, adjacency, labels, tolerance=1e-4, h=1e-5):
    """Central finite differences vs analytic gradients; dropout disabled."""
    labels = np.asarray(labels, dtype=np.int64)
    saved_dropout = model.config.dropout
    model.config.dropout = 0.0
    try:
        probs, cache = forward(model, features, adjacency, training=False)
        grads = backward(model, cache, probs, labels)
        max_rel = 0.0
        failures = []
        for key in model.param_keys():
            p = model.params[key]
            for idx in np.ndindex(p.shape):
                orig = p[idx]
                p[idx] = orig + h
                lp = cross_entropy(forward(model, features, adjacency)[0], labels)
                p[idx] = orig - h
                lm = cross_entropy(forward(model, features, adjacency)[0], labels)
                p[idx] = orig
                numeric = (lp - lm) / (2 * h)
                analytic = grads[key][idx]
                denom = max(abs(numeric), abs(analytic), 1e-8)
                rel = abs(numeric - analytic) / denom
                if rel > max_rel:
                    max_rel = rel
                if rel > tolerance:
                    failures.append((key, idx, rel))
        return max_rel, failures
    finally:
        model.config.dropout = saved_dropout


_MAGIC = b"PGCN"


def save_checkpoint(model, path):
    """JSON header + little-endian f64 payload; exact round-trip."""
    header = {
        "config": {
            "layers": model.config.layers,
            "hidden": model.config.hidden,
            "dropout": model.config.dropout,
            "learning_rate": model.config.learning_rate,
            "epochs": model.config.epochs,
            "weight_decay": model.config.weight_decay,
            "seed": model.config.seed,
        },
        "in_features": model.in_features,
        "n_classes": model.n_classes,
        "shapes": {k: list(model.params[k].shape) for k in model.param_keys()},
    }
    payload = b"".join(
        np.ascontiguousarray(model.params[k], dtype="<f8").tobytes()
        for k in model.param_keys()
    )
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(payload)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise InvalidInput(f"{path} is not a model checkpoint")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        payload = fh.read()
    model = GcnModel(
        GcnConfig(**header["config"]), header["in_features"], header["n_classes"]
    )
    offset = 0
    for key in model.param_keys():
        shape = tuple(header["shapes"][key])
        size = int(np.prod(shape)) * 8
        model.params[key] = np.frombuffer(
            payload[offset : offset + size], dtype="<f8"
        ).reshape(shape).copy()
        offset += size
    return model
