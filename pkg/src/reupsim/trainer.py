"""Gradient training of re-uploading models on labeled state datasets.

Forward passes batch the whole dataset through per-layer transfer tensors,
so one epoch costs a handful of einsums instead of a density-matrix
simulation per sample.  Restricted-coupling angles are differentiated with
the two-point shift rule, Hermitian generator coefficients with central
finite differences, and the linear readout analytically; updates are Adam.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import HermitianGenerator
from .channel import (
    CouplingSpec,
    LayerSpec,
    ReuploadModel,
    layer_transfer_tensor,
    model_from_json,
    model_to_json,
    run_model,
)
from .states import pauli_coeffs

HISTOGRAM_BINS = 30
# meta scalar used for prediction histograms, first match wins
META_KEYS = ("purity", "entropy", "r3", "lambda")
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    """Knobs for train / evaluate.

    loss "mse" regresses f onto the labels; "logistic" classifies with the
    surrogate sigmoid(logistic_scale * (f - classification_threshold)).
    shots = 0 evaluates expectations exactly; a positive count samples the
    three readout axes with shots // 3 repetitions each.  Gradients always
    use exact expectations; shot noise only enters reported losses and
    metrics.  freeze_layers trains the readout (w, b) alone, which makes
    the mse problem convex.
    """

    loss: str = "mse"
    learning_rate: float = 0.05
    max_epochs: int = 300
    batch_size: int = 0
    seed: int = 0
    shots: int = 0
    fd_step: float = 1e-6
    classification_threshold: float = 0.5
    logistic_scale: float = 10.0
    freeze_layers: bool = False

    def __post_init__(self):
        if self.loss not in ("mse", "logistic"):
            raise ValueError(f"loss must be 'mse' or 'logistic', got {self.loss!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.batch_size < 0:
            raise ValueError("batch_size must be 0 (full batch) or positive")
        if not 0 < self.fd_step <= 1e-2:
            raise ValueError("fd_step must lie in (0, 1e-2]")
        if self.shots != 0 and self.shots < 3:
            raise ValueError("shots must be 0 (exact) or at least 3")


@dataclass
class TrainReport:
    """loss_history has the loss before each epoch plus the final loss."""

    loss_history: list
    final_params: ReuploadModel
    test_accuracy: float
    histogram: list


def _initial_bloch(model: ReuploadModel) -> np.ndarray:
    if model.initial_signal == "plus":
        return np.array([1.0, 0.0, 0.0])
    return np.array([0.0, 0.0, 1.0])


def _lam_ext(dataset, n_qubits: int) -> np.ndarray:
    """Stacked (1, lam) rows for every uploaded state, shape (N, 4**n)."""
    out = np.ones((len(dataset), 4**n_qubits))
    for k, item in enumerate(dataset):
        if item.state.n_qubits != n_qubits:
            raise ValueError(
                f"dataset state {k} has {item.state.n_qubits} qubits, model expects {n_qubits}"
            )
        out[k, 1:] = pauli_coeffs(item.state).lam
    return out


def _labels(dataset) -> np.ndarray:
    return np.array([item.label for item in dataset], dtype=float)


def _layer_maps(layer: LayerSpec, n_qubits: int, lam_ext: np.ndarray):
    """Per-sample affine action (m, d) of one layer, shapes (N,3,3), (N,3)."""
    t = layer_transfer_tensor(layer, n_qubits)
    v = np.einsum("ija,na->nij", t, lam_ext)
    return v[:, :, 1:], v[:, :, 0]


def _forward(model: ReuploadModel, lam_ext: np.ndarray) -> np.ndarray:
    r = np.broadcast_to(_initial_bloch(model), (lam_ext.shape[0], 3))
    for layer in model.layers:
        m, d = _layer_maps(layer, model.n_qubits, lam_ext)
        r = np.einsum("nij,nj->ni", m, r) + d
    return r


def _readout(r: np.ndarray, w: np.ndarray, b: float, shots: int, rng) -> np.ndarray:
    if shots == 0:
        return r @ w + b
    per_axis = shots // 3
    p = np.clip((1.0 + r) / 2.0, 0.0, 1.0)
    est = 2.0 * rng.binomial(per_axis, p) / per_axis - 1.0
    return est @ w + b


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _loss_terms(f: np.ndarray, y: np.ndarray, config: TrainConfig):
    """Returns (loss, dloss/df)."""
    if config.loss == "mse":
        resid = f - y
        return float(np.mean(resid**2)), 2.0 * resid / f.size
    z = config.logistic_scale * (f - config.classification_threshold)
    p = _sigmoid(z)
    tiny = 1e-12
    loss = -float(np.mean(y * np.log(p + tiny) + (1.0 - y) * np.log(1.0 - p + tiny)))
    return loss, config.logistic_scale * (p - y) / f.size


# ---------------------------------------------------------------------------
# parameter vector layout

def _layer_param_count(layer: LayerSpec) -> int:
    if layer.coupling.variant == "General":
        return layer.coupling.generator.coeffs.size
    return 1


def pack_params(model: ReuploadModel) -> np.ndarray:
    """Flatten trainable parameters: per layer the angle (restricted) or
    the generator coefficients (General, angle held fixed), then w, then b.
    """
    parts = []
    for layer in model.layers:
        if layer.coupling.variant == "General":
            parts.append(np.asarray(layer.coupling.generator.coeffs, dtype=float))
        else:
            parts.append(np.array([layer.theta]))
    parts.append(np.asarray(model.readout_w, dtype=float))
    parts.append(np.array([model.readout_b]))
    return np.concatenate(parts)


def unpack_params(model: ReuploadModel, p: np.ndarray) -> ReuploadModel:
    """Rebuild a model from the flat vector, preserving coupling structure."""
    layers = []
    k = 0
    for layer in model.layers:
        if layer.coupling.variant == "General":
            size = layer.coupling.generator.coeffs.size
            gen = HermitianGenerator(layer.coupling.generator.n_qubits, p[k : k + size].copy())
            layers.append(LayerSpec(layer.theta, CouplingSpec.general(gen)))
            k += size
        else:
            layers.append(LayerSpec(float(p[k]), layer.coupling))
            k += 1
    w = np.array(p[k : k + 3])
    b = float(p[k + 3])
    if k + 4 != p.size:
        raise ValueError(f"parameter vector has {p.size} entries, expected {k + 4}")
    return ReuploadModel(model.n_qubits, layers, w, b, model.initial_signal)


# ---------------------------------------------------------------------------
# gradients

def gradient_param_shift(model: ReuploadModel, rho, layer_index: int) -> float:
    """df/dtheta of layer layer_index (counted from 1) via the shift rule.

    Valid because f depends on a restricted layer's angle only through
    cos theta and sin theta, so [f(+pi/2 shift) - f(-pi/2 shift)] / 2 is the
    exact derivative.  General couplings carry multi-parameter generators
    for which the two-point rule does not hold.
    """
    if not 1 <= layer_index <= len(model.layers):
        raise ValueError(f"layer_index {layer_index} outside 1..{len(model.layers)}")
    layer = model.layers[layer_index - 1]
    if layer.coupling.variant == "General":
        raise ValueError("shift rule applies to restricted couplings only; use gradient_fd")

    def value(theta: float) -> float:
        layers = list(model.layers)
        layers[layer_index - 1] = LayerSpec(theta, layer.coupling)
        shifted = ReuploadModel(
            model.n_qubits, layers, model.readout_w, model.readout_b, model.initial_signal
        )
        return run_model(shifted, rho)[1]

    return (value(layer.theta + np.pi / 2) - value(layer.theta - np.pi / 2)) / 2.0


def gradient_fd(model: ReuploadModel, batch, config: TrainConfig = None) -> np.ndarray:
    """Central-difference loss gradient over the full parameter vector.

    Ordering matches pack_params.  Shot sampling, when enabled, reuses one
    seed per evaluation so the differences stay deterministic.
    """
    config = config or TrainConfig()
    lam = _lam_ext(batch, model.n_qubits)
    y = _labels(batch)
    p0 = pack_params(model)
    h = config.fd_step

    def loss_at(p: np.ndarray) -> float:
        m = unpack_params(model, p)
        rng = np.random.default_rng(config.seed)
        f = _readout(_forward(m, lam), m.readout_w, m.readout_b, config.shots, rng)
        return _loss_terms(f, y, config)[0]

    g = np.zeros(p0.size)
    for k in range(p0.size):
        up = p0.copy()
        dn = p0.copy()
        up[k] += h
        dn[k] -= h
        g[k] = (loss_at(up) - loss_at(dn)) / (2.0 * h)
    return g


def _local_readout(layer, n_qubits, lam, r_prev, u_suffix):
    """w-projected output when only this layer's map is replaced.

    u_suffix is the readout vector pulled back through the downstream
    layers; constants shared by both shift evaluations cancel in the
    difference, so they are omitted here.
    """
    m, d = _layer_maps(layer, n_qubits, lam)
    out = np.einsum("nij,nj->ni", m, r_prev) + d
    return np.einsum("ni,ni->n", u_suffix, out)


def _perturbed_generator(layer: LayerSpec, k: int, h: float) -> LayerSpec:
    gen = layer.coupling.generator
    coeffs = np.asarray(gen.coeffs, dtype=float).copy()
    coeffs[k] += h
    return LayerSpec(layer.theta, CouplingSpec.general(HermitianGenerator(gen.n_qubits, coeffs)))


def _loss_gradient(model: ReuploadModel, lam, y, config: TrainConfig):
    """Exact-expectation loss gradient in pack_params order."""
    n = lam.shape[0]
    n_qubits = model.n_qubits
    maps = []
    r = np.broadcast_to(_initial_bloch(model), (n, 3))
    prefixes = [r]
    for layer in model.layers:
        m, d = _layer_maps(layer, n_qubits, lam)
        maps.append(m)
        r = np.einsum("nij,nj->ni", m, r) + d
        prefixes.append(r)
    f = r @ model.readout_w + model.readout_b
    loss, dldf = _loss_terms(f, y, config)

    # readout vector pulled back to just after each layer
    u = np.broadcast_to(model.readout_w, (n, 3))
    suffixes = [None] * len(model.layers)
    for li in range(len(model.layers) - 1, -1, -1):
        suffixes[li] = u
        u = np.einsum("nij,ni->nj", maps[li], u)

    grads = []
    for li, layer in enumerate(model.layers):
        if config.freeze_layers:
            grads.append(np.zeros(_layer_param_count(layer)))
            continue
        r_prev, u_suf = prefixes[li], suffixes[li]
        if layer.coupling.variant == "General":
            gen_size = layer.coupling.generator.coeffs.size
            gl = np.empty(gen_size)
            h = config.fd_step
            for k in range(gen_size):
                df = (
                    _local_readout(_perturbed_generator(layer, k, +h), n_qubits, lam, r_prev, u_suf)
                    - _local_readout(_perturbed_generator(layer, k, -h), n_qubits, lam, r_prev, u_suf)
                ) / (2.0 * h)
                gl[k] = dldf @ df
            grads.append(gl)
        else:
            up = LayerSpec(layer.theta + np.pi / 2, layer.coupling)
            dn = LayerSpec(layer.theta - np.pi / 2, layer.coupling)
            df = (
                _local_readout(up, n_qubits, lam, r_prev, u_suf)
                - _local_readout(dn, n_qubits, lam, r_prev, u_suf)
            ) / 2.0
            grads.append(np.array([dldf @ df]))
    grads.append(dldf @ prefixes[-1])
    grads.append(np.array([np.sum(dldf)]))
    return loss, np.concatenate(grads)


# ---------------------------------------------------------------------------
# training loop

def train(model: ReuploadModel, train_set, test_set, config: TrainConfig = None) -> TrainReport:
    """Adam training; returns history, the trained model, and test metrics.

    loss_history[k] is the (possibly shot-sampled) full-train loss after k
    epochs, so it has max_epochs + 1 entries.  batch_size 0 uses the whole
    training set per update; otherwise epochs shuffle into minibatches.
    """
    config = config or TrainConfig()
    if not train_set or not test_set:
        raise ValueError("train and test sets must be non-empty")
    work = model_from_json(model_to_json(model))
    lam = _lam_ext(train_set, work.n_qubits)
    y = _labels(train_set)
    rng = np.random.default_rng(config.seed)

    p = pack_params(work)
    m_adam = np.zeros(p.size)
    v_adam = np.zeros(p.size)
    steps = 0
    n = len(train_set)
    bs = config.batch_size if 0 < config.batch_size < n else n

    def recorded_loss(pvec: np.ndarray) -> float:
        current = unpack_params(work, pvec)
        f = _readout(_forward(current, lam), current.readout_w, current.readout_b,
                     config.shots, rng)
        return _loss_terms(f, y, config)[0]

    history = []
    for epoch in range(config.max_epochs):
        loss = recorded_loss(p)
        if not np.isfinite(loss):
            raise RuntimeError(f"training loss became non-finite at epoch {epoch}")
        history.append(loss)
        order = rng.permutation(n) if bs < n else np.arange(n)
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            _, g = _loss_gradient(unpack_params(work, p), lam[idx], y[idx], config)
            steps += 1
            m_adam = ADAM_BETA1 * m_adam + (1.0 - ADAM_BETA1) * g
            v_adam = ADAM_BETA2 * v_adam + (1.0 - ADAM_BETA2) * g * g
            m_hat = m_adam / (1.0 - ADAM_BETA1**steps)
            v_hat = v_adam / (1.0 - ADAM_BETA2**steps)
            p = p - config.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    final_loss = recorded_loss(p)
    if not np.isfinite(final_loss):
        raise RuntimeError("training loss became non-finite after the last epoch")
    history.append(final_loss)

    trained = unpack_params(work, p)
    metric, histogram = evaluate(trained, test_set, config)
    return TrainReport(history, trained, metric, histogram)


def evaluate(model: ReuploadModel, dataset, config: TrainConfig = None):
    """Metric plus a 30-bin prediction histogram over the meta scalar.

    Returns (accuracy, histogram) under logistic loss and (mse, histogram)
    under mse loss; predicted class is f >= classification_threshold either
    way.  Histogram rows are (bin_low, bin_high, count_class0, count_class1)
    over the first meta key among purity / entropy / r3 / lambda, or an
    empty list when none is present.
    """
    config = config or TrainConfig()
    if not dataset:
        raise ValueError("dataset must be non-empty")
    lam = _lam_ext(dataset, model.n_qubits)
    y = _labels(dataset)
    rng = np.random.default_rng(config.seed)
    f = _readout(_forward(model, lam), model.readout_w, model.readout_b, config.shots, rng)
    if config.loss == "mse":
        metric = float(np.mean((f - y) ** 2))
    else:
        pred = (f >= config.classification_threshold).astype(float)
        metric = float(np.mean(pred == y))
    return metric, prediction_histogram(dataset, f, config)


def prediction_histogram(dataset, f: np.ndarray, config: TrainConfig) -> list:
    key = next((k for k in META_KEYS if k in dataset[0].meta), None)
    if key is None:
        return []
    x = np.array([item.meta[key] for item in dataset], dtype=float)
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, HISTOGRAM_BINS + 1)
    pred = np.asarray(f) >= config.classification_threshold
    rows = []
    for k in range(HISTOGRAM_BINS):
        if k < HISTOGRAM_BINS - 1:
            in_bin = (x >= edges[k]) & (x < edges[k + 1])
        else:
            in_bin = (x >= edges[k]) & (x <= edges[k + 1])
        rows.append(
            (
                float(edges[k]),
                float(edges[k + 1]),
                int(np.sum(in_bin & ~pred)),
                int(np.sum(in_bin & pred)),
            )
        )
    return rows


def random_model(n_qubits: int, n_layers: int, seed: int = 0,
                 restricted: bool = False) -> ReuploadModel:
    """Fresh starting point: General couplings with small random generators
    (or CNOT layers with small random angles), w ~ N(0, 0.5), b = 0.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for _ in range(n_layers):
        if restricted:
            if n_qubits != 1:
                raise ValueError("restricted starting models use single-qubit CNOT couplings")
            layers.append(LayerSpec(rng.normal(scale=0.1), CouplingSpec.cnot()))
        else:
            gen = HermitianGenerator(
                n_qubits + 1, rng.normal(scale=0.1, size=4 ** (n_qubits + 1) - 1)
            )
            layers.append(LayerSpec(0.0, CouplingSpec.general(gen)))
    return ReuploadModel(n_qubits, layers, rng.normal(scale=0.5, size=3), 0.0)


# ---------------------------------------------------------------------------
# serialization

def report_to_json(report: TrainReport) -> str:
    rec = {
        "loss_history": [float(x) for x in report.loss_history],
        "final_params": json.loads(model_to_json(report.final_params)),
        "test_accuracy": float(report.test_accuracy),
        "histogram": [list(row) for row in report.histogram],
    }
    return json.dumps(rec)


def histogram_to_csv(histogram) -> str:
    lines = ["bin_low,bin_high,count_class0,count_class1"]
    for lo, hi, c0, c1 in histogram:
        lines.append(f"{lo!r},{hi!r},{c0},{c1}")
    return "\n".join(lines) + "\n"
