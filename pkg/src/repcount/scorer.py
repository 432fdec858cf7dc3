"""Per-frame pose saliency scoring.

Two scorers produce the per-frame score in [0, 1] (1 = close to salient
pose I, 0 = close to salient pose II):

* a small feedforward network trained with plain full-batch/minibatch
  gradient descent on binary cross-entropy over labeled salient poses, and
* a deterministic geometric ramp on a single joint angle, used as the
  trainable scorer's independent counterpart and as the default engine for
  synthetic pipelines.

Training is a pure function of (data, config): same seed, same weights.
"""

import re
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import (
    BadRule,
    EmptyDataset,
    MixedModes,
    ModeMismatch,
    NonFiniteLoss,
    ParseError,
    UnknownAction,
)
from .geometry import AngleSet, FeatureMode, FeatureVector
from .landmarks import JOINT_NAMES

DEFAULT_HIDDEN_SIZES = (64, 32)

CHECKPOINT_MAGIC = "repcount-scorer-v1"
_ACTION_NAME_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


@dataclass(slots=True)
class TrainConfig:
    """Gradient-descent settings; batch_size 0 means full batch."""

    epochs: int = 20
    learning_rate: float = 0.1
    batch_size: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 0:
            raise ValueError(f"batch_size must be >= 0, got {self.batch_size}")


@dataclass(frozen=True, slots=True)
class LabeledPose:
    """One salient-pose training example; label 1 = pose I, 0 = pose II."""

    features: FeatureVector
    action: str
    saliency_label: float

    def __post_init__(self):
        if self.saliency_label not in (0.0, 1.0):
            raise ValueError(f"saliency_label must be 0.0 or 1.0, got {self.saliency_label}")


@dataclass(slots=True)
class ScorerModel:
    """Feedforward scorer: relu hidden layers, one logistic output per action.

    `weights` is the flat parameter vector (per layer: W row-major, then b).
    `loss_history` is training metadata (mean BCE before each epoch plus the
    final value); it is not part of the checkpoint format.
    """

    mode: FeatureMode
    layer_sizes: tuple
    weights: np.ndarray
    action_names: tuple
    seed: int
    loss_history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        self.mode = FeatureMode.parse(self.mode)
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        self.action_names = tuple(self.action_names)
        if len(self.layer_sizes) < 2:
            raise ValueError("layer_sizes needs at least input and output")
        if self.layer_sizes[0] != self.mode.dim:
            raise ValueError(
                f"input layer size {self.layer_sizes[0]} != {self.mode.dim} "
                f"for mode {self.mode.value}"
            )
        if self.layer_sizes[-1] != len(self.action_names):
            raise ValueError("output layer width must equal the number of actions")
        if not self.action_names:
            raise ValueError("at least one action name required")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (n_weights(self.layer_sizes),):
            raise ValueError(
                f"weights length {self.weights.shape} != {n_weights(self.layer_sizes)}"
            )
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must all be finite")

    def action_index(self, action) -> int:
        try:
            return self.action_names.index(action)
        except ValueError:
            raise UnknownAction(
                f"action {action!r} not in {list(self.action_names)}"
            ) from None


def n_weights(layer_sizes) -> int:
    return sum(
        fan_in * fan_out + fan_out
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:])
    )


def _unpack(weights, layer_sizes):
    """Views (no copies) of the flat vector as per-layer (W, b) pairs."""
    layers = []
    pos = 0
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        w = weights[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = weights[pos : pos + fan_out]
        pos += fan_out
        layers.append((w, b))
    return layers


def init_model(mode, action_names, hidden_sizes=DEFAULT_HIDDEN_SIZES, seed=0) -> ScorerModel:
    """Fresh model with per-layer uniform(-r, r) weights, r = 1/sqrt(fan_in)."""
    mode = FeatureMode.parse(mode)
    action_names = tuple(action_names)
    sizes = (mode.dim, *tuple(int(h) for h in hidden_sizes), len(action_names))
    rng = np.random.default_rng(seed)
    chunks = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        r = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-r, r, size=fan_in * fan_out + fan_out))
    return ScorerModel(
        mode=mode,
        layer_sizes=sizes,
        weights=np.concatenate(chunks),
        action_names=action_names,
        seed=seed,
    )


def _forward_logits(weights, layer_sizes, X) -> np.ndarray:
    h = X
    layers = _unpack(weights, layer_sizes)
    for w, b in layers[:-1]:
        h = np.maximum(h @ w + b, 0.0)
    w, b = layers[-1]
    return h @ w + b


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def score_matrix(model: ScorerModel, X, action) -> np.ndarray:
    """Scores in [0, 1] for feature rows X under one action head."""
    idx = model.action_index(action)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.layer_sizes[0]:
        raise ModeMismatch(
            f"feature matrix width {X.shape} incompatible with input size "
            f"{model.layer_sizes[0]}"
        )
    logits = _forward_logits(model.weights, model.layer_sizes, X)
    return _sigmoid(logits[:, idx])


def score_frame(model: ScorerModel, features: FeatureVector, action) -> float:
    """Saliency score for one frame's features; strict about the mode."""
    if features.mode is not model.mode:
        raise ModeMismatch(
            f"features are {features.mode.value}, model expects {model.mode.value}"
        )
    return float(score_matrix(model, features.values[np.newaxis], action)[0])


def _loss_and_grad(weights, layer_sizes, X, y, action_idx):
    """Mean BCE over the batch and its gradient w.r.t. the flat weights.

    Each example contributes cross-entropy on its own action's output unit
    only; other heads receive no gradient from it.
    """
    n = X.shape[0]
    layers = _unpack(weights, layer_sizes)
    activations = [X]
    # runaway weights overflow to inf/nan here; train() detects the
    # non-finite loss and raises NonFiniteLoss, so keep numpy quiet
    with np.errstate(over="ignore", invalid="ignore"):
        h = X
        for w, b in layers[:-1]:
            h = np.maximum(h @ w + b, 0.0)
            activations.append(h)
        w, b = layers[-1]
        logits = h @ w + b

        rows = np.arange(n)
        z = logits[rows, action_idx]
        # softplus(z) - y*z, stable for large |z|
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))

        dlogits = np.zeros_like(logits)
        dlogits[rows, action_idx] = (_sigmoid(z) - y) / n

        grad = np.empty_like(weights)
        pos = len(weights)
        delta = dlogits
        for layer_i in range(len(layers) - 1, -1, -1):
            w, _ = layers[layer_i]
            a_prev = activations[layer_i]
            gw = a_prev.T @ delta
            gb = delta.sum(axis=0)
            pos -= gb.size
            grad[pos : pos + gb.size] = gb
            pos -= gw.size
            grad[pos : pos + gw.size] = gw.reshape(-1)
            if layer_i > 0:
                delta = (delta @ w.T) * (activations[layer_i] > 0.0)
    return loss, grad


def _dataset_arrays(data):
    """Validate a LabeledPose list and return (mode, actions, X, y, action_idx)."""
    if not data:
        raise EmptyDataset("no training examples")
    mode = data[0].features.mode
    if any(ex.features.mode is not mode for ex in data):
        raise MixedModes("training examples mix feature modes")
    actions = tuple(sorted({ex.action for ex in data}))
    for action in actions:
        labels = {ex.saliency_label for ex in data if ex.action == action}
        if labels != {0.0, 1.0}:
            raise EmptyDataset(
                f"action {action!r} needs at least one example of each label"
            )
    X = np.stack([ex.features.values for ex in data])
    y = np.array([ex.saliency_label for ex in data])
    action_idx = np.array([actions.index(ex.action) for ex in data])
    return mode, actions, X, y, action_idx


def train(data, config: TrainConfig, hidden_sizes=DEFAULT_HIDDEN_SIZES) -> ScorerModel:
    """Gradient-descent training; bit-reproducible from config.seed.

    The returned model's loss_history holds the mean BCE evaluated before
    each epoch plus the final value (epochs + 1 entries).
    """
    mode, actions, X, y, action_idx = _dataset_arrays(data)
    model = init_model(mode, actions, hidden_sizes=hidden_sizes, seed=config.seed)
    weights = model.weights
    n = X.shape[0]
    batch = n if config.batch_size in (0,) or config.batch_size >= n else config.batch_size
    rng = np.random.default_rng(config.seed)

    history = []
    for _ in range(config.epochs):
        loss, grad = _loss_and_grad(weights, model.layer_sizes, X, y, action_idx)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} after {len(history)} epochs")
        history.append(loss)
        if batch == n:
            weights -= config.learning_rate * grad
        else:
            order = rng.permutation(n)
            for start in range(0, n, batch):
                sel = order[start : start + batch]
                _, g = _loss_and_grad(weights, model.layer_sizes, X[sel], y[sel], action_idx[sel])
                weights -= config.learning_rate * g
    final_loss, _ = _loss_and_grad(weights, model.layer_sizes, X, y, action_idx)
    if not np.isfinite(final_loss):
        raise NonFiniteLoss(f"loss became {final_loss} after {config.epochs} epochs")
    history.append(final_loss)
    model.loss_history = tuple(history)
    return model


def gradient_check(model: ScorerModel, batch, epsilon=1e-5) -> float:
    """Max disagreement between analytic and central-difference gradients.

    Per weight the comparison is relative, |ga - gn| / max(|ga|, |gn|),
    falling back to the absolute difference when both magnitudes are below
    1e-8 (near-zero gradients). Reports; never raises on numeric trouble.
    """
    if not 0.0 < epsilon <= 1e-2:
        raise ValueError(f"epsilon must be in (0, 1e-2], got {epsilon}")
    if not batch:
        return 0.0
    _, actions, X, y, action_idx = _dataset_arrays_unchecked(batch)
    idx = np.array([model.action_index(a) for a in actions])[action_idx]
    _, analytic = _loss_and_grad(model.weights, model.layer_sizes, X, y, idx)
    weights = model.weights.copy()
    worst = 0.0
    for i in range(weights.size):
        orig = weights[i]
        weights[i] = orig + epsilon
        lo_hi, _ = _loss_and_grad(weights, model.layer_sizes, X, y, idx)
        weights[i] = orig - epsilon
        lo_lo, _ = _loss_and_grad(weights, model.layer_sizes, X, y, idx)
        weights[i] = orig
        numeric = (lo_hi - lo_lo) / (2.0 * epsilon)
        denom = max(abs(analytic[i]), abs(numeric))
        if denom < 1e-8:
            err = abs(analytic[i] - numeric)
        else:
            err = abs(analytic[i] - numeric) / denom
        worst = max(worst, err)
    return worst


def _dataset_arrays_unchecked(data):
    """Like _dataset_arrays but without the per-action label-coverage check."""
    mode = data[0].features.mode
    actions = tuple(sorted({ex.action for ex in data}))
    X = np.stack([ex.features.values for ex in data])
    y = np.array([ex.saliency_label for ex in data])
    action_idx = np.array([actions.index(ex.action) for ex in data])
    return mode, actions, X, y, action_idx


@dataclass(frozen=True, slots=True)
class GeometricRule:
    """Linear ramp on one joint angle between two calibration poses.

    angle_pose_i scores 1, angle_pose_ii scores 0; anything beyond the
    calibration points clamps.
    """

    joint: str
    angle_pose_i: float
    angle_pose_ii: float

    def __post_init__(self):
        if self.joint not in JOINT_NAMES:
            raise ValueError(f"joint must be one of {JOINT_NAMES}, got {self.joint!r}")
        if self.angle_pose_i == self.angle_pose_ii:
            raise BadRule("calibration angles must differ")


def geometric_score(angles: AngleSet, rule: GeometricRule) -> float:
    """clamp((theta - theta_II) / (theta_I - theta_II), 0, 1)."""
    theta = float(angles.as_array()[JOINT_NAMES.index(rule.joint)])
    raw = (theta - rule.angle_pose_ii) / (rule.angle_pose_i - rule.angle_pose_ii)
    return float(min(1.0, max(0.0, raw)))


def geometric_score_array(angle_rows, rule: GeometricRule) -> np.ndarray:
    """Vectorized ramp over (n, 5) angle rows in JOINT_NAMES order."""
    theta = np.asarray(angle_rows, dtype=np.float64)[:, JOINT_NAMES.index(rule.joint)]
    raw = (theta - rule.angle_pose_ii) / (rule.angle_pose_i - rule.angle_pose_ii)
    return np.clip(raw, 0.0, 1.0)


# Checkpoint format: a magic+header line, then one weight per line in fixed
# decimal-exponent notation that round-trips float64 bit-exactly:
#   repcount-scorer-v1 mode=<mode> layers=<d,...,k> actions=<a,b> seed=<int>
#   -1.23456789012345678e-01
#   ...

def checkpoint_bytes(model: ScorerModel) -> bytes:
    for name in model.action_names:
        if not _ACTION_NAME_RE.match(name):
            raise ValueError(f"action name {name!r} not checkpoint-safe")
    header = (
        f"{CHECKPOINT_MAGIC} mode={model.mode.value} "
        f"layers={','.join(str(s) for s in model.layer_sizes)} "
        f"actions={','.join(model.action_names)} seed={model.seed}"
    )
    lines = [header]
    lines.extend(format(w, ".17e") for w in model.weights)
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_checkpoint(data) -> ScorerModel:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(1, "empty checkpoint")
    head = lines[0].split(" ")
    if head[0] != CHECKPOINT_MAGIC:
        raise ParseError(1, f"bad magic {head[0]!r}, expected {CHECKPOINT_MAGIC!r}")
    fields = {}
    for token in head[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(1, f"malformed header token {token!r}")
        fields[key] = value
    missing = {"mode", "layers", "actions", "seed"} - fields.keys()
    if missing:
        raise ParseError(1, f"header missing {sorted(missing)}")
    try:
        mode = FeatureMode.parse(fields["mode"])
        layer_sizes = tuple(int(s) for s in fields["layers"].split(","))
        action_names = tuple(fields["actions"].split(","))
        seed = int(fields["seed"])
    except ValueError as exc:
        raise ParseError(1, str(exc)) from None
    expected = n_weights(layer_sizes)
    if len(lines) - 1 != expected:
        raise ParseError(
            len(lines), f"expected {expected} weight lines, found {len(lines) - 1}"
        )
    weights = np.empty(expected)
    for i, text in enumerate(lines[1:], start=2):
        try:
            weights[i - 2] = float(text)
        except ValueError:
            raise ParseError(i, f"bad weight literal {text!r}") from None
    try:
        return ScorerModel(
            mode=mode,
            layer_sizes=layer_sizes,
            weights=weights,
            action_names=action_names,
            seed=seed,
        )
    except ValueError as exc:
        raise ParseError(1, str(exc)) from None


def save_checkpoint(model: ScorerModel, path):
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(model))


def load_checkpoint(path) -> ScorerModel:
    with open(path, "rb") as fh:
        return parse_checkpoint(fh.read())


class SaliencyScorer(BaseEstimator):
    """sklearn-style wrapper around the trainable scorer for one action.

    fit(X, y) takes an (n, d) feature matrix (d matching `mode`) and binary
    labels; predict_proba/score_frames return the per-frame saliency.
    """

    def __init__(
        self,
        mode="avg5",
        hidden_layer_sizes=DEFAULT_HIDDEN_SIZES,
        epochs=20,
        learning_rate=0.1,
        batch_size=0,
        seed=0,
        action="action",
    ):
        self.mode = mode
        self.hidden_layer_sizes = hidden_layer_sizes
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed
        self.action = action

    def fit(self, X, y):
        mode = FeatureMode.parse(self.mode)
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        data = [
            LabeledPose(FeatureVector(mode, row), self.action, float(label))
            for row, label in zip(X, y)
        ]
        config = TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        self.model_ = train(data, config, hidden_sizes=tuple(self.hidden_layer_sizes))
        self.loss_history_ = self.model_.loss_history
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("SaliencyScorer is not fitted yet")

    def score_frames(self, X) -> np.ndarray:
        self._check_fitted()
        return score_matrix(self.model_, np.asarray(X, dtype=np.float64), self.action)

    def predict_proba(self, X) -> np.ndarray:
        p = self.score_frames(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.score_frames(X) >= 0.5).astype(int)
