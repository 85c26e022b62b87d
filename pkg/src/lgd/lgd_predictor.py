"""
The state-change predictor.

Feature windows are h consecutive rows of [context (12) | configuration (D)], all
scaled to [-1, 1], and the target is the scaled state unit of the step after the
window.  A single LSTM layer followed by a linear head is trained on the mean
squared error with Adam.  Everything is numpy; gradients are computed with
backpropagation through time.

The deviation of a configuration on a segment is the L1 distance between the
predicted and the logged next state, in scaled units.
"""
import pathlib
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .lgd_exception import DimensionMismatchError, LgdValueError, LogFormatError, TrainingDivergedError
from .lgd_flightlog import CONTEXT_WIDTH, FlightLog, LogSet, Segment
from .lgd_logging import lgd_logger
from .lgd_paramspec import Configuration, ParameterTable, denormalize_array
from .lgd_settings import PredictorHyperparams
from .lgd_simkernel import STATE_COLUMNS
from .lgd_util import STREAM_EVALUATE, STREAM_TRAIN, StrOrPath, read_json, rng_stream, write_json
from .progress import LgdNoProgress, LgdProgress

MODEL_FORMAT_VERSION = 1
STATE_WIDTH = len(STATE_COLUMNS)
SOFT_BOUND = 1.5
HARD_BOUND = 10.0
MIN_TRAIN_WINDOWS = 100
CHUNK = 4096
PARAM_NAMES = ("Wx", "Wh", "b", "Wy", "by")


@dataclass(frozen=True, eq=False)
class Normalizer:
    """
    Affine maps to [-1, 1].  Context columns use the min/max of the training flights,
    configuration columns use the parameter table bounds.
    """
    ctx_center: np.ndarray
    ctx_half: np.ndarray
    cfg_center: np.ndarray
    cfg_half: np.ndarray

    @classmethod
    def fit(cls, logset: LogSet, table: ParameterTable) -> "Normalizer":
        if logset.total_entries == 0:
            raise LgdValueError("cannot fit a normalizer on an empty LogSet")
        contexts = np.vstack([f.contexts for f in logset.flights if len(f)])
        lo, hi = contexts.min(axis=0), contexts.max(axis=0)
        half = (hi - lo) / 2.0
        half[half == 0.0] = 1.0
        return cls(ctx_center=(hi + lo) / 2.0, ctx_half=half,
                   cfg_center=(table.upper + table.lower) / 2.0, cfg_half=table.width / 2.0)

    @property
    def dim(self) -> int:
        return len(self.ctx_center) + len(self.cfg_center)

    @property
    def config_dim(self) -> int:
        return len(self.cfg_center)

    def contexts(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.ctx_center) / self.ctx_half

    def configs(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.cfg_center) / self.cfg_half

    def states(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.ctx_center[:STATE_WIDTH]) / self.ctx_half[:STATE_WIDTH]

    def states_inverse(self, scaled: np.ndarray) -> np.ndarray:
        return np.asarray(scaled) * self.ctx_half[:STATE_WIDTH] + self.ctx_center[:STATE_WIDTH]

    def check(self, scaled: np.ndarray, what: str) -> None:
        """Warn past the soft bound, raise past the hard bound."""
        if scaled.size == 0:
            return
        peak = float(np.max(np.abs(scaled)))
        if peak > HARD_BOUND:
            raise DimensionMismatchError(f"{what} normalized to |{peak:.3g}|, beyond the hard bound {HARD_BOUND}")
        if peak > SOFT_BOUND:
            lgd_logger.warning("%s normalized to |%.3g|, beyond the soft bound %s", what, peak, SOFT_BOUND)

    def to_dict(self) -> dict:
        return {"ctx_center": self.ctx_center.tolist(), "ctx_half": self.ctx_half.tolist(),
                "cfg_center": self.cfg_center.tolist(), "cfg_half": self.cfg_half.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Normalizer":
        return cls(**{k: np.array(data[k], dtype=float) for k in ("ctx_center", "ctx_half", "cfg_center", "cfg_half")})


@dataclass(frozen=True, eq=False)
class FeatureWindow:
    rows: np.ndarray
    target: np.ndarray


@dataclass(eq=False)
class WindowDataset:
    """Stacked feature windows: inputs (N, h, 12 + D), targets (N, 6)."""
    inputs: np.ndarray
    targets: np.ndarray
    flight_ids: np.ndarray
    normalizer: Normalizer
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def h(self) -> int:
        return self.inputs.shape[1]

    def window(self, i: int) -> FeatureWindow:
        return FeatureWindow(rows=self.inputs[i], target=self.targets[i])


@dataclass(eq=False)
class SurrogateModel:
    params: dict[str, np.ndarray]
    h: int
    normalizer: Normalizer
    threshold: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def hidden_size(self) -> int:
        return self.params["Wh"].shape[0]

    @property
    def input_size(self) -> int:
        return self.params["Wx"].shape[0]

    def with_threshold(self, threshold: float) -> "SurrogateModel":
        return SurrogateModel(params=self.params, h=self.h, normalizer=self.normalizer,
                              threshold=float(threshold), metadata=dict(self.metadata))


@dataclass(frozen=True)
class ClassifierReport:
    accuracy: float
    precision: float
    recall: float
    dc: float
    di: float
    n: int


def _windows(scaled_contexts: np.ndarray, h: int) -> np.ndarray:
    """All (h+1)-long stride 1 windows of a (n, 12) array as (n - h, h + 1, 12)."""
    return sliding_window_view(scaled_contexts, h + 1, axis=0).transpose(0, 2, 1)


def _merge(contexts: np.ndarray, configs: np.ndarray) -> np.ndarray:
    """(N, h, 12) contexts and (N, D) configurations to (N, h, 12 + D) inputs."""
    block = np.broadcast_to(configs[:, None, :], (contexts.shape[0], contexts.shape[1], configs.shape[1]))
    return np.concatenate([contexts, block], axis=2)


def extract_features(logset: LogSet, table: ParameterTable, h: int,
                     normalizer: Normalizer | None = None,
                     max_windows: int | None = None, seed: int = 0) -> WindowDataset:
    """
    Stride 1 windows from every flight.  A flight of n entries gives n - h windows;
    flights shorter than h + 1 are skipped and counted.  The normalizer is fitted on
    `logset` unless one is passed.  With `max_windows`, a seeded subsample of the
    windows is kept.
    """
    if h < 1:
        raise LgdValueError(f"h must be at least 1, got {h}")
    if len(logset) == 0:
        raise LgdValueError("cannot extract features from an empty LogSet")
    normalizer = normalizer or Normalizer.fit(logset, table)

    usable = [f for f in logset.flights if len(f) >= h + 1]
    skipped = len(logset) - len(usable)
    if skipped:
        lgd_logger.warning("Skipped %d flights shorter than %d entries", skipped, h + 1)

    counts = np.array([len(f) - h for f in usable], dtype=int)
    total = int(counts.sum())
    keep = np.arange(total)
    if max_windows is not None and total > max_windows:
        keep = np.sort(rng_stream(seed, STREAM_TRAIN, 3).choice(total, size=max_windows, replace=False))
    offsets = np.concatenate([[0], np.cumsum(counts)])

    inputs, targets, ids = [], [], []
    for k, flight in enumerate(usable):
        lo, hi = np.searchsorted(keep, [offsets[k], offsets[k + 1]])
        if lo == hi:
            continue
        starts = keep[lo:hi] - offsets[k]
        scaled = normalizer.contexts(flight.contexts)
        normalizer.check(scaled, f"flight {flight.flight_id} contexts")
        windows = _windows(scaled, h)[starts]
        cfg = normalizer.configs(flight.config.array)
        inputs.append(_merge(windows[:, :h, :], np.tile(cfg, (len(starts), 1))))
        targets.append(windows[:, h, :STATE_WIDTH])
        ids.append(np.full(len(starts), flight.flight_id))

    width = CONTEXT_WIDTH + len(table)
    return WindowDataset(inputs=np.concatenate(inputs) if inputs else np.zeros((0, h, width)),
                         targets=np.concatenate(targets) if targets else np.zeros((0, STATE_WIDTH)),
                         flight_ids=np.concatenate(ids) if ids else np.zeros(0, dtype=int),
                         normalizer=normalizer, skipped=skipped)


def init_params(input_size: int, hidden_size: int, rng: np.random.Generator,
                target_mean: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """
    Uniform(-1/sqrt(H), 1/sqrt(H)) recurrent weights with the forget gate bias at 1.
    The head starts at zero weights and a bias equal to `target_mean`, so an
    untrained model predicts the mean target.
    """
    scale = 1.0 / np.sqrt(hidden_size)
    b = np.zeros(4 * hidden_size)
    b[hidden_size:2 * hidden_size] = 1.0
    return {
        "Wx": rng.uniform(-scale, scale, (input_size, 4 * hidden_size)),
        "Wh": rng.uniform(-scale, scale, (hidden_size, 4 * hidden_size)),
        "b": b,
        "Wy": np.zeros((hidden_size, STATE_WIDTH)),
        "by": np.zeros(STATE_WIDTH) if target_mean is None else np.array(target_mean, dtype=float),
    }


def _forward(params: dict[str, np.ndarray], inputs: np.ndarray) -> tuple[np.ndarray, list, np.ndarray]:
    Wx, Wh, b = params["Wx"], params["Wh"], params["b"]
    H = Wh.shape[0]
    n = inputs.shape[0]
    h_t = np.zeros((n, H))
    c_t = np.zeros((n, H))
    caches = []
    for t in range(inputs.shape[1]):
        x = inputs[:, t, :]
        z = x @ Wx + h_t @ Wh + b
        i = expit(z[:, :H])
        f = expit(z[:, H:2 * H])
        o = expit(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_next = f * c_t + i * g
        tanh_c = np.tanh(c_next)
        caches.append((x, h_t, c_t, i, f, o, g, tanh_c))
        h_t, c_t = o * tanh_c, c_next
    return h_t @ params["Wy"] + params["by"], caches, h_t


def loss_and_grads(params: dict[str, np.ndarray], inputs: np.ndarray,
                   targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error over all outputs and its gradient for every parameter array."""
    pred, caches, h_last = _forward(params, inputs)
    diff = pred - targets
    loss = float(np.mean(diff ** 2))
    dpred = 2.0 * diff / diff.size

    Wh = params["Wh"]
    grads = {name: np.zeros_like(params[name]) for name in PARAM_NAMES}
    grads["Wy"] = h_last.T @ dpred
    grads["by"] = dpred.sum(axis=0)
    dh = dpred @ params["Wy"].T
    dc = np.zeros_like(dh)
    for x, h_prev, c_prev, i, f, o, g, tanh_c in reversed(caches):
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c ** 2)
        di, df, dg = dc * g, dc * c_prev, dc * i
        dz = np.hstack([di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * (1.0 - g ** 2)])
        grads["Wx"] += x.T @ dz
        grads["Wh"] += h_prev.T @ dz
        grads["b"] += dz.sum(axis=0)
        dh = dz @ Wh.T
        dc = dc * f
    return loss, grads


def _predict_batch(params: dict[str, np.ndarray], inputs: np.ndarray) -> np.ndarray:
    out = [_forward(params, inputs[s:s + CHUNK])[0] for s in range(0, len(inputs), CHUNK)]
    return np.concatenate(out) if out else np.zeros((0, STATE_WIDTH))


def mse(params: dict[str, np.ndarray], inputs: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean((_predict_batch(params, inputs) - targets) ** 2))


class Adam:
    """Adaptive moment estimation over a dict of parameter arrays, updated in place."""

    def __init__(self, params: dict[str, np.ndarray], learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = learning_rate, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        lr_t = self.lr * np.sqrt(1.0 - self.beta2 ** self.t) / (1.0 - self.beta1 ** self.t)
        for name in PARAM_NAMES:
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grads[name]
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grads[name] ** 2
            params[name] -= lr_t * self.m[name] / (np.sqrt(self.v[name]) + self.eps)


def train(dataset: WindowDataset, hp: PredictorHyperparams, seed: int,
          progress: LgdProgress | None = None) -> SurrogateModel:
    """
    Fit the predictor.  A `validation_fraction` of the windows is held out; training
    stops after `hp.epochs` or `hp.patience` epochs without a validation improvement
    and the weights with the lowest validation loss are returned (the untrained
    weights included, so the result never ends worse than it started).

    Raises:
        TrainingDivergedError: a batch or validation loss is not finite.
    """
    progress = progress or LgdNoProgress()
    n = len(dataset)
    if n < MIN_TRAIN_WINDOWS:
        raise LgdValueError(f"training needs at least {MIN_TRAIN_WINDOWS} windows, got {n}")
    if dataset.h != hp.h:
        raise DimensionMismatchError(f"dataset windows have h={dataset.h}, hyperparameters say h={hp.h}")

    rng = rng_stream(seed, STREAM_TRAIN, 1)
    order = rng.permutation(n)
    n_val = max(1, int(round(n * hp.validation_fraction)))
    val_idx, train_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
    x_val, y_val = dataset.inputs[val_idx], dataset.targets[val_idx]

    params = init_params(dataset.inputs.shape[2], hp.hidden_size, rng,
                         target_mean=dataset.targets[train_idx].mean(axis=0))
    start_loss = best_loss = mse(params, x_val, y_val)
    best = {k: v.copy() for k, v in params.items()}
    adam = Adam(params, hp.learning_rate)
    curve: list[list[float]] = []
    stale = 0
    epoch = 0

    for epoch in range(1, hp.epochs + 1):
        perm = rng.permutation(train_idx)
        total = 0.0
        for s in range(0, len(perm), hp.batch_size):
            idx = perm[s:s + hp.batch_size]
            loss, grads = loss_and_grads(params, dataset.inputs[idx], dataset.targets[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            adam.step(params, grads)
            total += loss * len(idx)
        val_loss = mse(params, x_val, y_val)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(epoch)
        train_loss = total / len(perm)
        curve.append([epoch, train_loss, val_loss])
        progress.result_msg(epoch, hp.epochs, msg=f"epoch {epoch} train={train_loss:.6g}", result=val_loss)
        lgd_logger.debug("Epoch %d train %.6g validation %.6g", epoch, train_loss, val_loss)

        if val_loss < best_loss:
            best_loss = val_loss
            best = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= hp.patience:
                break

    lgd_logger.info("Trained predictor on %d windows: validation MSE %.6g -> %.6g in %d epochs",
                    n, start_loss, best_loss, epoch)
    return SurrogateModel(params=best, h=hp.h, normalizer=dataset.normalizer,
                          metadata={"epochs_run": epoch, "start_val_loss": start_loss,
                                    "final_val_loss": best_loss, "loss_curve": curve,
                                    "n_windows": n, "seed": int(seed)})


def _check_rows(model: SurrogateModel, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 2:
        rows = rows[None]
    if rows.ndim != 3 or rows.shape[1:] != (model.h, model.input_size):
        raise DimensionMismatchError(f"window shape {rows.shape[-2:]} does not match model "
                                     f"({model.h}, {model.input_size})")
    return rows


def predict(model: SurrogateModel, window: FeatureWindow | np.ndarray) -> np.ndarray:
    """Scaled next state (6 values) for one window, or (N, 6) for a stack of windows."""
    rows = window.rows if isinstance(window, FeatureWindow) else window
    single = np.ndim(rows) == 2
    pred = _predict_batch(model.params, _check_rows(model, rows))
    return pred[0] if single else pred


def _segment_contexts(model: SurrogateModel, segments: np.ndarray) -> np.ndarray:
    if segments.ndim != 3 or segments.shape[1:] != (model.h + 1, CONTEXT_WIDTH):
        raise DimensionMismatchError(f"segments of shape {segments.shape[1:]} do not fit h={model.h}")
    scaled = model.normalizer.contexts(segments)
    model.normalizer.check(scaled, "segment contexts")
    return scaled


def window_deviations(model: SurrogateModel, segments: np.ndarray, configs: np.ndarray) -> np.ndarray:
    """
    L1 deviations for N (segment, configuration) pairs.

    Args:
        segments: raw contexts, shape (N, h + 1, 12).
        configs: raw configuration values, shape (N, D).
    """
    configs = np.asarray(configs, dtype=float)
    if configs.ndim != 2 or configs.shape[1] != model.normalizer.config_dim:
        raise DimensionMismatchError(f"configurations of width {configs.shape[-1]}, model expects "
                                     f"{model.normalizer.config_dim}")
    scaled = _segment_contexts(model, np.asarray(segments, dtype=float))
    inputs = _merge(scaled[:, :model.h, :], model.normalizer.configs(configs))
    pred = _predict_batch(model.params, inputs)
    return np.abs(pred - scaled[:, model.h, :STATE_WIDTH]).sum(axis=1)


def deviation(model: SurrogateModel, segment: Segment, config: Configuration) -> float:
    """Predict the state after the first h contexts under `config`; L1 distance to the logged state."""
    if len(segment) != model.h + 1:
        raise DimensionMismatchError(f"segment length {len(segment)}, model needs {model.h + 1}")
    return float(window_deviations(model, segment.contexts[None], config.array[None])[0])


def segment_deviations(model: SurrogateModel, segment: Segment, unit_configs: np.ndarray,
                       table: ParameterTable) -> np.ndarray:
    """Deviation of many unit-box configurations on one segment."""
    unit_configs = np.atleast_2d(unit_configs)
    segments = np.broadcast_to(segment.contexts, (len(unit_configs), *segment.contexts.shape))
    return window_deviations(model, segments, denormalize_array(unit_configs, table))


def paired_deviations(model: SurrogateModel, pairs: Iterable[tuple[Segment, Configuration]]) -> np.ndarray:
    pairs = list(pairs)
    if not pairs:
        return np.zeros(0)
    out = []
    for s in range(0, len(pairs), CHUNK):
        chunk = pairs[s:s + CHUNK]
        out.append(window_deviations(model, np.stack([seg.contexts for seg, _ in chunk]),
                                     np.stack([cfg.array for _, cfg in chunk])))
    return np.concatenate(out)


def flight_deviations(model: SurrogateModel, flight: FlightLog, config: Configuration | None = None) -> np.ndarray:
    """Deviation of every stride 1 window of `flight` under `config` (default: the flight's own)."""
    config = config or flight.config
    if len(flight) < model.h + 1:
        return np.zeros(0)
    windows = _windows(flight.contexts, model.h)
    out = []
    for s in range(0, len(windows), CHUNK):
        chunk = np.ascontiguousarray(windows[s:s + CHUNK])
        out.append(window_deviations(model, chunk, np.tile(config.array, (len(chunk), 1))))
    return np.concatenate(out)


def stable_deviations(model: SurrogateModel, logset: LogSet) -> np.ndarray:
    """Deviations of all stride 1 windows of every flight, each under its own configuration."""
    parts = [flight_deviations(model, f) for f in logset.flights]
    return np.concatenate(parts) if parts else np.zeros(0)


def calibrate_threshold(model: SurrogateModel,
                        stable: LogSet | Iterable[tuple[Segment, Configuration]]) -> float:
    """
    Largest deviation over the stable data: every stride 1 window of a LogSet, or
    explicit (segment, own flight configuration) pairs.
    """
    if isinstance(stable, LogSet):
        deviations = stable_deviations(model, stable)
    else:
        deviations = paired_deviations(model, stable)
    if deviations.size == 0:
        raise LgdValueError("cannot calibrate a threshold on an empty stable dataset")
    return float(deviations.max())


def stable_pairs(logset: LogSet, segments: Iterable[Segment]) -> list[tuple[Segment, Configuration]]:
    """Pair each segment with the configuration of the flight it was cut from."""
    manifest = logset.config_manifest
    return [(seg, manifest[seg.flight_id]) for seg in segments]


def evaluate_classifier(model: SurrogateModel, segments: list[Segment],
                        labeled: list[tuple[Configuration, bool]], seed: int) -> ClassifierReport:
    """
    Score the threshold rule on labeled configurations (True means validated
    incorrect).  Each configuration is merged with one randomly drawn segment and
    called unstable when its deviation exceeds the model threshold.  `dc` and `di`
    are the mean deviations of the correct and incorrect configurations.
    """
    if not labeled:
        return ClassifierReport(accuracy=0.0, precision=0.0, recall=0.0, dc=0.0, di=0.0, n=0)
    if not segments:
        raise LgdValueError("evaluate_classifier needs at least one segment")
    rng = rng_stream(seed, STREAM_EVALUATE)
    picks = rng.integers(0, len(segments), size=len(labeled))
    dev = paired_deviations(model, [(segments[int(k)], cfg) for k, (cfg, _) in zip(picks, labeled)])
    truth = np.array([bad for _, bad in labeled], dtype=bool)
    flagged = dev > model.threshold

    tp = int(np.sum(flagged & truth))
    fp = int(np.sum(flagged & ~truth))
    fn = int(np.sum(~flagged & truth))
    return ClassifierReport(accuracy=float(np.mean(flagged == truth)),
                            precision=tp / (tp + fp) if tp + fp else 0.0,
                            recall=tp / (tp + fn) if tp + fn else 0.0,
                            dc=float(dev[~truth].mean()) if np.any(~truth) else 0.0,
                            di=float(dev[truth].mean()) if np.any(truth) else 0.0,
                            n=len(labeled))


def predict_series(model: SurrogateModel, flight: FlightLog, config: Configuration | None = None) -> pd.DataFrame:
    """
    Step by step prediction along one flight with stride 1 windows.  State columns
    are in physical units; `error` is the scaled L1 deviation of each step.
    """
    config = config or flight.config
    h = model.h
    columns = (["t"] + [f"truth_{c}" for c in STATE_COLUMNS] + [f"pred_{c}" for c in STATE_COLUMNS]
               + ["error"])
    if len(flight) < h + 1:
        return pd.DataFrame(columns=columns)
    windows = _windows(flight.contexts, h)
    cfgs = np.tile(config.array, (len(windows), 1))
    scaled = _segment_contexts(model, np.ascontiguousarray(windows))
    pred = _predict_batch(model.params, _merge(scaled[:, :h, :], model.normalizer.configs(cfgs)))
    error = np.abs(pred - scaled[:, h, :STATE_WIDTH]).sum(axis=1)

    frame = pd.DataFrame({"t": flight.times[h:]})
    truth = flight.contexts[h:, :STATE_WIDTH]
    physical = model.normalizer.states_inverse(pred)
    for i, c in enumerate(STATE_COLUMNS):
        frame[f"truth_{c}"] = truth[:, i]
    for i, c in enumerate(STATE_COLUMNS):
        frame[f"pred_{c}"] = physical[:, i]
    frame["error"] = error
    return frame


def save_model(model: SurrogateModel, path: StrOrPath) -> None:
    """
    Model file (`model.lgd`): a JSON document whose header fields are format_version,
    h, D and hidden_size, followed by the threshold, the normalizer and the weights.
    Floats are written with full precision so loading is exact.
    """
    write_json(path, {
        "format_version": MODEL_FORMAT_VERSION,
        "h": model.h,
        "D": model.normalizer.config_dim,
        "hidden_size": model.hidden_size,
        "threshold": model.threshold,
        "normalizer": model.normalizer.to_dict(),
        "weights": {name: model.params[name].tolist() for name in PARAM_NAMES},
        "metadata": model.metadata,
    })


def load_model(path: StrOrPath) -> SurrogateModel:
    path = pathlib.Path(path)
    try:
        data = read_json(path)
    except FileNotFoundError as error:
        raise LogFormatError(f"no model file at {path}") from error
    except ValueError as error:
        raise LogFormatError(f"corrupt model file {path}: {error}") from error
    if not isinstance(data, dict) or data.get("format_version") != MODEL_FORMAT_VERSION:
        raise LogFormatError(f"model file {path} is not format version {MODEL_FORMAT_VERSION}")

    params = {name: np.array(data["weights"][name], dtype=float) for name in PARAM_NAMES}
    normalizer = Normalizer.from_dict(data["normalizer"])
    hidden, d = data["hidden_size"], data["D"]
    if params["Wh"].shape != (hidden, 4 * hidden) or params["Wx"].shape != (CONTEXT_WIDTH + d, 4 * hidden) \
            or normalizer.config_dim != d:
        raise DimensionMismatchError(f"model file {path} weights do not match its header")
    return SurrogateModel(params=params, h=int(data["h"]), normalizer=normalizer,
                          threshold=float(data["threshold"]), metadata=data.get("metadata", {}))
