"""Minibatch SGD with optional momentum and per-epoch learning-rate decay;
the alpha-mixed adversarial objective; the closed-form adversarial logistic
loss; L1 weight-decay and input-noise controls; rubbish-augmented training;
early stopping on clean or adversarial validation error; ensembles.

A training run is deterministic given (model_init, data, config): every
random choice flows from named substreams of the config seed.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .attacks import fgsm, random_sign_noise, uniform_noise
from .errors import ConfigError, TrainingDivergedError
from .models import (
    EnsembleModel,
    GradientBundle,
    LogisticModel,
    MaxoutModel,
    SoftmaxModel,
)
from .numerics import RngStream, sigmoid, sign, softplus

EARLY_STOPPING_MODES = ("none", "clean_validation", "adversarial_validation")


@dataclass
class AdversarialReg:
    """Mix the clean loss with the loss at the sign-gradient point:
    alpha * J(x) + (1 - alpha) * J(x + epsilon * sign(grad))."""

    alpha: float = 0.5
    epsilon: float = 0.25
    kind = "adversarial"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.epsilon >= 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "epsilon": self.epsilon}


@dataclass
class AnalyticAdvLogisticReg:
    """Train logistic regression directly on softplus(epsilon*||w||_1 - y a),
    the closed form of the loss at the sign-gradient point."""

    epsilon: float = 0.25
    kind = "analytic_adv_logistic"

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")

    def to_dict(self):
        return {"kind": self.kind, "epsilon": self.epsilon}


@dataclass
class L1WeightDecayReg:
    """Add coefficient * sum|first-layer weights| to the training cost."""

    coefficient: float = 0.0025
    kind = "l1_weight_decay"

    def __post_init__(self):
        if not self.coefficient >= 0:
            raise ConfigError(f"coefficient must be >= 0, got {self.coefficient}")

    def to_dict(self):
        return {"kind": self.kind, "coefficient": self.coefficient}


@dataclass
class NoiseReg:
    """Train on noised inputs: +/-epsilon per pixel or U(-epsilon, epsilon)."""

    noise_kind: str = "random_sign"
    epsilon: float = 0.25
    kind = "noise"

    def __post_init__(self):
        if self.noise_kind not in ("random_sign", "uniform"):
            raise ConfigError(f"noise kind must be random_sign or uniform, got {self.noise_kind!r}")
        if not self.epsilon >= 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")

    def to_dict(self):
        return {"kind": self.kind, "noise_kind": self.noise_kind, "epsilon": self.epsilon}


@dataclass
class RubbishAugmentedReg:
    """Mix standard-normal rubbish examples into every minibatch, trained
    toward the uniform distribution (softmax top) or all-absent (sigmoid
    top); fraction = rubbish examples per clean example."""

    fraction: float = 1.0
    kind = "rubbish_augmented"

    def __post_init__(self):
        if not self.fraction > 0:
            raise ConfigError(f"fraction must be > 0, got {self.fraction}")

    def to_dict(self):
        return {"kind": self.kind, "fraction": self.fraction}


_REG_KINDS = {
    "adversarial": AdversarialReg,
    "analytic_adv_logistic": AnalyticAdvLogisticReg,
    "l1_weight_decay": L1WeightDecayReg,
    "noise": NoiseReg,
    "rubbish_augmented": RubbishAugmentedReg,
}


def regularizer_from_dict(d: dict | None):
    if d is None:
        return None
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _REG_KINDS:
        raise ConfigError(f"unknown regularizer kind {kind!r}")
    return _REG_KINDS[kind](**d)


@dataclass
class TrainConfig:
    learning_rate: float
    batch_size: int = 100
    max_epochs: int = 50
    momentum: float = 0.0
    lr_decay: float = 1.0
    seed: int = 0
    early_stopping: str = "none"
    patience: int = 20
    regularizer: object | None = None
    # epsilon used for the adversarial validation error; defaults to the
    # adversarial regularizer's epsilon, else 0.25
    adv_eval_epsilon: float | None = None
    # train error is tracked on a fixed-size prefix of the training set to
    # keep per-epoch evaluation cheap
    eval_train_subsample: int = 10000
    # per-parameter multiplicative learning-rate factors, e.g. RBF widths
    # move on a much smaller scale than centers
    param_lr_scale: dict | None = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max epochs must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ConfigError(f"lr decay must be in (0, 1], got {self.lr_decay}")
        if self.early_stopping not in EARLY_STOPPING_MODES:
            raise ConfigError(
                f"early stopping must be one of {EARLY_STOPPING_MODES}, got {self.early_stopping!r}"
            )
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if isinstance(self.regularizer, dict):
            self.regularizer = regularizer_from_dict(self.regularizer)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["regularizer"] = (
            None if self.regularizer is None else self.regularizer.to_dict()
        )
        return d

    @property
    def resolved_adv_eval_epsilon(self) -> float:
        if self.adv_eval_epsilon is not None:
            return self.adv_eval_epsilon
        if isinstance(self.regularizer, AdversarialReg):
            return self.regularizer.epsilon
        if isinstance(self.regularizer, AnalyticAdvLogisticReg):
            return self.regularizer.epsilon
        return 0.25


@dataclass
class TrainHistory:
    """Per-epoch curves plus the stopping/best bookkeeping. Lists are one
    entry per completed epoch; valid-set columns are empty without one."""

    train_err: list = field(default_factory=list)
    valid_err: list = field(default_factory=list)
    adv_valid_err: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    stopping_epoch: int = -1
    best_epoch: int = -1

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def series(self, mode: str) -> list:
        if mode == "clean_validation":
            series = self.valid_err
        elif mode == "adversarial_validation":
            series = self.adv_valid_err
        else:
            raise ConfigError(f"no monitored series for mode {mode!r}")
        if not series:
            raise ConfigError(f"history has no series for mode {mode!r}")
        return series

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_err", "valid_err", "adv_valid_err", "loss"])
            for e in range(self.epochs):
                writer.writerow(
                    [
                        e,
                        repr(float(self.train_err[e])),
                        repr(float(self.valid_err[e])) if self.valid_err else "",
                        repr(float(self.adv_valid_err[e])) if self.adv_valid_err else "",
                        repr(float(self.train_loss[e])),
                    ]
                )


def evaluate_early_stopping(history: TrainHistory, mode: str, patience: int) -> int:
    """First epoch index at which the monitored error has failed to reach a
    new minimum for `patience` consecutive epochs; the final epoch if that
    never happens."""
    if patience < 1:
        raise ConfigError("patience must be >= 1")
    series = history.series(mode)
    best = series[0]
    best_idx = 0
    for t in range(1, len(series)):
        if series[t] < best:
            best = series[t]
            best_idx = t
        elif t - best_idx >= patience:
            return t
    return len(series) - 1


def analytic_adv_logistic_loss(model: LogisticModel, x, y, epsilon: float) -> float:
    """softplus(epsilon*||w||_1 - y(w.x + b)): the logistic loss at the
    sign-gradient point, in closed form (exact whenever no weight
    coordinate is zero, since sign(0) drops those coordinates)."""
    if not isinstance(model, LogisticModel):
        raise ConfigError("analytic adversarial loss is logistic-only")
    if not epsilon >= 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    if y not in (-1, 1):
        raise ValueError(f"logistic label must be -1 or +1, got {y}")
    a = float(np.asarray(x, dtype=np.float64) @ model.w + model.b)
    return float(softplus(epsilon * np.abs(model.w).sum() - y * a))


def _analytic_adv_logistic_grads(model: LogisticModel, X, Y, epsilon):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    a = X @ model.w + model.b
    z = epsilon * np.abs(model.w).sum() - Y * a
    s = sigmoid(z)
    n = X.shape[0]
    grad_w = epsilon * s.mean() * sign(model.w) - (s * Y) @ X / n
    grad_b = np.asarray(-(s * Y).mean())
    return float(softplus(z).mean()), {"w": grad_w, "b": grad_b}


def adversarial_objective(model, x, y, alpha: float, epsilon: float, dropout=None):
    """Loss and gradients of alpha*J(x) + (1-alpha)*J(x_adv), with the
    perturbation built in eval mode and held constant under differentiation.
    Dropout masks (if any) are drawn once and shared by both terms."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    if not epsilon >= 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ConfigError("adversarial_objective takes a single example")
    masks = dropout
    if isinstance(dropout, RngStream):
        masks = model.draw_masks(1, dropout)
    x_adv = fgsm(model, x, y, epsilon)
    X = x[None, :]
    Y = np.array([y])
    l1, g1, gi1 = model.batch_grads(X, Y, masks)
    l2, g2, gi2 = model.batch_grads(x_adv[None, :], Y, masks)
    loss = alpha * l1 + (1.0 - alpha) * l2
    grads = {k: alpha * g1[k] + (1.0 - alpha) * g2[k] for k in g1}
    grad_input = alpha * gi1[0] + (1.0 - alpha) * gi2[0]
    return loss, GradientBundle(grad_params=grads, grad_input=grad_input)


def _first_layer_weights(model):
    if isinstance(model, LogisticModel):
        return "w", model.w
    if isinstance(model, SoftmaxModel):
        return "W", model.W
    if isinstance(model, MaxoutModel):
        return "layer0_W", model.layers[0].W
    raise ConfigError(f"{model.family} has no first-layer weight matrix")


def l1_weight_decay_loss(model, x, y, coefficient: float) -> float:
    """Clean loss plus coefficient * sum|first-layer weights|, the explicit
    penalty added to the training cost (unlike the adversarial analytic
    form, whose penalty enters inside the softplus)."""
    if not coefficient >= 0:
        raise ConfigError(f"coefficient must be >= 0, got {coefficient}")
    _, W1 = _first_layer_weights(model)
    out = model.forward(np.asarray(x, dtype=np.float64), y)
    return float(out.loss + coefficient * np.abs(W1).sum())


def _draw_masks(model, n: int, stream: RngStream):
    if isinstance(model, MaxoutModel) and (
        model.retain_input < 1.0 or any(r < 1.0 for r in model.retain_hidden)
    ):
        return model.draw_masks(n, stream)
    return None


def _minibatch_step(model, Xb, Yb, reg, streams):
    """Loss and mean parameter gradients for one minibatch under the
    configured regularizer."""
    if reg is None:
        masks = _draw_masks(model, Xb.shape[0], streams["dropout"])
        loss, grads, _ = model.batch_grads(Xb, Yb, masks)
        return loss, grads

    if isinstance(reg, AdversarialReg):
        x_adv = fgsm(model, Xb, Yb, reg.epsilon)
        masks = _draw_masks(model, Xb.shape[0], streams["dropout"])
        l1, g1, _ = model.batch_grads(Xb, Yb, masks)
        l2, g2, _ = model.batch_grads(x_adv, Yb, masks)
        a = reg.alpha
        return a * l1 + (1 - a) * l2, {k: a * g1[k] + (1 - a) * g2[k] for k in g1}

    if isinstance(reg, AnalyticAdvLogisticReg):
        if not isinstance(model, LogisticModel):
            raise ConfigError("analytic adversarial regularizer is logistic-only")
        return _analytic_adv_logistic_grads(model, Xb, Yb, reg.epsilon)

    if isinstance(reg, L1WeightDecayReg):
        masks = _draw_masks(model, Xb.shape[0], streams["dropout"])
        loss, grads, _ = model.batch_grads(Xb, Yb, masks)
        name, W1 = _first_layer_weights(model)
        loss += reg.coefficient * np.abs(W1).sum()
        grads[name] = grads[name] + reg.coefficient * sign(W1)
        return loss, grads

    if isinstance(reg, NoiseReg):
        if reg.noise_kind == "random_sign":
            Xn = random_sign_noise(Xb, reg.epsilon, streams["noise"])
        else:
            Xn = uniform_noise(Xb, reg.epsilon, streams["noise"])
        masks = _draw_masks(model, Xb.shape[0], streams["dropout"])
        loss, grads, _ = model.batch_grads(Xn, Yb, masks)
        return loss, grads

    if isinstance(reg, RubbishAugmentedReg):
        if not hasattr(model, "batch_grads_target"):
            raise ConfigError("rubbish-augmented training needs a softmax or sigmoid top")
        target = ("zeros",) if getattr(model, "top", "softmax") == "sigmoid" else ("uniform",)
        n_r = max(1, int(round(reg.fraction * Xb.shape[0])))
        Xr = streams["rubbish"].standard_normal((n_r, model.input_dim))
        masks_c = _draw_masks(model, Xb.shape[0], streams["dropout"])
        masks_r = _draw_masks(model, n_r, streams["dropout"])
        lc, gc, _ = model.batch_grads(Xb, Yb, masks_c)
        lr_, gr, _ = model.batch_grads_target(Xr, target, masks_r)
        B, R = Xb.shape[0], n_r
        w_c, w_r = B / (B + R), R / (B + R)
        loss = w_c * lc + w_r * lr_
        return loss, {k: w_c * gc[k] + w_r * gr[k] for k in gc}

    raise ConfigError(f"unknown regularizer {reg!r}")


def _error_rate(model, X, Y, batch: int = 2048) -> float:
    wrong = 0
    for lo in range(0, X.shape[0], batch):
        p = model.probs(X[lo : lo + batch])
        pred = np.asarray(model.classes)[p.argmax(axis=1)]
        wrong += int((pred != np.asarray(Y[lo : lo + batch])).sum())
    return wrong / X.shape[0]


def _snapshot(params):
    return {k: v.copy() for k, v in params.items()}


def _restore(params, snap):
    for k in params:
        params[k][...] = snap[k]


def sgd_train(model, data, cfg: TrainConfig):
    """Train `model` in place on `data = (train, valid)` and return
    (model, TrainHistory). valid may be None unless early stopping is on.

    With early stopping enabled, the returned parameters are those of the
    best epoch under the monitored validation error.
    """
    train, valid = data
    n = train.inputs.shape[0]
    if n == 0:
        raise ConfigError("empty training set")
    if cfg.early_stopping != "none" and valid is None:
        raise ConfigError("early stopping requires a validation set")
    params = model.param_arrays()
    if not params:
        raise ConfigError(f"{model.family} has no trainable parameters")

    streams = {
        "minibatch": RngStream(cfg.seed, "minibatch"),
        "dropout": RngStream(cfg.seed, "dropout"),
        "noise": RngStream(cfg.seed, "noise"),
        "rubbish": RngStream(cfg.seed, "rubbish"),
    }
    velocity = (
        {k: np.zeros_like(v) for k, v in params.items()} if cfg.momentum > 0 else None
    )
    history = TrainHistory()
    n_eval = min(cfg.eval_train_subsample, n)
    best_snap = None
    best_err = np.inf
    best_idx = -1
    monitored = cfg.early_stopping

    for epoch in range(cfg.max_epochs):
        lr = cfg.learning_rate * cfg.lr_decay**epoch
        perm = streams["minibatch"].permutation(n)
        loss_sum = 0.0
        for bi, lo in enumerate(range(0, n, cfg.batch_size)):
            idx = perm[lo : lo + cfg.batch_size]
            loss, grads = _minibatch_step(
                model, train.inputs[idx], train.labels[idx], cfg.regularizer, streams
            )
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, bi)
            scale = cfg.param_lr_scale or {}
            if velocity is None:
                for k in params:
                    params[k] -= lr * scale.get(k, 1.0) * grads[k]
            else:
                for k in params:
                    velocity[k] *= cfg.momentum
                    velocity[k] -= lr * scale.get(k, 1.0) * grads[k]
                    params[k] += velocity[k]
            if hasattr(model, "project_params"):
                model.project_params()
            loss_sum += loss * idx.shape[0]

        history.train_loss.append(loss_sum / n)
        history.train_err.append(
            _error_rate(model, train.inputs[:n_eval], train.labels[:n_eval])
        )
        if valid is not None:
            history.valid_err.append(
                _error_rate(model, valid.inputs, valid.labels)
            )
            adv_inputs = fgsm(
                model, valid.inputs, valid.labels, cfg.resolved_adv_eval_epsilon
            )
            history.adv_valid_err.append(
                _error_rate(model, adv_inputs, valid.labels)
            )

        if monitored != "none":
            err = history.series(monitored)[-1]
            if err < best_err:
                best_err = err
                best_idx = epoch
                best_snap = _snapshot(params)
            elif epoch - best_idx >= cfg.patience:
                history.stopping_epoch = epoch
                break

    if history.stopping_epoch < 0:
        history.stopping_epoch = history.epochs - 1
    if best_snap is not None:
        _restore(params, best_snap)
        history.best_epoch = best_idx
    else:
        history.best_epoch = history.stopping_epoch
    return model, history


def train_ensemble(k: int, base_cfg: TrainConfig, seeds, builder, data):
    """Train k independent members (one per seed) and average their
    probabilities. `builder(seed)` must construct a fresh untrained model."""
    seeds = list(seeds)
    if k != len(seeds):
        raise ConfigError(f"k={k} but {len(seeds)} seeds given")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("ensemble seeds must be distinct")
    members = []
    histories = []
    for s in seeds:
        cfg_s = dataclasses.replace(base_cfg, seed=s)
        member, hist = sgd_train(builder(s), data, cfg_s)
        members.append(member)
        histories.append(hist)
    return EnsembleModel(members), histories
