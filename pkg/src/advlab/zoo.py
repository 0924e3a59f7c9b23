"""Canonical desk-scale models and training settings.

Everything that trains a model for an experiment goes through here, so the
command line, the experiment recipes, and the test suite all agree on what
"the naive maxout net" or "the 3-vs-7 logistic model" means. Each train_*
function is deterministic in its seed.
"""

from __future__ import annotations

from .data import Dataset, binary_subset, split
from .models import LogisticModel, MaxoutModel, RbfModel, SoftmaxModel
from .numerics import RngStream
from .training import (
    AdversarialReg,
    AnalyticAdvLogisticReg,
    L1WeightDecayReg,
    NoiseReg,
    TrainConfig,
    sgd_train,
    train_ensemble,
)

DIM = 784
N_CLASSES = 10
HIDDEN_UNITS = 240
PIECES = 4
RETAIN_INPUT = 0.8
RETAIN_HIDDEN = 0.5
EPSILON = 0.25
VALID_SIZE = 10000
SPLIT_SEED = 71

ENSEMBLE_SEEDS = (101, 102, 103, 104)


def mnist_split(train: Dataset) -> tuple[Dataset, Dataset]:
    """The shared 50k/10k train/validation split used by every experiment."""
    return split(train, VALID_SIZE, RngStream(SPLIT_SEED, "minibatch"))


def build_maxout(
    seed: int,
    top: str = "softmax",
    retain_input: float = RETAIN_INPUT,
    retain_hidden: float = RETAIN_HIDDEN,
) -> MaxoutModel:
    return MaxoutModel.init(
        DIM,
        N_CLASSES,
        HIDDEN_UNITS,
        PIECES,
        RngStream(seed, "weights"),
        retain_input=retain_input,
        retain_hidden=retain_hidden,
        top=top,
    )


def logistic_3v7_config(seed: int = 0) -> TrainConfig:
    return TrainConfig(
        learning_rate=0.5,
        batch_size=100,
        max_epochs=25,
        lr_decay=0.95,
        seed=seed,
    )


def train_logistic_3v7(train: Dataset, seed: int = 0, regularizer=None):
    d = binary_subset(train, 3, 7)
    cfg = logistic_3v7_config(seed)
    cfg.regularizer = regularizer
    model, hist = sgd_train(LogisticModel.zeros(DIM), (d, None), cfg)
    return model, hist, cfg


def softmax_config(seed: int = 0) -> TrainConfig:
    return TrainConfig(
        learning_rate=0.5,
        batch_size=100,
        max_epochs=25,
        lr_decay=0.95,
        seed=seed,
        early_stopping="clean_validation",
        patience=8,
    )


def train_softmax(train: Dataset, seed: int = 0):
    tr, va = mnist_split(train)
    cfg = softmax_config(seed)
    model, hist = sgd_train(SoftmaxModel.zeros(DIM, N_CLASSES), (tr, va), cfg)
    return model, hist, cfg


def naive_maxout_config(seed: int = 0) -> TrainConfig:
    return TrainConfig(
        learning_rate=0.2,
        batch_size=100,
        max_epochs=30,
        momentum=0.5,
        lr_decay=0.97,
        seed=seed,
        early_stopping="clean_validation",
        patience=10,
    )


def train_naive_maxout(train: Dataset, seed: int = 0):
    tr, va = mnist_split(train)
    cfg = naive_maxout_config(seed)
    model, hist = sgd_train(build_maxout(seed), (tr, va), cfg)
    return model, hist, cfg


def adversarial_maxout_config(seed: int = 0, alpha: float = 0.5, epsilon: float = EPSILON) -> TrainConfig:
    # slower decay and a longer run: the perturbed objective converges more
    # slowly than plain training, and clean accuracy keeps improving late
    return TrainConfig(
        learning_rate=0.2,
        batch_size=100,
        max_epochs=140,
        momentum=0.5,
        lr_decay=0.99,
        seed=seed,
        early_stopping="clean_validation",
        patience=20,
        regularizer=AdversarialReg(alpha=alpha, epsilon=epsilon),
    )


def train_adversarial_maxout(train: Dataset, seed: int = 0, alpha: float = 0.5, epsilon: float = EPSILON):
    tr, va = mnist_split(train)
    cfg = adversarial_maxout_config(seed, alpha, epsilon)
    # no dropout here: the perturbed half of the objective is already a
    # strong regularizer, and stacking both underfits a net this small
    model = build_maxout(seed, retain_input=1.0, retain_hidden=1.0)
    model, hist = sgd_train(model, (tr, va), cfg)
    return model, hist, cfg


def noise_maxout_config(noise_kind: str, seed: int = 0, epsilon: float = EPSILON) -> TrainConfig:
    cfg = naive_maxout_config(seed)
    cfg.regularizer = NoiseReg(noise_kind=noise_kind, epsilon=epsilon)
    return cfg


def train_noise_maxout(train: Dataset, noise_kind: str, seed: int = 0, epsilon: float = EPSILON):
    tr, va = mnist_split(train)
    cfg = noise_maxout_config(noise_kind, seed, epsilon)
    model, hist = sgd_train(build_maxout(seed), (tr, va), cfg)
    return model, hist, cfg


def sigmoid_maxout_config(seed: int = 0) -> TrainConfig:
    cfg = naive_maxout_config(seed)
    cfg.max_epochs = 25
    return cfg


def train_sigmoid_maxout(train: Dataset, seed: int = 0):
    tr, va = mnist_split(train)
    cfg = sigmoid_maxout_config(seed)
    model, hist = sgd_train(build_maxout(seed, top="sigmoid"), (tr, va), cfg)
    return model, hist, cfg


def member_maxout_config(seed: int) -> TrainConfig:
    cfg = naive_maxout_config(seed)
    cfg.max_epochs = 15
    cfg.early_stopping = "none"
    return cfg


def train_maxout_ensemble(train: Dataset, seeds=ENSEMBLE_SEEDS):
    tr, va = mnist_split(train)
    base = member_maxout_config(seeds[0])
    return train_ensemble(
        len(seeds), base, seeds, lambda s: build_maxout(s), (tr, va)
    )


def rbf_config(seed: int = 0) -> TrainConfig:
    return TrainConfig(
        learning_rate=0.05,
        batch_size=100,
        max_epochs=5,
        seed=seed,
        param_lr_scale={"gamma": 1e-4},
    )


def train_rbf(train: Dataset, seed: int = 0):
    tr, va = mnist_split(train)
    model = RbfModel.init_from_data(tr.inputs, tr.labels, N_CLASSES)
    cfg = rbf_config(seed)
    model, hist = sgd_train(model, (tr, va), cfg)
    return model, hist, cfg


def l1_maxout_config(seed: int = 0, coefficient: float = 0.0025) -> TrainConfig:
    cfg = naive_maxout_config(seed)
    cfg.regularizer = L1WeightDecayReg(coefficient=coefficient)
    return cfg


def analytic_adv_logistic_config(seed: int = 0, epsilon: float = EPSILON) -> TrainConfig:
    cfg = logistic_3v7_config(seed)
    cfg.regularizer = AnalyticAdvLogisticReg(epsilon=epsilon)
    return cfg
