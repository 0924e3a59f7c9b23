"""Sign-gradient adversarial examples, adversarial training, and a
reproducible MNIST experiment harness.

The linear story in one line: for inputs perturbed by eta with
max-norm(eta) <= epsilon, a weight vector w moves the activation by up to
epsilon * l1-norm(w), and eta = epsilon * sign(gradient) achieves that
bound; high-dimensional linear pieces therefore give every model studied
here its adversarial examples, and training against them repairs part of
the damage.
"""

from __future__ import annotations

from .attacks import (
    ATTACK_KINDS,
    AttackConfig,
    SweepResult,
    apply_attack,
    epsilon_sweep,
    fgsm,
    input_gradients,
    random_sign_noise,
    rotation_attack,
    uniform_noise,
)
from .checkpoint import load_checkpoint, read_metadata, save_checkpoint
from .data import (
    DATA_DIR_ENV,
    Dataset,
    binary_subset,
    load_idx,
    load_mnist,
    resolve_data_dir,
    save_idx,
    split,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateGeometryError,
    NonFiniteError,
    ShapeError,
    TrainingDivergedError,
)
from .harness import (
    RECIPES,
    TransferReport,
    attack_eval,
    cross_training_transfer,
    eval_on_generated,
    export_weight_image,
    maxout_ray_breakpoints,
    mean_spatial_autocorrelation,
    run_experiment,
    transfer_eval,
    wrong_run_counts,
)
from .metrics import Metrics, mean_confidence_overall, metrics_from_predictions
from .models import (
    EnsembleModel,
    LogisticModel,
    MaxoutLayer,
    MaxoutModel,
    RbfModel,
    SoftmaxModel,
    model_loss_grad,
    predict_metrics,
)
from .numerics import RngStream, sign, softplus
from .rubbish import (
    FoolingResult,
    RubbishReport,
    chi_squared_uniform,
    fooling_step,
    generate_fooling_images,
    rubbish_error,
    sample_gaussian_rubbish,
)
from .training import (
    AdversarialReg,
    AnalyticAdvLogisticReg,
    L1WeightDecayReg,
    NoiseReg,
    RubbishAugmentedReg,
    TrainConfig,
    TrainHistory,
    adversarial_objective,
    analytic_adv_logistic_loss,
    evaluate_early_stopping,
    sgd_train,
    train_ensemble,
)

__version__ = "0.1.0"

__all__ = [
    "ATTACK_KINDS",
    "AdversarialReg",
    "AnalyticAdvLogisticReg",
    "AttackConfig",
    "ConfigError",
    "DATA_DIR_ENV",
    "DataFormatError",
    "Dataset",
    "DegenerateGeometryError",
    "EnsembleModel",
    "FoolingResult",
    "L1WeightDecayReg",
    "LogisticModel",
    "MaxoutLayer",
    "MaxoutModel",
    "Metrics",
    "NoiseReg",
    "NonFiniteError",
    "RECIPES",
    "RbfModel",
    "RngStream",
    "RubbishAugmentedReg",
    "RubbishReport",
    "ShapeError",
    "SoftmaxModel",
    "SweepResult",
    "TrainConfig",
    "TrainHistory",
    "TrainingDivergedError",
    "TransferReport",
    "adversarial_objective",
    "analytic_adv_logistic_loss",
    "apply_attack",
    "attack_eval",
    "binary_subset",
    "chi_squared_uniform",
    "cross_training_transfer",
    "epsilon_sweep",
    "eval_on_generated",
    "evaluate_early_stopping",
    "export_weight_image",
    "fgsm",
    "fooling_step",
    "generate_fooling_images",
    "input_gradients",
    "load_checkpoint",
    "load_idx",
    "load_mnist",
    "maxout_ray_breakpoints",
    "mean_confidence_overall",
    "mean_spatial_autocorrelation",
    "metrics_from_predictions",
    "model_loss_grad",
    "predict_metrics",
    "random_sign_noise",
    "read_metadata",
    "resolve_data_dir",
    "rotation_attack",
    "rubbish_error",
    "run_experiment",
    "sample_gaussian_rubbish",
    "save_checkpoint",
    "save_idx",
    "sgd_train",
    "sign",
    "softplus",
    "split",
    "train_ensemble",
    "transfer_eval",
    "uniform_noise",
    "wrong_run_counts",
]
