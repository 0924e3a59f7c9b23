"""Experiment orchestration: attack evaluations, cross-model transfer
statistics, named experiment recipes with deterministic JSON/CSV/PGM report
emission, and weight-image export.

Every recipe is reproducible byte-for-byte: reports embed the seed and a
fingerprint of the resolved configuration, all randomness flows from named
streams of that seed, and no output contains a timestamp.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import zoo
from .attacks import AttackConfig, apply_attack, epsilon_sweep, input_gradients
from .checkpoint import load_checkpoint, save_checkpoint
from .data import binary_subset, load_mnist, resolve_data_dir
from .errors import ConfigError, ShapeError
from .metrics import Metrics, mean_confidence_overall, metrics_from_predictions
from .models import EnsembleModel, LogisticModel, MaxoutModel, SoftmaxModel, predict_metrics
from .numerics import RngStream, sign
from .pgm import sign_image, tile_grid, to_gray, write_pgm
from .rubbish import (
    chi_squared_uniform,
    generate_fooling_images,
    rubbish_error,
    sample_gaussian_rubbish,
)

_CHUNK = 2048


@dataclass
class TransferReport:
    """How often a target model repeats a source model's adversarial
    mistakes: agreement = target predicts the exact class the source
    (wrongly) predicted, over source-wrong examples and over the subset
    both models get wrong."""

    source_model: str
    target_model: str
    n: int
    source_wrong: int
    both_wrong: int
    overall_agreement: float | None
    both_wrong_agreement: float | None

    def to_dict(self):
        return {
            "source_model": self.source_model,
            "target_model": self.target_model,
            "n": self.n,
            "source_wrong": self.source_wrong,
            "both_wrong": self.both_wrong,
            "overall_agreement": self.overall_agreement,
            "both_wrong_agreement": self.both_wrong_agreement,
        }


def _predict(model, X):
    p = model.probs(X)
    idx = p.argmax(axis=1)
    return np.asarray(model.classes)[idx], p[np.arange(p.shape[0]), idx]


def eval_on_generated(source, target, dataset, attack: AttackConfig, rng=None) -> Metrics:
    """Metrics of `target` on examples perturbed against `source`."""
    n = len(dataset)
    preds = np.empty(n, dtype=np.int64)
    confs = np.empty(n)
    for lo in range(0, n, _CHUNK):
        X = dataset.inputs[lo : lo + _CHUNK]
        Y = dataset.labels[lo : lo + _CHUNK]
        adv = apply_attack(source, X, Y, attack, rng)
        preds[lo : lo + _CHUNK], confs[lo : lo + _CHUNK] = _predict(target, adv)
    return metrics_from_predictions(preds, confs, dataset.labels)


def attack_eval(model, dataset, attack: AttackConfig, rng=None) -> Metrics:
    """Metrics of a model on its own perturbed inputs (eval mode; one
    perturbation per example)."""
    return eval_on_generated(model, model, dataset, attack, rng)


def transfer_eval(
    source,
    target,
    dataset,
    attack: AttackConfig,
    rng=None,
    source_tag: str = "",
    target_tag: str = "",
) -> TransferReport:
    """Perturb against the source only; report how often the target repeats
    the source's wrong class."""
    n = len(dataset)
    sp = np.empty(n, dtype=np.int64)
    tp = np.empty(n, dtype=np.int64)
    for lo in range(0, n, _CHUNK):
        X = dataset.inputs[lo : lo + _CHUNK]
        Y = dataset.labels[lo : lo + _CHUNK]
        adv = apply_attack(source, X, Y, attack, rng)
        sp[lo : lo + _CHUNK], _ = _predict(source, adv)
        tp[lo : lo + _CHUNK], _ = _predict(target, adv)
    labels = dataset.labels
    source_wrong = sp != labels
    both_wrong = source_wrong & (tp != labels)
    agree = tp == sp
    n_sw = int(source_wrong.sum())
    n_bw = int(both_wrong.sum())
    return TransferReport(
        source_model=source_tag or source.family,
        target_model=target_tag or target.family,
        n=n,
        source_wrong=n_sw,
        both_wrong=n_bw,
        overall_agreement=float(agree[source_wrong].mean()) if n_sw else None,
        both_wrong_agreement=float(agree[both_wrong].mean()) if n_bw else None,
    )


def cross_training_transfer(adv_model, naive_model, dataset, epsilon: float):
    """The four error rates behind the cross-training comparison: each
    model on its own sign-gradient examples and on the other's."""
    attack = AttackConfig("fgsm", epsilon)
    return {
        "adv_on_naive_examples": eval_on_generated(naive_model, adv_model, dataset, attack),
        "naive_on_adv_examples": eval_on_generated(adv_model, naive_model, dataset, attack),
        "naive_self": attack_eval(naive_model, dataset, attack),
        "adv_self": attack_eval(adv_model, dataset, attack),
    }


def maxout_ray_breakpoints(model: MaxoutModel, x, direction, lo: float, hi: float):
    """Analytic kink positions of t -> logits(x + t*direction) for a
    single-hidden-layer maxout model: every epsilon in (lo, hi) where some
    unit's active piece changes. The logits are exactly affine between
    consecutive returned values."""
    if len(model.layers) != 1:
        raise ConfigError("ray breakpoints implemented for one hidden layer")
    layer = model.layers[0]
    h, k, d = layer.W.shape
    x = np.asarray(x, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    intercepts = layer.W.reshape(h * k, d) @ x + layer.b.reshape(h * k)
    slopes = layer.W.reshape(h * k, d) @ direction
    breaks = []
    for u in range(h):
        breaks.extend(
            _upper_envelope_breaks(
                slopes[u * k : (u + 1) * k], intercepts[u * k : (u + 1) * k], lo, hi
            )
        )
    return np.array(sorted(breaks))


def _upper_envelope_breaks(slopes, intercepts, lo, hi):
    """Breakpoints of max_p(slopes[p]*t + intercepts[p]) inside (lo, hi)."""
    order = np.lexsort((intercepts, slopes))
    hull_m: list[float] = []
    hull_c: list[float] = []
    for i in order:
        m, c = float(slopes[i]), float(intercepts[i])
        if hull_m and hull_m[-1] == m:
            # equal slopes: the larger intercept (later in sort order) wins
            hull_m.pop()
            hull_c.pop()
        while len(hull_m) >= 2:
            # drop the middle line if the new one overtakes it before the
            # middle line overtakes the one below
            x_new = (c - hull_c[-2]) / (hull_m[-2] - m)
            x_old = (hull_c[-1] - hull_c[-2]) / (hull_m[-2] - hull_m[-1])
            if x_new <= x_old:
                hull_m.pop()
                hull_c.pop()
            else:
                break
        hull_m.append(m)
        hull_c.append(c)
    breaks = []
    for i in range(len(hull_m) - 1):
        t = (hull_c[i] - hull_c[i + 1]) / (hull_m[i + 1] - hull_m[i])
        if lo < t < hi:
            breaks.append(t)
    return breaks


def wrong_run_counts(correct, epsilons):
    """(negative-ray runs, positive-ray runs) of consecutive wrong
    predictions, the negative ray read outward from 0."""
    correct = np.asarray(correct, dtype=bool)
    epsilons = np.asarray(epsilons)

    def runs(flags):
        count = 0
        prev = True
        for ok in flags:
            if not ok and prev:
                count += 1
            prev = ok
        return count

    neg = correct[epsilons <= 0][::-1]
    pos = correct[epsilons >= 0]
    return runs(neg), runs(pos)


def mean_spatial_autocorrelation(rows, height: int = 28, width: int = 28) -> float:
    """Mean lag-1 neighbor correlation of filter images: a quantitative
    proxy for how spatially smooth/localized first-layer weights look."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    vals = []
    for row in rows:
        img = row.reshape(height, width)
        a = np.concatenate([img[:, :-1].ravel(), img[:-1, :].ravel()])
        b = np.concatenate([img[:, 1:].ravel(), img[1:, :].ravel()])
        sa, sb = a.std(), b.std()
        if sa == 0.0 or sb == 0.0:
            vals.append(0.0)
        else:
            vals.append(float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb)))
    return float(np.mean(vals))


def first_layer_rows(model) -> np.ndarray:
    if isinstance(model, LogisticModel):
        return model.w[None, :]
    if isinstance(model, SoftmaxModel):
        return model.W
    if isinstance(model, MaxoutModel):
        h, k, d = model.layers[0].W.shape
        return model.layers[0].W.reshape(h * k, d)
    raise ConfigError(f"{model.family} has no first-layer weight rows")


def export_weight_image(model, unit_selector=None, out_dir=".", prefix="filter"):
    """PGM per selected first-layer row (affine-rescaled gray) plus a
    sign-map PGM with values {0, 128, 255} for {-1, 0, +1}."""
    rows = first_layer_rows(model)
    side = int(round(np.sqrt(rows.shape[1])))
    if side * side != rows.shape[1]:
        raise ShapeError(f"{rows.shape[1]} weights do not reshape to a square image")
    if unit_selector is None:
        unit_selector = range(min(rows.shape[0], 16))
    out_dir = Path(out_dir)
    paths = []
    for i in unit_selector:
        img = rows[i].reshape(side, side)
        gray_path = out_dir / f"{prefix}_{i:03d}.pgm"
        sign_path = out_dir / f"{prefix}_{i:03d}_sign.pgm"
        write_pgm(gray_path, to_gray(img))
        write_pgm(sign_path, sign_image(img))
        paths.extend([gray_path, sign_path])
    return paths


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _semantic_config(config: dict) -> dict:
    """Drop filesystem knobs (output/data locations, checkpoint paths) so
    fingerprints and recorded configs depend only on what was computed."""
    return {
        k: v
        for k, v in config.items()
        if k not in ("out_dir", "data_dir") and not k.endswith("_checkpoint")
    }


def config_fingerprint(config: dict) -> str:
    return hashlib.sha256(canonical_json(_semantic_config(config)).encode()).hexdigest()


def write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def _symmetric_grid(half_range: float, step: float) -> np.ndarray:
    n = int(round(half_range / step))
    return (np.arange(2 * n + 1) - n) * step


# ---------------------------------------------------------------------------
# recipes


def _trained(cfg, key, out, trainer, fingerprint):
    """Model for `key`: loaded from cfg['<key>_checkpoint'] if given, else
    trained by `trainer()` and checkpointed (with history) under `out`."""
    ckpt = cfg.get(f"{key}_checkpoint")
    if ckpt:
        model, _ = load_checkpoint(ckpt)
        return model
    model, hist, _ = trainer()
    save_checkpoint(Path(out) / f"{key}.ckpt", model, fingerprint)
    hist.write_csv(Path(out) / f"{key}_history.csv")
    return model


def _grid_pgm(out_path, images_784, rescale=False):
    """Tile 784-vectors into a 4-column PGM grid. Pixel-valued rows are
    clipped to [0, 1]; `rescale` maps each sample affinely from its own
    min/max instead (for Gaussian samples and their perturbations)."""
    tiles = []
    for row in images_784:
        if rescale:
            tiles.append(to_gray(row.reshape(28, 28)))
        else:
            img = np.clip(row, 0.0, 1.0)
            tiles.append(np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8).reshape(28, 28))
    write_pgm(out_path, tile_grid(tiles, cols=4))


def recipe_fig3_logistic(cfg, out, train, test, fingerprint):
    eps = cfg["epsilon"]
    model = _trained(
        cfg, "logistic_3v7", out, lambda: zoo.train_logistic_3v7(train, cfg["seed"]), fingerprint
    )
    test37 = binary_subset(test, 3, 7)
    clean = predict_metrics(model, test37)
    adv = attack_eval(model, test37, AttackConfig("fgsm", eps))
    export_weight_image(model, [0], out, prefix="weights")
    adv_inputs = apply_attack(model, test37.inputs[:16], test37.labels[:16], AttackConfig("fgsm", eps))
    _grid_pgm(Path(out) / "adv_examples.pgm", adv_inputs)
    _grid_pgm(Path(out) / "clean_examples.pgm", test37.inputs[:16])
    return {
        "epsilon": eps,
        "n_test": len(test37),
        "clean": clean.to_dict(),
        "fgsm": adv.to_dict(),
    }


def recipe_fig4_sweep(cfg, out, train, test, fingerprint):
    model = _trained(
        cfg, "naive_maxout", out, lambda: zoo.train_naive_maxout(train, cfg["seed"]), fingerprint
    )
    grid = _symmetric_grid(cfg["half_range"], cfg["step"])
    n_probes = cfg["n_probes"]
    contiguous = 0
    max_clean_d2 = 0.0
    n_breaks_total = 0
    n_clean_rows = 0
    for i in range(n_probes):
        x = test.inputs[i]
        y = int(test.labels[i])
        result = epsilon_sweep(model, x, y, grid)
        result.write_csv(Path(out) / f"sweep_{i:03d}.csv")
        neg_runs, pos_runs = wrong_run_counts(result.correct, grid)
        if neg_runs <= 1 and pos_runs <= 1:
            contiguous += 1
        direction = sign(input_gradients(model, x[None, :], [y])[0])
        breaks = maxout_ray_breakpoints(model, x, direction, grid[0], grid[-1])
        n_breaks_total += len(breaks)
        d2 = np.abs(np.diff(result.logits_per_eps, n=2, axis=0))
        clean_rows = _rows_away_from_breaks(grid, breaks)
        n_clean_rows += int(clean_rows.sum())
        if clean_rows.any():
            max_clean_d2 = max(max_clean_d2, float(d2[clean_rows].max()))
    return {
        "n_probes": n_probes,
        "grid_points": int(grid.size),
        "half_range": cfg["half_range"],
        "step": cfg["step"],
        "contiguous_probes": contiguous,
        "contiguous_fraction": contiguous / n_probes,
        "total_breakpoints": n_breaks_total,
        "kink_free_second_difference_rows": n_clean_rows,
        "max_second_difference_away_from_breakpoints": max_clean_d2,
    }


def _rows_away_from_breaks(grid, breaks):
    """Boolean mask over second-difference rows (index i covers grid points
    i, i+1, i+2) that contain no analytic breakpoint."""
    mask = np.ones(grid.size - 2, dtype=bool)
    for b in np.asarray(breaks):
        first = np.searchsorted(grid, b) - 2
        for i in range(max(first, 0), min(first + 3, mask.size)):
            mask[i] = False
    return mask


def recipe_softmax_attack(cfg, out, train, test, fingerprint):
    model = _trained(
        cfg, "softmax", out, lambda: zoo.train_softmax(train, cfg["seed"]), fingerprint
    )
    clean = predict_metrics(model, test)
    adv = attack_eval(model, test, AttackConfig("fgsm", cfg["epsilon"]))
    return {
        "epsilon": cfg["epsilon"],
        "clean": clean.to_dict(),
        "fgsm": adv.to_dict(),
    }


def recipe_maxout_adv_arc(cfg, out, train, test, fingerprint):
    eps = cfg["epsilon"]
    naive = _trained(
        cfg, "naive_maxout", out, lambda: zoo.train_naive_maxout(train, cfg["seed"]), fingerprint
    )
    adv = _trained(
        cfg,
        "adversarial_maxout",
        out,
        lambda: zoo.train_adversarial_maxout(train, cfg["seed"], cfg["alpha"], eps),
        fingerprint,
    )
    clean_naive = predict_metrics(naive, test)
    clean_adv = predict_metrics(adv, test)
    cross = cross_training_transfer(adv, naive, test, eps)
    export_weight_image(naive, range(16), out, prefix="naive_filters")
    export_weight_image(adv, range(16), out, prefix="adv_filters")
    return {
        "epsilon": eps,
        "alpha": cfg["alpha"],
        "clean_naive": clean_naive.to_dict(),
        "clean_adversarial": clean_adv.to_dict(),
        "clean_degradation": clean_adv.error_rate - clean_naive.error_rate,
        "fgsm_naive_self": cross["naive_self"].to_dict(),
        "fgsm_adversarial_self": cross["adv_self"].to_dict(),
        "adv_on_naive_examples": cross["adv_on_naive_examples"].to_dict(),
        "naive_on_adv_examples": cross["naive_on_adv_examples"].to_dict(),
        "filter_autocorrelation_naive": mean_spatial_autocorrelation(
            first_layer_rows(naive)
        ),
        "filter_autocorrelation_adversarial": mean_spatial_autocorrelation(
            first_layer_rows(adv)
        ),
    }


def recipe_noise_controls(cfg, out, train, test, fingerprint):
    eps = cfg["epsilon"]
    results = {"epsilon": eps}
    for kind in ("random_sign", "uniform"):
        model = _trained(
            cfg,
            f"{kind}_maxout",
            out,
            lambda k=kind: zoo.train_noise_maxout(train, k, cfg["seed"], eps),
            fingerprint,
        )
        results[f"{kind}_clean"] = predict_metrics(model, test).to_dict()
        results[f"{kind}_fgsm"] = attack_eval(
            model, test, AttackConfig("fgsm", eps)
        ).to_dict()
    adv_ckpt = cfg.get("adversarial_maxout_checkpoint")
    if adv_ckpt:
        adv, _ = load_checkpoint(adv_ckpt)
        results["adversarial_fgsm"] = attack_eval(
            adv, test, AttackConfig("fgsm", eps)
        ).to_dict()
    return results


def recipe_rbf_eval(cfg, out, train, test, fingerprint):
    model = _trained(
        cfg, "rbf", out, lambda: zoo.train_rbf(train, cfg["seed"]), fingerprint
    )
    clean = predict_metrics(model, test)
    adv = attack_eval(model, test, AttackConfig("fgsm", cfg["epsilon"]))
    return {
        "epsilon": cfg["epsilon"],
        "clean": clean.to_dict(),
        "clean_mean_confidence": mean_confidence_overall(clean),
        "fgsm": adv.to_dict(),
    }


def recipe_transfer_agreement(cfg, out, train, test, fingerprint):
    eps = cfg["epsilon"]
    maxout = _trained(
        cfg, "naive_maxout", out, lambda: zoo.train_naive_maxout(train, cfg["seed"]), fingerprint
    )
    softmax = _trained(
        cfg, "softmax", out, lambda: zoo.train_softmax(train, cfg["seed"]), fingerprint
    )
    rbf = _trained(cfg, "rbf", out, lambda: zoo.train_rbf(train, cfg["seed"]), fingerprint)
    attack = AttackConfig("fgsm", eps)
    return {
        "epsilon": eps,
        "maxout_to_softmax": transfer_eval(
            maxout, softmax, test, attack, source_tag="maxout", target_tag="softmax"
        ).to_dict(),
        "maxout_to_rbf": transfer_eval(
            maxout, rbf, test, attack, source_tag="maxout", target_tag="rbf"
        ).to_dict(),
        "rbf_to_softmax": transfer_eval(
            rbf, softmax, test, attack, source_tag="rbf", target_tag="softmax"
        ).to_dict(),
    }


def recipe_ensemble(cfg, out, train, test, fingerprint):
    eps = cfg["epsilon"]
    ckpt = cfg.get("ensemble_checkpoint")
    if ckpt:
        ensemble, _ = load_checkpoint(ckpt)
    else:
        ensemble, histories = zoo.train_maxout_ensemble(train, tuple(cfg["member_seeds"]))
        save_checkpoint(Path(out) / "ensemble.ckpt", ensemble, fingerprint)
        for i, hist in enumerate(histories):
            hist.write_csv(Path(out) / f"member_{i}_history.csv")
    attack = AttackConfig("fgsm", eps)
    member0 = ensemble.members[0]
    return {
        "epsilon": eps,
        "n_members": len(ensemble.members),
        "clean_ensemble": predict_metrics(ensemble, test).to_dict(),
        "ensemble_targeted_on_ensemble": attack_eval(ensemble, test, attack).to_dict(),
        "member0_targeted_on_ensemble": eval_on_generated(
            member0, ensemble, test, attack
        ).to_dict(),
        "member0_targeted_on_member0": attack_eval(member0, test, attack).to_dict(),
    }


def recipe_rubbish_suite(cfg, out, train, test, fingerprint):
    seed = cfg["seed"]
    n_samples = cfg["n_samples"]
    maxout = _trained(
        cfg, "naive_maxout", out, lambda: zoo.train_naive_maxout(train, seed), fingerprint
    )
    sigmoid_maxout = _trained(
        cfg, "sigmoid_maxout", out, lambda: zoo.train_sigmoid_maxout(train, seed), fingerprint
    )
    softmax = _trained(
        cfg, "softmax", out, lambda: zoo.train_softmax(train, seed), fingerprint
    )
    rbf = _trained(cfg, "rbf", out, lambda: zoo.train_rbf(train, seed), fingerprint)

    samples = sample_gaussian_rubbish(n_samples, zoo.DIM, RngStream(seed, "rubbish"))
    _grid_pgm(Path(out) / "rubbish_samples.pgm", samples[:16], rescale=True)
    reports = {
        "maxout_softmax_top": rubbish_error(maxout, samples),
        "maxout_sigmoid_top": rubbish_error(sigmoid_maxout, samples),
        "softmax_regression": rubbish_error(softmax, samples),
        "rbf": rubbish_error(rbf, samples),
    }
    fool_stream = RngStream(seed, "rubbish").split("fooling")
    fooling = {}
    for c in range(zoo.N_CLASSES):
        res = generate_fooling_images(
            maxout,
            c,
            cfg["fool_epsilon"],
            fool_stream.split(f"class{c}"),
            max_attempts=cfg["fool_attempts"],
        )
        fooling[str(c)] = res.to_dict()
        if res.samples.shape[0]:
            _grid_pgm(Path(out) / f"fooling_class{c}.pgm", res.samples, rescale=True)
    return {
        "n_samples": n_samples,
        "fool_epsilon": cfg["fool_epsilon"],
        "fool_attempts": cfg["fool_attempts"],
        "reports": {k: r.to_dict() for k, r in reports.items()},
        "chi_squared_maxout_histogram": chi_squared_uniform(
            reports["maxout_softmax_top"].class_histogram
        ),
        "fooling": fooling,
    }


RECIPES = {
    "fig3_logistic": recipe_fig3_logistic,
    "fig4_sweep": recipe_fig4_sweep,
    "softmax_attack": recipe_softmax_attack,
    "maxout_adv_arc": recipe_maxout_adv_arc,
    "noise_controls": recipe_noise_controls,
    "rbf_eval": recipe_rbf_eval,
    "transfer_agreement": recipe_transfer_agreement,
    "ensemble": recipe_ensemble,
    "rubbish_suite": recipe_rubbish_suite,
}

RECIPE_DEFAULTS = {
    "fig3_logistic": {"seed": 0, "epsilon": 0.25},
    "fig4_sweep": {"seed": 0, "n_probes": 100, "half_range": 0.5, "step": 0.005},
    "softmax_attack": {"seed": 0, "epsilon": 0.25},
    "maxout_adv_arc": {"seed": 0, "epsilon": 0.25, "alpha": 0.5},
    "noise_controls": {"seed": 0, "epsilon": 0.25},
    "rbf_eval": {"seed": 0, "epsilon": 0.25},
    "transfer_agreement": {"seed": 0, "epsilon": 0.25},
    "ensemble": {"seed": 0, "epsilon": 0.25, "member_seeds": list(zoo.ENSEMBLE_SEEDS)},
    "rubbish_suite": {
        "seed": 0,
        "n_samples": 10000,
        "fool_epsilon": 0.25,
        "fool_attempts": 200,
    },
}


def run_experiment(config, out_dir=None, data=None):
    """Execute a named recipe and write report.json (plus per-recipe CSV,
    PGM, and checkpoint files) under the output directory. `config` is a
    dict or a path to a JSON file. Returns the report path."""
    if not isinstance(config, dict):
        with open(config) as fh:
            config = json.load(fh)
    recipe = config.get("recipe")
    if recipe not in RECIPES:
        raise ConfigError(
            f"unknown recipe {recipe!r}, expected one of {sorted(RECIPES)}"
        )
    resolved = {**RECIPE_DEFAULTS[recipe], **config}
    out = Path(out_dir or resolved.get("out_dir") or ".")
    out.mkdir(parents=True, exist_ok=True)
    if data is None:
        data = load_mnist(resolve_data_dir(resolved.get("data_dir")))
    train, test = data
    fingerprint = config_fingerprint(resolved)
    results = RECIPES[recipe](resolved, out, train, test, fingerprint)
    report = {
        "recipe": recipe,
        "config": _semantic_config(resolved),
        "fingerprint": fingerprint,
        "results": results,
    }
    path = out / "report.json"
    write_json(path, report)
    return path
