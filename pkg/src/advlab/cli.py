"""Command-line interface.

Subcommands: train, attack, sweep, rubbish, fool, transfer, ensemble,
reproduce, bench. Results print as JSON on stdout; files (checkpoints,
histories, CSV sweeps, PGM grids, reports) land in --out-dir. Exit status
is 0 on success and 1 on any runtime failure, with the reason on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import zoo
from .attacks import ATTACK_KINDS, AttackConfig, epsilon_sweep
from .checkpoint import load_checkpoint, save_checkpoint
from .data import load_mnist, resolve_data_dir
from .harness import (
    RECIPES,
    _grid_pgm,
    attack_eval,
    config_fingerprint,
    run_experiment,
    transfer_eval,
    write_json,
)
from .kernels import load_backend
from .models import predict_metrics
from .numerics import RngStream
from .rubbish import generate_fooling_images, rubbish_error, sample_gaussian_rubbish

TRAINERS = {
    "logistic": lambda train, a: zoo.train_logistic_3v7(train, a.seed),
    "softmax": lambda train, a: zoo.train_softmax(train, a.seed),
    "maxout": lambda train, a: zoo.train_naive_maxout(train, a.seed),
    "adversarial-maxout": lambda train, a: zoo.train_adversarial_maxout(
        train, a.seed, a.alpha, a.epsilon
    ),
    "noise-maxout": lambda train, a: zoo.train_noise_maxout(
        train, a.noise_kind, a.seed, a.epsilon
    ),
    "sigmoid-maxout": lambda train, a: zoo.train_sigmoid_maxout(train, a.seed),
    "rbf": lambda train, a: zoo.train_rbf(train, a.seed),
}


def _emit(payload: dict):
    json.dump(payload, sys.stdout, sort_keys=True, indent=2, allow_nan=False)
    sys.stdout.write("\n")


def _load_test(args):
    _, test = load_mnist(resolve_data_dir(args.data_dir))
    return test


def cmd_train(args) -> int:
    train, test = load_mnist(resolve_data_dir(args.data_dir))
    model, hist, cfg = TRAINERS[args.model](train, args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = args.model.replace("-", "_")
    ckpt = out / f"{name}.ckpt"
    save_checkpoint(ckpt, model, config_fingerprint(cfg.to_dict()))
    hist.write_csv(out / f"{name}_history.csv")
    if args.model == "logistic":
        from .data import binary_subset

        test = binary_subset(test, 3, 7)
    clean = predict_metrics(model, test)
    adv = attack_eval(model, test, AttackConfig("fgsm", args.epsilon))
    _emit(
        {
            "model": args.model,
            "checkpoint": str(ckpt),
            "stopping_epoch": hist.stopping_epoch,
            "best_epoch": hist.best_epoch,
            "clean": clean.to_dict(),
            "fgsm": adv.to_dict(),
        }
    )
    return 0


def cmd_attack(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    test = _load_test(args)
    if args.limit:
        test = test.subset(np.arange(min(args.limit, len(test))))
    rng = RngStream(args.seed, "noise")
    attack = AttackConfig(args.kind, args.epsilon, clamp=(0.0, 1.0) if args.clamp else None)
    metrics = attack_eval(model, test, attack, rng)
    _emit(
        {
            "kind": args.kind,
            "epsilon": args.epsilon,
            "n": len(test),
            "metrics": metrics.to_dict(),
        }
    )
    return 0


def cmd_sweep(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    test = _load_test(args)
    n = int(round(args.half_range / args.step))
    grid = (np.arange(2 * n + 1) - n) * args.step
    result = epsilon_sweep(model, test.inputs[args.index], int(test.labels[args.index]), grid)
    result.write_csv(args.out)
    _emit(
        {
            "index": args.index,
            "grid_points": int(grid.size),
            "out": str(args.out),
            "correct_at_zero": bool(result.correct[n]),
        }
    )
    return 0


def cmd_rubbish(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    samples = sample_gaussian_rubbish(args.n, model.input_dim, RngStream(args.seed, "rubbish"))
    report = rubbish_error(model, samples, threshold=args.threshold)
    _emit(report.to_dict())
    return 0


def cmd_fool(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    result = generate_fooling_images(
        model,
        args.target,
        args.epsilon,
        RngStream(args.seed, "rubbish").split(f"class{args.target}"),
        max_attempts=args.attempts,
    )
    if args.out_dir and result.samples.shape[0]:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _grid_pgm(out / f"fooling_class{args.target}.pgm", result.samples, rescale=True)
    _emit(result.to_dict())
    return 0


def cmd_transfer(args) -> int:
    source, _ = load_checkpoint(args.source)
    target, _ = load_checkpoint(args.target)
    test = _load_test(args)
    report = transfer_eval(
        source, target, test, AttackConfig("fgsm", args.epsilon)
    )
    _emit(report.to_dict())
    return 0


def cmd_ensemble(args) -> int:
    train, test = load_mnist(resolve_data_dir(args.data_dir))
    seeds = tuple(int(s) for s in args.seeds.split(","))
    ensemble, histories = zoo.train_maxout_ensemble(train, seeds)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "ensemble.ckpt", ensemble, config_fingerprint({"seeds": list(seeds)}))
    for i, hist in enumerate(histories):
        hist.write_csv(out / f"member_{i}_history.csv")
    attack = AttackConfig("fgsm", args.epsilon)
    _emit(
        {
            "seeds": list(seeds),
            "checkpoint": str(out / "ensemble.ckpt"),
            "clean": predict_metrics(ensemble, test).to_dict(),
            "fgsm": attack_eval(ensemble, test, attack).to_dict(),
        }
    )
    return 0


def cmd_reproduce(args) -> int:
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
        config["recipe"] = args.recipe
    else:
        config = {"recipe": args.recipe}
    for key in ("seed", "epsilon", "alpha", "data_dir"):
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    path = run_experiment(config, out_dir=args.out_dir)
    _emit({"recipe": args.recipe, "report": str(path)})
    return 0


def cmd_bench(args) -> int:
    rng = np.random.default_rng(0)
    z = rng.standard_normal((args.batch, args.units, args.pieces))
    logits = rng.standard_normal((args.batch, 10))
    labels = rng.integers(0, 10, size=args.batch)
    dh = rng.standard_normal((args.batch, args.units))
    rows = {}
    for name in ("numpy", "cython"):
        try:
            impl = load_backend(name)
        except ImportError:
            rows[name] = None
            continue
        hmax, amax = impl.maxout_reduce(z)
        timings = {}
        for label, fn in (
            ("maxout_reduce", lambda: impl.maxout_reduce(z)),
            ("maxout_scatter", lambda: impl.maxout_scatter(dh, amax, args.pieces)),
            ("softmax_xent", lambda: impl.softmax_xent(logits, labels)),
        ):
            best = min(
                _time_once(fn, args.repeats) for _ in range(3)
            )
            timings[label] = best
        rows[name] = timings
    report = {"batch": args.batch, "units": args.units, "pieces": args.pieces, "per_call_seconds": rows}
    if rows["numpy"] and rows["cython"]:
        report["speedup_cython_over_numpy"] = {
            k: rows["numpy"][k] / rows["cython"][k] for k in rows["numpy"]
        }
    _emit(report)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "bench.json", report)
    return 0


def _time_once(fn, repeats: int) -> float:
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advlab",
        description="Sign-gradient attacks, adversarial training, and "
        "reproducible experiments on MNIST.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, data=True, seed=True, epsilon=True):
        if data:
            p.add_argument("--data-dir", default=None, help="IDX data directory (or ADVLAB_DATA)")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if epsilon:
            p.add_argument("--epsilon", type=float, default=0.25)

    p = sub.add_parser("train", help="train one model and checkpoint it")
    p.add_argument("model", choices=sorted(TRAINERS))
    common(p)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--noise-kind", choices=("random_sign", "uniform"), default="random_sign")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="evaluate a checkpoint under perturbation")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kind", choices=ATTACK_KINDS, default="fgsm")
    p.add_argument("--limit", type=int, default=0, help="evaluate only the first N test rows")
    p.add_argument("--clamp", action="store_true", help="clip perturbed inputs to [0, 1]")
    common(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("sweep", help="logit trace along the sign-gradient ray")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--index", type=int, default=0, help="test-set example index")
    p.add_argument("--half-range", type=float, default=0.5)
    p.add_argument("--step", type=float, default=0.005)
    p.add_argument("--out", default="sweep.csv")
    common(p, seed=False, epsilon=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rubbish", help="confidence on isotropic noise inputs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--threshold", type=float, default=0.5)
    common(p, data=False, epsilon=False)
    p.set_defaults(func=cmd_rubbish)

    p = sub.add_parser("fool", help="one-step noise perturbations toward a class")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--attempts", type=int, default=200)
    p.add_argument("--out-dir", default=None)
    common(p, data=False)
    p.set_defaults(func=cmd_fool)

    p = sub.add_parser("transfer", help="agreement between two checkpoints on one's adversarial examples")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    common(p, seed=False)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("ensemble", help="train member models and evaluate their probability average")
    p.add_argument("--seeds", default=",".join(str(s) for s in zoo.ENSEMBLE_SEEDS))
    p.add_argument("--out-dir", default=".")
    common(p, seed=False)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("reproduce", help="run a named experiment recipe end to end")
    p.add_argument("recipe", choices=sorted(RECIPES))
    p.add_argument("--config", default=None, help="JSON file of recipe options")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("bench", help="time the hot kernels on each backend")
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--units", type=int, default=240)
    p.add_argument("--pieces", type=int, default=4)
    p.add_argument("--repeats", type=int, default=50)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, FloatingPointError, OSError) as exc:
        print(f"advlab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
