"""Command-line front end for the toy experiments.

Subcommands mirror the experiment stages; every command exits 0 on success
and 1 with the failing stage named on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .datasets import ExperimentConfig, generate_dataset
from .experiments import (
    autoencode_stage,
    barycentre_stage,
    build_geometry,
    interpolation_stage,
    reproduce_table1,
    run_experiment,
)
from .training import TrainConfig, isomap_distances_auto, local_pca_frame, save_checkpoint, train


def _add_config_flags(p):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--dataset", choices=["hyperbolic_branch", "circle_arc", "spiral"])
    p.add_argument("--geometry", choices=["hyperbolic", "spherical", "learned"])
    p.add_argument("--n-points", type=int)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--halfwidth", type=float)
    p.add_argument("--alpha-sub", type=float)
    p.add_argument("--alpha-iso", type=float)
    p.add_argument("--knn-k", type=int)
    p.add_argument("--output-dir", "-o")


_DEFAULT_GEOMETRY = {"hyperbolic_branch": "hyperbolic", "circle_arc": "spherical", "spiral": "learned"}


def _config_from_args(args) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    overrides = {
        "dataset": args.dataset,
        "geometry": args.geometry,
        "n_points": args.n_points,
        "noise_sigma": args.noise_sigma,
        "seed": args.seed,
        "halfwidth": args.halfwidth,
        "alpha_sub": args.alpha_sub,
        "alpha_iso": args.alpha_iso,
        "knn_k": args.knn_k,
        "output_dir": args.output_dir,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if "geometry" not in base:
        base["geometry"] = _DEFAULT_GEOMETRY[base.get("dataset", "hyperbolic_branch")]
    return ExperimentConfig(**base)


def _run_stage(args, stage_name, stage):
    cfg = _config_from_args(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    data, _ = generate_dataset(cfg)
    try:
        space = build_geometry(cfg, data)
        report = stage(space, data, cfg, cfg.output_dir)
    except Exception as exc:
        print(f"stage {stage_name} failed: {exc!r}", file=sys.stderr)
        return 1
    report["status"] = "ok"
    with open(os.path.join(cfg.output_dir, f"{stage_name}_summary.json"), "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
    print(json.dumps(report, indent=1, sort_keys=True))
    return 0


def cmd_generate(args):
    cfg = _config_from_args(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    try:
        data, _ = generate_dataset(cfg)
    except Exception as exc:
        print(f"stage generate failed: {exc!r}", file=sys.stderr)
        return 1
    path = os.path.join(cfg.output_dir, "data.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2"])
        for row in data:
            writer.writerow([repr(float(v)) for v in row])
    print(path)
    return 0


def cmd_train(args):
    cfg = _config_from_args(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    try:
        data, _ = generate_dataset(cfg)
        targets, k = isomap_distances_auto(data, cfg.knn_k)
        center = np.asarray(cfg.base_point, dtype=np.float64)
        orthogonal, _ = local_pca_frame(data, center, cfg.pca_radius)
        config = TrainConfig(
            alpha_sub=cfg.alpha_sub, alpha_iso=cfg.alpha_iso, seed=cfg.seed, knn_k=k,
            epochs=args.epochs,
        )
        phi, history = train(data, config, "identity", center, orthogonal, split_dim=1,
                             targets=targets)
    except Exception as exc:
        print(f"stage train failed: {exc!r}", file=sys.stderr)
        return 1
    ckpt = os.path.join(cfg.output_dir, "checkpoint.json")
    save_checkpoint(ckpt, phi, config, history)
    print(ckpt)
    for i, rec in enumerate(history):
        print(f"epoch {i + 1}: total {rec.full.total:.6f} (sub {rec.full.subspace_term:.6f})")
    return 0


def cmd_bench(args):
    from .datasets import hyperbolic_geometry, spherical_geometry
    from .diffeo import translation_diffeo
    from .pullback import PullbackSpace

    rng = np.random.default_rng(args.seed or 0)
    report = {}
    for name, space in [
        ("hyperbolic", hyperbolic_geometry()),
        ("spherical", spherical_geometry()),
        ("identity", PullbackSpace.of(translation_diffeo(np.zeros(2)))),
    ]:
        n = args.n_samples
        xs = rng.uniform(-1.5, 1.5, (n, 2))
        ys = rng.uniform(-1.5, 1.5, (n, 2))
        t0 = time.perf_counter()
        worst = 0.0
        for x, y in zip(xs, ys):
            v = space.log(x, y)
            worst = max(worst, float(np.max(np.abs(space.exp(x, v) - y))))
        dt = time.perf_counter() - t0
        report[name] = {"samples": n, "seconds": dt, "max_roundtrip_error": worst}
        print(f"{name}: {n} log/exp round trips in {dt:.2f}s, worst error {worst:.2e}")
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
    return 0


def cmd_reproduce_table1(args):
    def progress(row, elapsed):
        print(
            f"[{elapsed:7.1f}s] seed {row['seed']} {row['setting']}: "
            f"geodesic {row['geodesic_error_mean']:.3f} +- {row['geodesic_error_std']:.3f}, "
            f"variation {row['variation_error_mean']:.3f} +- {row['variation_error_std']:.3f}",
            flush=True,
        )

    try:
        rows, summary = reproduce_table1(
            seeds=tuple(args.seeds),
            out_dir=args.output_dir or "out/table1",
            n_points=args.n_points or 1024,
            noise_sigma=args.noise_sigma if args.noise_sigma is not None else 0.0,
            progress=progress,
        )
    except Exception as exc:
        print(f"stage reproduce-table1 failed: {exc!r}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def cmd_run(args):
    cfg = _config_from_args(args)
    summary = run_experiment(cfg)
    failed = [k for k, v in summary["stages"].items() if v.get("status") != "ok"]
    print(json.dumps(summary, indent=1, sort_keys=True))
    if failed:
        print(f"stage {failed[0]} failed", file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="pullgeo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a toy data set as CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="learn a diffeomorphism and write a checkpoint")
    _add_config_flags(p)
    p.add_argument("--epochs", type=int, default=20)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("interpolate", help="geodesic interpolation artifacts")
    _add_config_flags(p)
    p.set_defaults(func=lambda a: _run_stage(a, "interpolation", interpolation_stage))

    p = sub.add_parser("barycentre", help="barycentre and its stability artifacts")
    _add_config_flags(p)
    p.set_defaults(func=lambda a: _run_stage(a, "barycentre", barycentre_stage))

    p = sub.add_parser("autoencode", help="tangent-space logs and RAE projection")
    _add_config_flags(p)
    p.set_defaults(func=lambda a: _run_stage(a, "autoencode", autoencode_stage))

    p = sub.add_parser("run", help="full experiment bundle for one configuration")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="round-trip timing of the pullback mappings")
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("reproduce-table1", help="train the four settings over several seeds")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--n-points", type=int)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--output-dir", "-o")
    p.set_defaults(func=cmd_reproduce_table1)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
