"""Command-line interface: gen-data, train, estimate, corr, sweep, report.

A `--config` file (key = value lines, see config.py) overrides geometry
flags. NFWCHAN_THREADS caps trial-level parallelism (default 1, sequential);
results are identical either way because every trial has its own RNG stream.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench, dataio, diffusion
from .channel import dataset_scale
from .config import SystemConfig, load_config
from .correlation import (
    CorrelationParams,
    antenna_corr_magnitude,
    empirical_corr_oracle,
    subcarrier_corr_magnitude,
)
from .denoiser import NetworkConfig, save_checkpoint


def _add_geometry_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; overrides geometry flags")
    p.add_argument("--antennas", type=int, default=32)
    p.add_argument("--subcarriers", type=int, default=16)
    p.add_argument("--carrier-freq", type=float, default=60e9)
    p.add_argument("--bandwidth", type=float, default=6.4e9)
    p.add_argument("--paths", type=int, default=4)


def _system_config(args) -> SystemConfig:
    if args.config:
        return load_config(args.config)
    return SystemConfig(
        num_antennas=args.antennas,
        num_subcarriers=args.subcarriers,
        carrier_freq=args.carrier_freq,
        bandwidth=args.bandwidth,
        num_paths=args.paths,
    )


def cmd_gen_data(args) -> int:
    cfg = _system_config(args)
    bench.generate_dataset(cfg, args.count, args.seed, args.out, split=args.split)
    print(f"wrote {args.count} realizations to {args.out}")
    return 0


def cmd_train(args) -> int:
    channels, _ = dataio.read_complex_batch(args.data, dataio.MAGIC_CHANNELS)
    scale = dataset_scale(channels)
    planes = np.stack([channels.real, channels.imag], axis=1) / scale
    val_planes = None
    if args.val_data:
        val_channels, _ = dataio.read_complex_batch(args.val_data, dataio.MAGIC_CHANNELS)
        val_planes = np.stack([val_channels.real, val_channels.imag], axis=1) / scale

    _, _, N, M = planes.shape
    net_cfg = NetworkConfig(hidden_features=args.hidden, num_blocks=args.blocks,
                            height=N, width=M)
    schedule = diffusion.linear_schedule(args.steps, args.beta_start, args.beta_end)
    tc = diffusion.TrainingConfig(epochs=args.epochs, batch_size=args.batch,
                                  learning_rate=args.lr, seed=args.seed)
    params, history = diffusion.train(planes, net_cfg, schedule, tc,
                                      val_dataset=val_planes, verbose=True)
    save_checkpoint(args.out, params, schedule=schedule, scale=scale)
    if args.history:
        with open(args.history, "w") as fh:
            fh.write("epoch,train_loss,val_loss\n")
            for epoch, tr, vl in history:
                fh.write(f"{epoch},{tr!r},{vl!r}\n")
    print(f"saved checkpoint to {args.out} (scale {scale:.6g})")
    return 0


def cmd_estimate(args) -> int:
    cfg = _system_config(args)
    spec = bench.ExperimentSpec(
        sweep="snr", grid=(args.snr,), trials=args.trials,
        estimators=tuple(args.estimators.split(",")), config=cfg, seed=args.seed,
        checkpoint=args.checkpoint, num_angles=args.num_angles,
        num_rings=args.num_rings, sparsity=args.sparsity,
    )
    rows, _ = bench.run_sweep(spec)
    for r in rows:
        print(f"{r.estimator}: mean NMSE {r.mean_nmse:.6g} "
              f"({r.trials} trials, {r.wall_time * 1e3:.1f} ms/estimate)")
    return 0


def cmd_corr(args) -> int:
    cfg = _system_config(args)
    p = CorrelationParams(angle_std=args.angle_std, distance_std=args.distance_std,
                          mean_distance=args.mean_distance)
    lines = ["kind,index,lag,closed_form,monte_carlo,rel_err"]
    if args.kind == "antenna":
        for n in range(0, cfg.num_antennas - args.lag, max(args.stride, 1)):
            cf = antenna_corr_magnitude(n, args.lag, cfg.carrier_freq, p, cfg)
            mc = empirical_corr_oracle("antenna", (n, args.lag), p, cfg,
                                       num_draws=args.draws, seed=args.seed)
            lines.append(f"antenna,{n},{args.lag},{cf!r},{mc!r},{abs(cf - mc) / mc!r}")
    else:
        for n in range(0, cfg.num_antennas, max(args.stride, 1)):
            cf = subcarrier_corr_magnitude(args.lag, n, p, cfg)
            mc = empirical_corr_oracle("subcarrier", (args.lag, n), p, cfg,
                                       num_draws=args.draws, seed=args.seed)
            lines.append(f"subcarrier,{n},{args.lag},{cf!r},{mc!r},{abs(cf - mc) / mc!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    cfg = _system_config(args)
    spec = bench.ExperimentSpec(
        sweep=args.variable, grid=tuple(args.grid), trials=args.trials,
        estimators=tuple(args.estimators.split(",")), config=cfg, seed=args.seed,
        snr_db=args.snr, checkpoint=args.checkpoint, num_angles=args.num_angles,
        num_rings=args.num_rings, sparsity=args.sparsity,
    )
    rows, _ = bench.run_sweep(spec, output=args.out, dump_trials=args.dump_trials)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_report(args) -> int:
    meta, rows = bench.read_csv(args.csv)
    if meta is not None:
        print(f"sweep: {meta['sweep']}  seed: {meta['seed']}  trials: {meta['trials']}")
    width = max((len(r["estimator"]) for r in rows), default=8)
    print(f"{'value':>10}  {'estimator':<{width}}  {'mean NMSE':>12}  {'std':>12}")
    for r in rows:
        print(f"{r['value']:>10.4g}  {r['estimator']:<{width}}  "
              f"{r['mean_nmse']:>12.6g}  {r['std_nmse']:>12.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfwchan",
                                     description="Near-field wideband channel workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a channel dataset file")
    _add_geometry_flags(p)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", default="train")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the diffusion denoiser")
    p.add_argument("--data", required=True)
    p.add_argument("--val-data")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--beta-start", type=float, default=1e-4)
    p.add_argument("--beta-end", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--history")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("estimate", help="run estimators at one SNR and print NMSE")
    _add_geometry_flags(p)
    p.add_argument("--estimators", default="ls")
    p.add_argument("--snr", type=float, default=10.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint")
    p.add_argument("--num-angles", type=int, default=64)
    p.add_argument("--num-rings", type=int, default=3)
    p.add_argument("--sparsity", type=int)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("corr", help="closed-form vs Monte-Carlo correlation CSV")
    _add_geometry_flags(p)
    p.add_argument("--kind", choices=("antenna", "subcarrier"), default="antenna")
    p.add_argument("--lag", type=int, default=4)
    p.add_argument("--stride", type=int, default=8)
    p.add_argument("--draws", type=int, default=10**5)
    p.add_argument("--angle-std", type=float, default=0.1)
    p.add_argument("--distance-std", type=float, default=1.0)
    p.add_argument("--mean-distance", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("sweep", help="NMSE sweep over snr/paths/distance/bandwidth")
    _add_geometry_flags(p)
    p.add_argument("--variable", choices=bench.SWEEP_VARIABLES, default="snr")
    p.add_argument("--grid", type=float, nargs="+", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--estimators", default="ls")
    p.add_argument("--snr", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint")
    p.add_argument("--num-angles", type=int, default=64)
    p.add_argument("--num-rings", type=int, default=3)
    p.add_argument("--sparsity", type=int)
    p.add_argument("--dump-trials", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="pretty-print a sweep CSV")
    p.add_argument("csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    # thread cap for trial-level parallelism; vectorized numpy is unaffected
    os.environ.setdefault("NFWCHAN_THREADS", "1")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
