"""NMSE-vs-SNR comparison of all estimators on one geometry.

The diffusion estimator joins the comparison when --checkpoint points at a
model trained on the same geometry (see scripts/train_denoiser.py).

    python3 scripts/estimator_sweep.py --antennas 16 --subcarriers 8 \
        --checkpoint model.nfwn --out sweep.csv
"""

import argparse
import sys

from nfwchan.bench import ExperimentSpec, run_sweep
from nfwchan.config import SystemConfig


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--antennas", type=int, default=16)
    ap.add_argument("--subcarriers", type=int, default=8)
    ap.add_argument("--paths", type=int, default=4)
    ap.add_argument("--snr-grid", type=float, nargs="+",
                    default=[-5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--estimators", default="ls,lmmse,omp,somp")
    ap.add_argument("--checkpoint", help="adds the diffusion estimator")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    estimators = tuple(args.estimators.split(","))
    if args.checkpoint and "diffusion" not in estimators:
        estimators = estimators + ("diffusion",)
    cfg = SystemConfig(num_antennas=args.antennas, num_subcarriers=args.subcarriers,
                       num_paths=args.paths)
    spec = ExperimentSpec(sweep="snr", grid=tuple(args.snr_grid), trials=args.trials,
                          estimators=estimators, config=cfg, seed=args.seed,
                          checkpoint=args.checkpoint)
    rows, _ = run_sweep(spec, output=args.out)
    for r in rows:
        print(f"snr {r.value:>6.1f}  {r.estimator:<10}  NMSE {r.mean_nmse:.6g}")
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
