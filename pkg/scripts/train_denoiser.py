"""End-to-end denoiser training: sample channels, normalize, train, checkpoint.

Defaults reproduce the desk-scale model used in the test suite fixtures
(16 x 8 geometry, 2000 realizations, 30 epochs). Scale up --antennas,
--subcarriers, --count, and --epochs for a production run.

    python3 scripts/train_denoiser.py --out model.nfwn --history history.csv
"""

import argparse
import sys

import numpy as np

from nfwchan.channel import dataset_scale, generate_channels
from nfwchan.config import SystemConfig
from nfwchan.denoiser import NetworkConfig, save_checkpoint
from nfwchan.diffusion import TrainingConfig, linear_schedule, train


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--antennas", type=int, default=16)
    ap.add_argument("--subcarriers", type=int, default=8)
    ap.add_argument("--paths", type=int, default=4)
    ap.add_argument("--count", type=int, default=2000)
    ap.add_argument("--val-fraction", type=float, default=0.1)
    ap.add_argument("--data-seed", type=int, default=7)
    ap.add_argument("--hidden", type=int, default=32)
    ap.add_argument("--blocks", type=int, default=3)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--lr", type=float, default=5e-4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    ap.add_argument("--history")
    args = ap.parse_args(argv)

    cfg = SystemConfig(num_antennas=args.antennas, num_subcarriers=args.subcarriers,
                       num_paths=args.paths)
    channels = generate_channels(cfg, args.count, args.data_seed, tag=("ds", "train"))
    scale = dataset_scale(channels)
    planes = np.stack([channels.real, channels.imag], axis=1) / scale
    split = int(round(len(planes) * (1.0 - args.val_fraction)))

    net_cfg = NetworkConfig(hidden_features=args.hidden, num_blocks=args.blocks,
                            height=cfg.num_antennas, width=cfg.num_subcarriers)
    schedule = linear_schedule(args.steps)
    tc = TrainingConfig(epochs=args.epochs, batch_size=args.batch,
                        learning_rate=args.lr, seed=args.seed)
    params, history = train(planes[:split], net_cfg, schedule, tc,
                            val_dataset=planes[split:], verbose=True)
    save_checkpoint(args.out, params, schedule=schedule, scale=scale)
    if args.history:
        with open(args.history, "w") as fh:
            fh.write("epoch,train_loss,val_loss\n")
            for epoch, tr, vl in history:
                fh.write(f"{epoch},{tr!r},{vl!r}\n")
    print(f"saved checkpoint to {args.out} (scale {scale:.6g})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
