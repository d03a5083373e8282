"""Shared fixtures; the trained desk-scale model is cached under _artifacts."""

import json
from pathlib import Path

import numpy as np
import pytest

from nfwchan import diffusion
from nfwchan.channel import dataset_scale, generate_channels
from nfwchan.config import SystemConfig
from nfwchan.denoiser import NetworkConfig, load_checkpoint, save_checkpoint

ARTIFACTS = Path(__file__).parent / "_artifacts"

DESK_CFG = SystemConfig(num_antennas=16, num_subcarriers=8, num_paths=4)
DESK_NET = NetworkConfig(hidden_features=32, num_blocks=3, height=16, width=8)
DESK_TRAIN = diffusion.TrainingConfig(epochs=30, batch_size=64, seed=0)
DESK_SAMPLES = 2000
DESK_DATA_SEED = 7
DESK_VAL_SPLIT = 1800


def desk_training_planes():
    channels = generate_channels(DESK_CFG, DESK_SAMPLES, DESK_DATA_SEED, tag=("ds", "train"))
    scale = dataset_scale(channels)
    return np.stack([channels.real, channels.imag], axis=1) / scale, scale


@pytest.fixture(scope="session")
def desk_model():
    """(params, schedule, scale, history, cfg) for the reference desk-scale run.

    Training takes ~12 minutes once; the checkpoint and loss history are
    cached on disk so later sessions load instead of retraining. Delete
    tests/_artifacts to force a retrain.
    """
    ARTIFACTS.mkdir(exist_ok=True)
    ckpt = ARTIFACTS / "desk.nfwn"
    hist_path = ARTIFACTS / "desk_history.json"
    schedule = diffusion.linear_schedule()
    if ckpt.exists() and hist_path.exists():
        params, scale, info = load_checkpoint(ckpt)
        assert info == (schedule.T, schedule.betas[0], schedule.betas[-1])
        history = [tuple(row) for row in json.loads(hist_path.read_text())]
        return params, schedule, scale, history, DESK_CFG
    planes, scale = desk_training_planes()
    params, history = diffusion.train(
        planes[:DESK_VAL_SPLIT], DESK_NET, schedule, DESK_TRAIN,
        val_dataset=planes[DESK_VAL_SPLIT:],
    )
    save_checkpoint(ckpt, params, schedule=schedule, scale=scale)
    hist_path.write_text(json.dumps(history))
    return params, schedule, scale, history, DESK_CFG
