"""Experiment harness: dataset generation, estimator registry, NMSE sweeps."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, asdict, field, replace

import numpy as np

from . import dataio, diffusion
from .channel import channel_matrix, generate_channels, sample_paths, subcarrier_frequencies
from .config import SystemConfig
from .denoiser import load_checkpoint
from .linear_est import LmmseFilter, ls_estimate, sample_covariance
from .observation import (
    MeasurementOperator,
    PilotConfig,
    complex_to_vec,
    observe,
    operator_from_pilots,
    snr_to_noise_power,
    vec_to_complex,
)
from .rng import substream
from .sparse_est import build_polar_dictionary, omp_estimate, somp_estimate

SWEEP_VARIABLES = ("snr", "paths", "distance", "bandwidth")
ESTIMATORS = ("ls", "lmmse", "pomp", "psomp", "diffusion")


def nmse(h_hat: np.ndarray, h: np.ndarray) -> float:
    """||h_hat - h||^2 / ||h||^2."""
    denom = float(np.linalg.norm(h) ** 2)
    if denom == 0:
        raise ValueError("true channel has zero energy")
    return float(np.linalg.norm(h_hat - h) ** 2) / denom


@dataclass(frozen=True)
class ExperimentSpec:
    sweep: str = "snr"
    grid: tuple = (0.0, 10.0, 20.0)
    trials: int = 100
    estimators: tuple = ("ls",)
    config: SystemConfig = field(default_factory=SystemConfig)
    seed: int = 0
    snr_db: float = 10.0            # held fixed for non-SNR sweeps
    checkpoint: str | None = None   # diffusion model, required for "diffusion"
    cov_samples: int = 2000         # training samples behind the LMMSE covariance
    cov_ridge: float = 1e-3
    num_angles: int = 64
    num_rings: int = 3
    beta_res: float = 1.2
    sparsity: int | None = None     # defaults to 2 L
    carrier_dictionary: bool = False  # force f_c dictionary on all subcarriers

    def __post_init__(self):
        if self.sweep not in SWEEP_VARIABLES:
            raise ValueError(f"sweep must be one of {SWEEP_VARIABLES}")
        if not self.grid:
            raise ValueError("grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for est in self.estimators:
            if est not in ESTIMATORS:
                raise ValueError(f"unknown estimator {est!r}")


@dataclass(frozen=True)
class ResultRow:
    sweep: str
    value: float
    estimator: str
    mean_nmse: float
    std_nmse: float
    trials: int
    wall_time: float    # seconds per estimate

    def __post_init__(self):
        if self.mean_nmse < 0:
            raise ValueError("NMSE must be nonnegative")


def generate_dataset(cfg: SystemConfig, count: int, seed: int, out_path, split: str = "train"):
    """Write `count` independent channel realizations; split tags give disjoint streams."""
    channels = generate_channels(cfg, count, seed, tag=("dataset", split))
    dataio.write_complex_batch(out_path, channels, magic=dataio.MAGIC_CHANNELS)
    return out_path


def _apply_sweep(cfg: SystemConfig, sweep: str, value: float) -> tuple[SystemConfig, float | None]:
    """Returns (adjusted config, snr override or None)."""
    if sweep == "snr":
        return cfg, float(value)
    if sweep == "paths":
        return cfg.with_overrides(num_paths=int(value)), None
    if sweep == "distance":
        return cfg.with_overrides(distance_range=(float(value), float(value))), None
    if sweep == "bandwidth":
        return cfg.with_overrides(bandwidth=float(value)), None
    raise ValueError(sweep)


class _GridContext:
    """Per-grid-point estimator state (dictionaries, covariance, model)."""

    def __init__(self, spec: ExperimentSpec, cfg: SystemConfig, pc: PilotConfig, gi: int):
        self.cfg = cfg
        self.pc = pc
        self.op = operator_from_pilots(pc, cfg)
        self.sparsity = spec.sparsity if spec.sparsity is not None else 2 * cfg.num_paths
        self.dicts = None
        self.lmmse = None
        self.model = None
        if any(e in spec.estimators for e in ("pomp", "psomp")):
            freqs = subcarrier_frequencies(cfg)
            if spec.carrier_dictionary:
                D = build_polar_dictionary(cfg, cfg.carrier_freq, spec.num_angles,
                                           spec.num_rings, spec.beta_res)
                self.dicts = [D] * cfg.num_subcarriers
            else:
                self.dicts = [
                    build_polar_dictionary(cfg, f, spec.num_angles, spec.num_rings, spec.beta_res)
                    for f in freqs
                ]
        if "lmmse" in spec.estimators:
            samples = generate_channels(cfg, spec.cov_samples, spec.seed, tag=("cov", gi))
            flat = np.stack([complex_to_vec(s) for s in samples])
            cov = sample_covariance(flat, ridge=spec.cov_ridge)
            self.lmmse = LmmseFilter(cov, pc.noise_power, pc.power)
        if "diffusion" in spec.estimators:
            if spec.checkpoint is None:
                raise FileNotFoundError("diffusion estimator requires a checkpoint path")
            params, scale, info = load_checkpoint(spec.checkpoint)
            if info is None:
                raise ValueError("checkpoint carries no noise-schedule metadata")
            T, b0, b1 = info
            self.model = (params, scale, diffusion.linear_schedule(T, b0, b1))

    def run(self, name: str, Y: np.ndarray, rng) -> np.ndarray:
        cfg, pc = self.cfg, self.pc
        if name == "ls":
            h = ls_estimate(complex_to_vec(Y), self.op, pc)
            return vec_to_complex(h, cfg.num_antennas, cfg.num_subcarriers)
        if name == "lmmse":
            h = ls_estimate(complex_to_vec(Y), self.op, pc)
            return vec_to_complex(self.lmmse(h), cfg.num_antennas, cfg.num_subcarriers)
        if name == "pomp":
            symbols = pc.symbol_vector(cfg.num_subcarriers)
            cols = [
                omp_estimate(Y[:, m], self.dicts[m], pc, self.sparsity, symbols[m])
                for m in range(cfg.num_subcarriers)
            ]
            return np.stack(cols, axis=1)
        if name == "psomp":
            return somp_estimate(Y, self.dicts, pc, self.sparsity)
        if name == "diffusion":
            params, scale, schedule = self.model
            return diffusion.estimate_channel(Y, self.op, pc.noise_power, params,
                                              schedule, scale, rng)
        raise ValueError(name)


def run_sweep(spec: ExperimentSpec, output=None, dump_trials: bool = False):
    """Run the sweep; returns (rows, per_trial) and optionally writes CSV."""
    rows: list[ResultRow] = []
    per_trial: list[tuple] = []
    for gi, value in enumerate(spec.grid):
        cfg, snr = _apply_sweep(spec.config, spec.sweep, value)
        snr_db = spec.snr_db if snr is None else snr
        pc = PilotConfig(power=1.0, noise_power=snr_to_noise_power(snr_db, 1.0))
        ctx = _GridContext(spec, cfg, pc, gi)
        errors = {name: [] for name in spec.estimators}
        times = {name: 0.0 for name in spec.estimators}
        for ti in range(spec.trials):
            chan_rng = substream(spec.seed, "trial", gi, ti, "channel")
            paths = sample_paths(cfg, chan_rng)
            H = channel_matrix(paths, cfg)
            Y = observe(H, pc, substream(spec.seed, "trial", gi, ti, "noise"))
            for name in spec.estimators:
                est_rng = substream(spec.seed, "trial", gi, ti, name)
                start = time.perf_counter()
                H_hat = ctx.run(name, Y, est_rng)
                times[name] += time.perf_counter() - start
                err = nmse(H_hat, H.entries)
                errors[name].append(err)
                per_trial.append((value, name, ti, err))
        for name in spec.estimators:
            e = np.array(errors[name])
            rows.append(ResultRow(
                sweep=spec.sweep, value=float(value), estimator=name,
                mean_nmse=float(e.mean()), std_nmse=float(e.std()),
                trials=spec.trials, wall_time=times[name] / spec.trials,
            ))
    if output is not None:
        write_csv(output, spec, rows)
        if dump_trials:
            _write_trials(str(output) + ".trials.csv", per_trial)
    return rows, per_trial


def spec_metadata(spec: ExperimentSpec) -> dict:
    meta = asdict(spec)
    meta["config"] = asdict(spec.config)
    return meta


def spec_from_metadata(meta: dict) -> ExperimentSpec:
    meta = dict(meta)
    cfg_kwargs = dict(meta.pop("config"))
    cfg_kwargs["angle_range"] = tuple(cfg_kwargs["angle_range"])
    cfg_kwargs["distance_range"] = tuple(cfg_kwargs["distance_range"])
    meta["config"] = SystemConfig(**cfg_kwargs)
    meta["grid"] = tuple(meta["grid"])
    meta["estimators"] = tuple(meta["estimators"])
    return ExperimentSpec(**meta)


CSV_COLUMNS = ("sweep", "value", "estimator", "mean_nmse", "std_nmse", "trials", "wall_time")


def write_csv(path, spec: ExperimentSpec, rows: list[ResultRow]) -> None:
    with open(path, "w") as fh:
        fh.write("# meta: " + json.dumps(spec_metadata(spec), sort_keys=True) + "\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in rows:
            fh.write(f"{r.sweep},{r.value!r},{r.estimator},{r.mean_nmse!r},"
                     f"{r.std_nmse!r},{r.trials},{r.wall_time!r}\n")


def _write_trials(path, per_trial) -> None:
    with open(path, "w") as fh:
        fh.write("value,estimator,trial,nmse\n")
        for value, name, ti, err in per_trial:
            fh.write(f"{value!r},{name},{ti},{err!r}\n")


def read_csv(path):
    """Returns (spec metadata dict or None, list of row dicts)."""
    meta = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# meta:"):
                meta = json.loads(line[len("# meta:"):])
                continue
            if not line or line.startswith(CSV_COLUMNS[0] + ","):
                continue
            parts = line.split(",")
            rows.append({
                "sweep": parts[0], "value": float(parts[1]), "estimator": parts[2],
                "mean_nmse": float(parts[3]), "std_nmse": float(parts[4]),
                "trials": int(parts[5]), "wall_time": float(parts[6]),
            })
    return meta, rows


def rerun_from_csv(path, output=None):
    """Re-run the experiment recorded in a CSV's metadata header."""
    meta, _ = read_csv(path)
    if meta is None:
        raise ValueError("CSV carries no metadata header")
    spec = spec_from_metadata(meta)
    return run_sweep(spec, output=output)
