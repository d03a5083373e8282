"""Forward noising, denoiser training, and the posterior-sampling estimator.

The estimator runs the deterministic reverse update
h_{t-1} = (h_t + (1 - gamma_t) * posterior_score) / sqrt(gamma_t)
with the posterior score split into the learned prior score and the
measurement likelihood score of the vectorized pilot model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import denoiser
from .denoiser import DenoiserParams, NetworkConfig
from .observation import MeasurementOperator, planes_to_complex
from .rng import substream


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray            # (T,), strictly increasing in (0, 1)
    gammas: np.ndarray = field(init=False)
    gamma_bars: np.ndarray = field(init=False)

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=np.float64)
        if b.ndim != 1 or len(b) < 1:
            raise ValueError("betas must be a nonempty vector")
        if not (np.all(b > 0) and np.all(b < 1)):
            raise ValueError("betas must lie in (0, 1)")
        if len(b) > 1 and not np.all(np.diff(b) > 0):
            raise ValueError("betas must be strictly increasing")
        object.__setattr__(self, "gammas", 1.0 - b)
        object.__setattr__(self, "gamma_bars", np.cumprod(1.0 - b))

    @property
    def T(self) -> int:
        return len(self.betas)

    def gamma_bar(self, t: int) -> float:
        if not 1 <= t <= self.T:
            raise ValueError("step index out of range")
        return float(self.gamma_bars[t - 1])


def linear_schedule(T: int = 100, beta_start: float = 1e-4, beta_end: float = 0.2) -> NoiseSchedule:
    if not 0 < beta_start < beta_end < 1:
        raise ValueError("require 0 < beta_start < beta_end < 1")
    return NoiseSchedule(betas=np.linspace(beta_start, beta_end, T))


def forward_sample(h0: np.ndarray, t: int, schedule: NoiseSchedule, seed):
    """h_t = sqrt(gb_t) h0 + sqrt(1 - gb_t) eps; returns (h_t, eps)."""
    gb = schedule.gamma_bar(t)
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "fwd", t)
    eps = rng.standard_normal(h0.shape)
    return np.sqrt(gb) * h0 + np.sqrt(1.0 - gb) * eps, eps


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = 1.0
    lr_schedule: str = "constant"   # "cosine" anneals to 0 over the run
    seed: int = 0
    val_every: int = 1
    dtype: type = np.float32

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError("lr_schedule must be 'constant' or 'cosine'")

    def epoch_lr(self, epoch: int) -> float:
        if self.lr_schedule == "constant":
            return self.learning_rate
        return 0.5 * self.learning_rate * (1.0 + np.cos(np.pi * epoch / self.epochs))


class Adam:
    """Adaptive-moment stochastic gradient updates over named parameter slices."""

    def __init__(self, params: DenoiserParams, tc: TrainingConfig):
        self.tc = tc
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.step_count = 0

    def step(self, params: DenoiserParams, grads: dict, lr: float | None = None) -> None:
        tc = self.tc
        if lr is None:
            lr = tc.learning_rate
        self.step_count += 1
        b1c = 1.0 - tc.adam_beta1**self.step_count
        b2c = 1.0 - tc.adam_beta2**self.step_count
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= tc.adam_beta1
            m += (1 - tc.adam_beta1) * g
            v *= tc.adam_beta2
            v += (1 - tc.adam_beta2) * g * g
            params.tensors[name] -= lr * (m / b1c) / (np.sqrt(v / b2c) + tc.adam_eps)


def clip_gradients(grads: dict, max_norm: float) -> float:
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


def _epoch_loss(params, data, schedule, rng, batch_size):
    """Mean per-entry noise-prediction loss over a dataset, without updates."""
    losses = []
    for start in range(0, len(data), batch_size):
        batch = data[start : start + batch_size]
        t = rng.integers(1, schedule.T + 1, size=len(batch))
        eps = rng.standard_normal(batch.shape).astype(batch.dtype)
        gb = schedule.gamma_bars[t - 1].astype(batch.dtype)
        ht = (np.sqrt(gb)[:, None, None, None] * batch
              + np.sqrt(1 - gb)[:, None, None, None] * eps)
        pred = denoiser.forward(ht, t, params, schedule.T)
        losses.append(float(np.mean((pred - eps) ** 2)) * len(batch))
    return sum(losses) / len(data)


def train(
    dataset: np.ndarray,
    net_cfg: NetworkConfig,
    schedule: NoiseSchedule,
    tc: TrainingConfig,
    val_dataset: np.ndarray | None = None,
    verbose: bool = False,
):
    """Minibatch noise-prediction training; returns (best params, history).

    ``dataset`` holds normalized real channel tensors, shape (K, C_in, N, M).
    History rows: (epoch, train_loss, val_loss).
    """
    data = np.ascontiguousarray(dataset, dtype=tc.dtype)
    val = None if val_dataset is None else np.ascontiguousarray(val_dataset, dtype=tc.dtype)
    params = DenoiserParams.init(net_cfg, seed=tc.seed, dtype=tc.dtype)
    opt = Adam(params, tc)
    rng = substream(tc.seed, "train")

    history = []
    best_val = np.inf
    best_params = params.copy()
    for epoch in range(tc.epochs):
        lr = tc.epoch_lr(epoch)
        order = rng.permutation(len(data))
        epoch_losses = []
        for start in range(0, len(data), tc.batch_size):
            batch = data[order[start : start + tc.batch_size]]
            t = rng.integers(1, schedule.T + 1, size=len(batch))
            eps = rng.standard_normal(batch.shape).astype(tc.dtype)
            gb = schedule.gamma_bars[t - 1].astype(tc.dtype)
            ht = (np.sqrt(gb)[:, None, None, None] * batch
                  + np.sqrt(1 - gb)[:, None, None, None] * eps)
            pred, cache = denoiser.forward_with_cache(ht, t, params, schedule.T)
            diff = pred - eps
            loss = float(np.mean(diff**2))
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite training loss at epoch {epoch}")
            gout = (2.0 / diff.size) * diff
            grads, _ = denoiser.backward(params, cache, gout)
            clip_gradients(grads, tc.clip_norm)
            opt.step(params, grads, lr)
            epoch_losses.append(loss * len(batch))
        train_loss = sum(epoch_losses) / len(data)

        val_loss = np.nan
        if val is not None and (epoch + 1) % tc.val_every == 0:
            # same noise draw every epoch so best-val selection compares models,
            # not evaluation noise
            val_loss = _epoch_loss(params, val, schedule, substream(tc.seed, "val"), tc.batch_size)
            if val_loss < best_val:
                best_val = val_loss
                best_params = params.copy()
        history.append((epoch, train_loss, val_loss))
        if verbose:
            print(f"epoch {epoch:3d}  train {train_loss:.4f}  val {val_loss:.4f}", flush=True)

    if val is None:
        best_params = params
    return best_params.astype(np.float64), history


# --- scores and posterior sampling -----------------------------------------

def prior_score(h_t: np.ndarray, t: int, params: DenoiserParams, schedule: NoiseSchedule) -> np.ndarray:
    """-eps_theta(h_t, t) / sqrt(1 - gamma_bar_t)."""
    gb = schedule.gamma_bar(t)
    eps = denoiser.forward(h_t, t, params, schedule.T)
    return -eps / np.sqrt(1.0 - gb)


def likelihood_score(
    h_t: np.ndarray,
    y: np.ndarray,
    B: MeasurementOperator,
    t: int,
    noise_var: float,
    schedule: NoiseSchedule,
) -> np.ndarray:
    """(1/sqrt(gb)) B^T ((1-gb)/gb B B^T + noise_var I)^-1 (y - (1/sqrt(gb)) B h_t).

    Operates on (2, N, M) plane tensors; ``noise_var`` is the per-real-entry
    observation noise variance in the same (possibly normalized) units as y.
    """
    gb = schedule.gamma_bar(t)
    if gb == 0:
        raise ZeroDivisionError("gamma_bar is zero")
    root = np.sqrt(gb)
    resid = y - B.apply_planes(h_t) / root
    solved = B.solve_gram_planes((1.0 - gb) / gb, noise_var, resid)
    return B.apply_adjoint_planes(solved) / root


def likelihood_score_dense(h_t, y, B: MeasurementOperator, t, noise_var, schedule):
    """Dense real-block reference path for structural equivalence checks."""
    from .observation import planes_to_realvec, realvec_to_planes

    gb = schedule.gamma_bar(t)
    root = np.sqrt(gb)
    Br = B.dense_real_matrix()
    N, M = h_t.shape[1], h_t.shape[2]
    hv = planes_to_realvec(h_t)
    yv = planes_to_realvec(y)
    A = ((1.0 - gb) / gb) * (Br @ Br.T) + noise_var * np.eye(Br.shape[0])
    resid = yv - (Br @ hv) / root
    score = Br.T @ np.linalg.solve(A, resid) / root
    return realvec_to_planes(score, N, M)


def posterior_estimate(
    y_planes: np.ndarray,
    B: MeasurementOperator,
    noise_var: float,
    params: DenoiserParams,
    schedule: NoiseSchedule,
    seed,
    likelihood_weight: float = 1.0,
):
    """Deterministic reverse-diffusion posterior sampling from h_T ~ N(0, I).

    ``y_planes`` may be (2, N, M) or a batch (B, 2, N, M); estimates are
    produced jointly but independently per batch element.
    """
    batched = y_planes.ndim == 4
    y = y_planes if batched else y_planes[None]
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "posterior")
    h = rng.standard_normal(y.shape)
    for t in range(schedule.T, 0, -1):
        score = prior_score(h, t, params, schedule)
        if likelihood_weight != 0.0:
            for i in range(len(y)):
                score[i] += likelihood_weight * likelihood_score(
                    h[i], y[i], B, t, noise_var, schedule
                )
        gamma_t = schedule.gammas[t - 1]
        h = (h + (1.0 - gamma_t) * score) / np.sqrt(gamma_t)
        if not np.all(np.isfinite(h)):
            raise FloatingPointError(f"non-finite iterate at step {t}")
    return h if batched else h[0]


def estimate_channel(
    Y: np.ndarray,
    B: MeasurementOperator,
    noise_power: float,
    params: DenoiserParams,
    schedule: NoiseSchedule,
    scale: float,
    seed,
) -> np.ndarray:
    """End-to-end complex channel estimate from a complex observation matrix.

    The observation and the per-real-entry noise variance sigma_n^2 / 2 are
    mapped into the normalized space the denoiser was trained in, and the
    sampled output is mapped back.
    """
    y_planes = np.stack([Y.real, Y.imag], axis=-3) / scale
    noise_var = noise_power / (2.0 * scale**2)
    h = posterior_estimate(y_planes, B, noise_var, params, schedule, seed)
    if h.ndim == 4:
        return np.stack([planes_to_complex(p) * scale for p in h])
    return planes_to_complex(h) * scale
