"""Closed-form antenna / subcarrier correlation magnitudes and a Monte-Carlo oracle.

The closed forms linearize the element phase in the angular offset (Laplacian
power angle spectrum) and distance offset (exponential power delay profile).
The oracle samples the exact densities and evaluates the exact phase, so the
two agree only up to linearization error; tests budget 5% relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .rng import substream


@dataclass(frozen=True)
class CorrelationParams:
    mean_angle: float = math.pi / 6      # phi_bar_0, radians
    angle_std: float = 0.1               # sigma_phi, radians
    mean_distance: float = 10.0          # r_bar_0, meters
    distance_std: float = 1.0            # sigma_psi, meters
    gain_var: float = 1.0                # sigma_alpha^2

    def __post_init__(self):
        if self.angle_std <= 0 or self.distance_std <= 0:
            raise ValueError("angle_std and distance_std must be positive")
        if self.mean_distance <= 0:
            raise ValueError("mean_distance must be positive")
        if self.gain_var <= 0:
            raise ValueError("gain_var must be positive")

    @property
    def mean_spatial_angle(self) -> float:
        """theta_bar_0 = sin(phi_bar_0)."""
        return math.sin(self.mean_angle)

    @property
    def mean_curvature(self) -> float:
        """xi_bar_0 = cos^2(phi_bar_0) / (2 r_bar_0)."""
        return math.cos(self.mean_angle) ** 2 / (2.0 * self.mean_distance)

    @property
    def pas_norm(self) -> float:
        """beta = 1 / (1 - exp(-sqrt(2) pi / sigma_phi)) of the truncated Laplacian."""
        return 1.0 / (1.0 - math.exp(-math.sqrt(2.0) * math.pi / self.angle_std))


def _angular_factor(omega: float, p: CorrelationParams) -> float:
    """Characteristic integral of the truncated Laplacian PAS at frequency omega.

    Equals 1 at omega = 0 by the beta normalization.
    """
    s = p.angle_std
    beta = p.pas_norm
    w = 2.0 * np.pi * omega
    boundary = math.exp(-math.sqrt(2.0) * math.pi / s) * (
        -math.sqrt(2.0) / s * np.cos(np.pi * w) + w * np.sin(np.pi * w)
    )
    return (math.sqrt(2.0) * s * beta) / (2.0 + s**2 * w**2) * (boundary + math.sqrt(2.0) / s)


def antenna_corr_magnitude(
    n: int, delta_n: int, f_m: float, p: CorrelationParams, cfg: SystemConfig
) -> float:
    """|R_a(n, f_m)| between antennas n and n + delta_n at subcarrier frequency f_m."""
    if n < 0 or n + delta_n >= cfg.num_antennas:
        raise ValueError("antenna indices out of range")
    d = cfg.spacing
    c = cfg.speed_of_light
    span = 2 * n * delta_n + delta_n**2
    omega = (
        f_m * delta_n * d * math.cos(p.mean_angle) / c
        + f_m * span * d**2 * math.sin(2 * p.mean_angle) / (2 * c * p.mean_distance)
    )
    kappa = 2 * np.pi * f_m * span * d**2 * p.mean_curvature * p.distance_std / (
        c * p.mean_distance
    )
    return p.gain_var * abs(_angular_factor(omega, p)) / math.sqrt(1.0 + kappa**2)


def subcarrier_corr_magnitude(
    delta_m: int, n: int, p: CorrelationParams, cfg: SystemConfig
) -> float:
    """|R_s(delta_m, n)| between subcarriers m and m + delta_m at antenna n."""
    if delta_m < 0:
        raise ValueError("delta_m must be nonnegative")
    if n < 0 or n >= cfg.num_antennas:
        raise ValueError("antenna index out of range")
    d = cfg.spacing
    c = cfg.speed_of_light
    f_s = cfg.bandwidth / cfg.num_subcarriers
    omega = (delta_m * f_s / c) * (
        n * d * math.cos(p.mean_angle)
        + n**2 * d**2 * math.sin(2 * p.mean_angle) / (2 * p.mean_distance)
    )
    kappa = (2 * np.pi * delta_m * f_s * p.distance_std / c) * (
        1.0 - n**2 * d**2 * p.mean_curvature / p.mean_distance
    )
    return p.gain_var * abs(_angular_factor(omega, p)) / math.sqrt(1.0 + kappa**2)


def sample_pas_offsets(p: CorrelationParams, num_draws: int, rng: np.random.Generator):
    """Inverse-CDF draws from the truncated Laplacian PAS on [-pi, pi)."""
    a = math.sqrt(2.0) / p.angle_std
    u = rng.uniform(size=num_draws)
    mag = -np.log1p(-u * (1.0 - math.exp(-a * np.pi))) / a
    sign = np.where(rng.uniform(size=num_draws) < 0.5, -1.0, 1.0)
    return sign * mag


def empirical_corr_oracle(
    kind: str,
    indices: tuple[int, int],
    p: CorrelationParams,
    cfg: SystemConfig,
    num_draws: int = 10**6,
    seed: int = 0,
    f_m: float | None = None,
) -> float:
    """Monte-Carlo |E[h h*]| with the exact (non-linearized) single-path phase.

    ``indices`` is (n, delta_n) for kind "antenna" and (delta_m, n) for
    kind "subcarrier".
    """
    if num_draws < 10**3:
        raise ValueError("num_draws must be at least 1000")
    rng = substream(seed, "corr-oracle", kind, *indices)
    phi = sample_pas_offsets(p, num_draws, rng)
    psi = rng.exponential(scale=p.distance_std, size=num_draws)

    theta0 = np.sin(p.mean_angle - phi)
    r0 = p.mean_distance + psi
    xi0 = (1.0 - theta0**2) / (2.0 * r0)
    d = cfg.spacing
    c = cfg.speed_of_light

    if kind == "antenna":
        n, delta_n = indices
        f = cfg.carrier_freq if f_m is None else f_m
        span = 2 * n * delta_n + delta_n**2
        phase = (2 * np.pi * f / c) * (span * d**2 * xi0 - delta_n * d * theta0)
    elif kind == "subcarrier":
        delta_m, n = indices
        f_s = cfg.bandwidth / cfg.num_subcarriers
        phase = -(2 * np.pi * delta_m * f_s / c) * (n * d * theta0 - n**2 * d**2 * xi0 - r0)
    else:
        raise ValueError("kind must be 'antenna' or 'subcarrier'")

    return p.gain_var * abs(np.mean(np.exp(1j * phase)))
