"""Near-field wideband channel synthesis.

Spherical-wavefront steering with the Fresnel (second-order) distance
expansion, frequency-dependent across subcarriers, so both spatial
non-stationarity and beam split are present in generated realizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .rng import substream

# Below ~10 antenna spacings the quadratic distance expansion is no longer a
# sensible approximation of the true spherical wavefront.
MIN_DISTANCE_SPACINGS = 10.0


@dataclass(frozen=True)
class PathSet:
    """Per-path gains, spatial angles (sin of physical angle) and distances."""

    gains: np.ndarray       # complex, (L,)
    spatial_angles: np.ndarray  # theta = sin(phi), (L,)
    distances: np.ndarray   # meters, (L,)

    def __post_init__(self):
        L = len(self.gains)
        if len(self.spatial_angles) != L or len(self.distances) != L:
            raise ValueError("gains, spatial_angles, distances must have equal length")
        if np.any(np.abs(self.spatial_angles) > 1):
            raise ValueError("spatial angles must lie in [-1, 1]")
        if np.any(self.distances <= 0):
            raise ValueError("path distances must be positive")

    @property
    def num_paths(self) -> int:
        return len(self.gains)

    @property
    def curvatures(self) -> np.ndarray:
        """xi = (1 - theta^2) / (2 r) per path."""
        return (1.0 - self.spatial_angles**2) / (2.0 * self.distances)


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex N x M spatial-frequency channel realization."""

    entries: np.ndarray
    provenance: PathSet | None = None

    def __post_init__(self):
        if self.entries.ndim != 2:
            raise ValueError("channel entries must be a 2-D matrix")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("channel entries must be finite")

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class RealChannelTensor:
    """2 x N x M real view (plane 0 real part, plane 1 imaginary), divided by scale."""

    planes: np.ndarray
    scale: float

    def __post_init__(self):
        if self.planes.ndim != 3 or self.planes.shape[0] != 2:
            raise ValueError("planes must have shape (2, N, M)")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


def subcarrier_frequencies(cfg: SystemConfig) -> np.ndarray:
    """f_m = f_c + (B/M) (m - 1 - (M-1)/2) for m = 1..M."""
    m = np.arange(1, cfg.num_subcarriers + 1)
    return cfg.carrier_freq + (cfg.bandwidth / cfg.num_subcarriers) * (
        m - 1 - (cfg.num_subcarriers - 1) / 2
    )


def steering_vector(theta: float, r: float, f: float, cfg: SystemConfig) -> np.ndarray:
    """Unit-norm near-field steering vector at spatial angle theta, distance r, frequency f."""
    if abs(theta) > 1:
        raise ValueError("spatial angle must lie in [-1, 1]")
    if f <= 0:
        raise ValueError("frequency must be positive")
    d = cfg.spacing
    if not np.isinf(r):
        if r <= 0:
            raise ValueError("distance must be positive")
        if r < MIN_DISTANCE_SPACINGS * d:
            raise ValueError(
                f"distance {r} below Fresnel-region floor {MIN_DISTANCE_SPACINGS * d}"
            )
    n = np.arange(cfg.num_antennas)
    lam = cfg.speed_of_light / f
    xi = 0.0 if np.isinf(r) else (1.0 - theta**2) / (2.0 * r)
    # phase(n) = (2 pi / lambda) (r - r^(n)),  r^(n) = r + n^2 d^2 xi - n d theta
    phase = (2 * np.pi / lam) * (n * d * theta - n**2 * d**2 * xi)
    return np.exp(1j * phase) / np.sqrt(cfg.num_antennas)


def rayleigh_distance(cfg: SystemConfig) -> float:
    """2 D^2 / lambda_c with aperture D = (N - 1) d."""
    return 2.0 * cfg.aperture**2 / cfg.carrier_wavelength


def channel_matrix(paths: PathSet, cfg: SystemConfig) -> ChannelMatrix:
    """Column m = sqrt(N/L) sum_l alpha_l exp(-j 2 pi f_m r_l / c) a(theta_l, r_l, f_m)."""
    if paths.num_paths != cfg.num_paths:
        raise ValueError("path count does not match config")
    N, M, L = cfg.num_antennas, cfg.num_subcarriers, cfg.num_paths
    freqs = subcarrier_frequencies(cfg)
    d = cfg.spacing
    n = np.arange(N)

    theta = paths.spatial_angles
    r = paths.distances
    if np.any(r < MIN_DISTANCE_SPACINGS * d):
        raise ValueError("path distance below Fresnel-region floor")
    xi = paths.curvatures
    # per-antenna geometric phase factor, shape (L, N)
    geom = n[None, :] * d * theta[:, None] - n[None, :] ** 2 * d**2 * xi[:, None]
    # total per-element phase at frequency f_m: (2 pi f_m / c) (geom - r_l)
    k = 2 * np.pi * freqs / cfg.speed_of_light  # (M,)
    phase = k[None, None, :] * (geom[:, :, None] - r[:, None, None])  # (L, N, M)
    per_path = np.exp(1j * phase)
    H = np.sqrt(1.0 / L) * np.einsum("l,lnm->nm", paths.gains, per_path)
    return ChannelMatrix(entries=H, provenance=paths)


def sample_paths(cfg: SystemConfig, seed) -> PathSet:
    """Uniform angles/distances, unit-variance circularly-symmetric Gaussian gains."""
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "paths")
    L = cfg.num_paths
    phi = rng.uniform(cfg.angle_range[0], cfg.angle_range[1], size=L)
    r = rng.uniform(cfg.distance_range[0], cfg.distance_range[1], size=L)
    gains = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2.0)
    return PathSet(gains=gains, spatial_angles=np.sin(phi), distances=r)


def generate_channels(cfg: SystemConfig, count: int, seed: int, tag="channels") -> np.ndarray:
    """Stack of `count` independent channel realizations, shape (count, N, M) complex."""
    out = np.empty((count, cfg.num_antennas, cfg.num_subcarriers), dtype=complex)
    for i in range(count):
        rng = substream(seed, tag, i)
        out[i] = channel_matrix(sample_paths(cfg, rng), cfg).entries
    return out


def to_real_tensor(H: ChannelMatrix, scale: float = 1.0) -> RealChannelTensor:
    if scale <= 0:
        raise ValueError("scale must be positive")
    planes = np.stack([H.entries.real, H.entries.imag]) / scale
    return RealChannelTensor(planes=planes, scale=scale)


def from_real_tensor(t: RealChannelTensor) -> ChannelMatrix:
    H = (t.planes[0] + 1j * t.planes[1]) * t.scale
    return ChannelMatrix(entries=H)


def dataset_scale(channels: np.ndarray) -> float:
    """Global normalization: empirical std of all real-tensor entries of a batch."""
    return float(np.std(np.concatenate([channels.real.ravel(), channels.imag.ravel()])))
