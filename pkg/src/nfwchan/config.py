"""System geometry configuration and flat key=value serialization."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

SPEED_OF_LIGHT = 3e8  # m/s, fixed so the textbook Rayleigh-distance figures match


@dataclass(frozen=True)
class SystemConfig:
    """Uniform linear array + OFDM geometry.

    ``antenna_spacing`` defaults to half the carrier wavelength when left None.
    """

    num_antennas: int = 32
    num_subcarriers: int = 16
    carrier_freq: float = 60e9
    bandwidth: float = 6.4e9
    antenna_spacing: float | None = None
    num_paths: int = 4
    angle_range: tuple[float, float] = (-math.pi / 3, math.pi / 3)
    distance_range: tuple[float, float] = (5.0, 40.0)
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be >= 1")
        if self.num_subcarriers < 1:
            raise ValueError("num_subcarriers must be >= 1")
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        if not 0 < self.bandwidth < 2 * self.carrier_freq:
            raise ValueError("bandwidth must lie in (0, 2 * carrier_freq)")
        if self.antenna_spacing is not None and self.antenna_spacing <= 0:
            raise ValueError("antenna_spacing must be positive")
        if self.distance_range[0] <= 0:
            raise ValueError("distance_range must start above 0")
        if self.angle_range[0] >= self.angle_range[1]:
            raise ValueError("angle_range must be a nonempty interval")
        if self.angle_range[0] < -math.pi / 2 or self.angle_range[1] > math.pi / 2:
            raise ValueError("angle_range must lie within [-pi/2, pi/2]")
        if self.distance_range[0] > self.distance_range[1]:
            raise ValueError("distance_range must be ordered")

    @property
    def carrier_wavelength(self) -> float:
        return self.speed_of_light / self.carrier_freq

    @property
    def spacing(self) -> float:
        """Antenna spacing in meters (defaults to lambda_c / 2)."""
        if self.antenna_spacing is not None:
            return self.antenna_spacing
        return self.carrier_wavelength / 2

    @property
    def aperture(self) -> float:
        return (self.num_antennas - 1) * self.spacing

    def with_overrides(self, **kwargs) -> "SystemConfig":
        return replace(self, **kwargs)


_SCALARS = {
    "num_antennas": int,
    "num_subcarriers": int,
    "carrier_freq": float,
    "bandwidth": float,
    "num_paths": int,
    "speed_of_light": float,
}


def save_config(cfg: SystemConfig, path) -> None:
    lines = []
    for name, conv in _SCALARS.items():
        lines.append(f"{name} = {getattr(cfg, name)!r}")
    if cfg.antenna_spacing is not None:
        lines.append(f"antenna_spacing = {cfg.antenna_spacing!r}")
    lines.append(f"angle_min = {cfg.angle_range[0]!r}")
    lines.append(f"angle_max = {cfg.angle_range[1]!r}")
    lines.append(f"distance_min = {cfg.distance_range[0]!r}")
    lines.append(f"distance_max = {cfg.distance_range[1]!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_config(path) -> SystemConfig:
    raw = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
    known = set(_SCALARS) | {"antenna_spacing", "angle_min", "angle_max",
                             "distance_min", "distance_max"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for name, conv in _SCALARS.items():
        if name in raw:
            kwargs[name] = conv(raw[name])
    if "antenna_spacing" in raw:
        kwargs["antenna_spacing"] = float(raw["antenna_spacing"])
    if "angle_min" in raw or "angle_max" in raw:
        kwargs["angle_range"] = (float(raw["angle_min"]), float(raw["angle_max"]))
    if "distance_min" in raw or "distance_max" in raw:
        kwargs["distance_range"] = (float(raw["distance_min"]), float(raw["distance_max"]))
    return SystemConfig(**kwargs)
