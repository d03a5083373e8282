"""Pilot observations y = B h + n and the Kronecker-diagonal measurement operator.

B = S^T kron I_N for a diagonal pilot matrix S, so every product reduces to a
per-subcarrier scalar multiply. The module also owns the complex <-> real
plane conventions used by the diffusion sampler: a complex N x M matrix maps
to planes (2, N, M) with plane 0 the real part, and to a flat real vector of
length 2 N M by stacking vec(Re H) then vec(Im H) in column-major order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMatrix
from .config import SystemConfig
from .rng import substream


@dataclass(frozen=True)
class PilotConfig:
    """Constant-power pilot symbols, one per subcarrier."""

    power: float = 1.0
    symbols: np.ndarray | None = None   # (M,), |s_m|^2 == power; default sqrt(power)
    noise_power: float = 0.0            # sigma_n^2 per complex entry

    def __post_init__(self):
        if self.power <= 0:
            raise ValueError("pilot power must be positive")
        if self.noise_power < 0:
            raise ValueError("noise power must be nonnegative")
        if self.symbols is not None:
            if not np.allclose(np.abs(self.symbols) ** 2, self.power, rtol=1e-9):
                raise ValueError("pilot symbols must satisfy |s_m|^2 = power")

    def symbol_vector(self, num_subcarriers: int) -> np.ndarray:
        if self.symbols is not None:
            if len(self.symbols) != num_subcarriers:
                raise ValueError("pilot symbol count does not match subcarriers")
            return np.asarray(self.symbols, dtype=complex)
        return np.full(num_subcarriers, np.sqrt(self.power), dtype=complex)


def snr_to_noise_power(snr_db: float, power: float = 1.0) -> float:
    """sigma_n^2 = P_t / 10^(SNR/10) under unit per-entry channel power."""
    if power <= 0:
        raise ValueError("power must be positive")
    return power / 10 ** (snr_db / 10)


def observe(H: ChannelMatrix, pc: PilotConfig, seed) -> np.ndarray:
    """Y[:, m] = h[m] s[m] + n[m], complex noise with per-entry variance sigma_n^2."""
    N, M = H.shape
    s = pc.symbol_vector(M)
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "observe")
    noise = np.sqrt(pc.noise_power / 2) * (
        rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))
    )
    return H.entries * s[None, :] + noise


# --- complex <-> real conventions ------------------------------------------

def complex_to_planes(H: np.ndarray) -> np.ndarray:
    return np.stack([H.real, H.imag])


def planes_to_complex(planes: np.ndarray) -> np.ndarray:
    return planes[0] + 1j * planes[1]


def complex_to_vec(H: np.ndarray) -> np.ndarray:
    """vec(H) stacking columns (h[1]; h[2]; ...)."""
    return H.flatten(order="F")


def vec_to_complex(h: np.ndarray, N: int, M: int) -> np.ndarray:
    return h.reshape((N, M), order="F")


def planes_to_realvec(planes: np.ndarray) -> np.ndarray:
    return np.concatenate([planes[0].flatten(order="F"), planes[1].flatten(order="F")])


def realvec_to_planes(v: np.ndarray, N: int, M: int) -> np.ndarray:
    half = N * M
    return np.stack(
        [v[:half].reshape((N, M), order="F"), v[half:].reshape((N, M), order="F")]
    )


@dataclass(frozen=True)
class MeasurementOperator:
    """B = S^T kron I_N, applied in O(NM) via the diagonal pilot structure."""

    symbols: np.ndarray   # (M,), complex
    num_antennas: int

    def __post_init__(self):
        if np.any(np.abs(self.symbols) == 0):
            # still constructible; solve_gram rejects later
            pass

    @property
    def shape(self):
        NM = self.num_antennas * len(self.symbols)
        return (NM, NM)

    @property
    def constant_modulus(self) -> bool:
        mags = np.abs(self.symbols) ** 2
        return bool(np.allclose(mags, mags[0], rtol=1e-12))

    @property
    def pilot_power(self) -> float:
        return float(np.abs(self.symbols[0]) ** 2)

    def apply(self, h: np.ndarray) -> np.ndarray:
        """(S^T kron I_N) h for a complex vector of length N M."""
        N, M = self.num_antennas, len(self.symbols)
        return (vec_to_complex(h, N, M) * self.symbols[None, :]).flatten(order="F")

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        N, M = self.num_antennas, len(self.symbols)
        return (vec_to_complex(y, N, M) * np.conj(self.symbols)[None, :]).flatten(order="F")

    def solve_gram(self, alpha: float, sigma2: float, v: np.ndarray) -> np.ndarray:
        """Solve (alpha B B^H + sigma2 I) x = v using the diagonal structure."""
        N, M = self.num_antennas, len(self.symbols)
        diag = alpha * np.abs(self.symbols) ** 2 + sigma2
        if np.any(diag == 0):
            raise np.linalg.LinAlgError("singular Gram system (zero pilot and sigma2)")
        return (vec_to_complex(v, N, M) / diag[None, :]).flatten(order="F")

    def dense_matrix(self) -> np.ndarray:
        """Explicit NM x NM complex matrix; for small-shape equivalence checks only."""
        return np.kron(np.diag(self.symbols), np.eye(self.num_antennas))

    # --- real 2NM block form ------------------------------------------------

    def apply_planes(self, planes: np.ndarray) -> np.ndarray:
        """Apply B in the (2, N, M) plane representation."""
        H = planes_to_complex(planes)
        return complex_to_planes(H * self.symbols[None, :])

    def apply_adjoint_planes(self, planes: np.ndarray) -> np.ndarray:
        Y = planes_to_complex(planes)
        return complex_to_planes(Y * np.conj(self.symbols)[None, :])

    def solve_gram_planes(self, alpha: float, sigma2: float, planes: np.ndarray) -> np.ndarray:
        diag = alpha * np.abs(self.symbols) ** 2 + sigma2
        if np.any(diag == 0):
            raise np.linalg.LinAlgError("singular Gram system (zero pilot and sigma2)")
        return planes / diag[None, None, :]

    def dense_real_matrix(self) -> np.ndarray:
        """Real 2NM x 2NM block matrix [[Re B, -Im B], [Im B, Re B]]."""
        B = self.dense_matrix()
        return np.block([[B.real, -B.imag], [B.imag, B.real]])


def operator_from_pilots(pc: PilotConfig, cfg: SystemConfig) -> MeasurementOperator:
    return MeasurementOperator(
        symbols=pc.symbol_vector(cfg.num_subcarriers), num_antennas=cfg.num_antennas
    )
