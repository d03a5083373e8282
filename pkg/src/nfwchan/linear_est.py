"""LS and LMMSE baseline estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observation import MeasurementOperator, PilotConfig


def ls_estimate(y: np.ndarray, B: MeasurementOperator, pc: PilotConfig) -> np.ndarray:
    """h_hat = (1/sqrt(P_t)) (B^H B)^-1 B^H y, via the diagonal fast path.

    The printed 1/sqrt(P_t) prefactor is kept verbatim; with the default
    P_t = 1 pilots it is the plain least-squares solution.
    """
    if np.any(np.abs(B.symbols) == 0):
        raise np.linalg.LinAlgError("singular Gram matrix: zero pilot symbol")
    v = B.apply_adjoint(y)
    x = B.solve_gram(1.0, 0.0, v)  # (B^H B)^-1 B^H y
    return x / np.sqrt(pc.power)


@dataclass(frozen=True)
class CovarianceModel:
    """Hermitian PSD channel covariance with an optional ridge term."""

    matrix: np.ndarray
    ridge: float = 0.0

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("covariance must be square")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


def sample_covariance(samples: np.ndarray, ridge: float = 1e-3) -> CovarianceModel:
    """R_hat = (1/K) sum h h^H + ridge I from rows of a (K, NM) complex array."""
    samples = np.atleast_2d(samples)
    K = samples.shape[0]
    if K < 2:
        raise ValueError("need at least 2 samples")
    R = samples.conj().T @ samples / K
    R = (R + R.conj().T) / 2  # enforce exact Hermitian symmetry
    R = R + ridge * np.eye(R.shape[0])
    return CovarianceModel(matrix=R, ridge=ridge)


def lmmse_estimate(
    h_ls: np.ndarray, cov: CovarianceModel, noise_power: float, power: float
) -> np.ndarray:
    """h_hat = R (R + sigma_n^2 / P_t I)^-1 h_ls via a Hermitian solve."""
    R = cov.matrix
    if R.shape[0] != len(h_ls):
        raise ValueError("covariance dimension does not match estimate")
    A = R + (noise_power / power) * np.eye(R.shape[0])
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("regularized covariance is not positive definite") from exc
    x = np.linalg.solve(L.conj().T, np.linalg.solve(L, h_ls))
    return R @ x


class LmmseFilter:
    """Precomputed LMMSE filter for repeated estimates at a fixed noise level."""

    def __init__(self, cov: CovarianceModel, noise_power: float, power: float):
        R = cov.matrix
        A = R + (noise_power / power) * np.eye(R.shape[0])
        self._W = R @ np.linalg.inv(A)

    def __call__(self, h_ls: np.ndarray) -> np.ndarray:
        return self._W @ h_ls
