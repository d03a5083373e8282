"""Polar-domain dictionaries and greedy sparse estimators (per-subcarrier OMP
and joint-support SOMP).

The dictionary samples the angle axis uniformly in theta = sin(phi) and the
distance axis on non-uniform rings r = N^2 d^2 (1 - theta^2) / (2 beta^2 s),
plus one far-field (plane-wave) ring per angle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import steering_vector
from .config import SystemConfig
from .observation import PilotConfig


@dataclass(frozen=True)
class PolarDictionary:
    atoms: np.ndarray                 # complex (N, Q), unit-norm columns
    grid: tuple                       # Q pairs (theta, r); r = inf for far-field ring
    frequency: float

    def __post_init__(self):
        if self.atoms.shape[1] != len(self.grid):
            raise ValueError("grid length must match atom count")

    @property
    def num_atoms(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class SparseSupport:
    indices: tuple                    # ordered, unique atom indices
    coefficients: np.ndarray          # (len(indices), M) per-subcarrier coefficients


def build_polar_dictionary(
    cfg: SystemConfig,
    f: float,
    num_angles: int = 64,
    num_rings: int = 3,
    beta_res: float = 1.2,
) -> PolarDictionary:
    if num_angles < 1:
        raise ValueError("num_angles must be >= 1")
    if num_rings < 0:
        raise ValueError("num_rings must be >= 0")
    N, d = cfg.num_antennas, cfg.spacing
    thetas = -1.0 + (2 * np.arange(num_angles) + 1) / num_angles
    grid = []
    cols = []
    floor = 10.0 * d  # keep rings inside the Fresnel-region validity of the model
    for theta in thetas:
        grid.append((theta, np.inf))
        cols.append(steering_vector(theta, np.inf, f, cfg))
        for s in range(1, num_rings + 1):
            r = N**2 * d**2 * (1.0 - theta**2) / (2.0 * beta_res**2 * s)
            if r < floor:
                continue
            grid.append((theta, r))
            cols.append(steering_vector(theta, r, f, cfg))
    atoms = np.stack(cols, axis=1)
    atoms = atoms / np.linalg.norm(atoms, axis=0, keepdims=True)
    return PolarDictionary(atoms=atoms, grid=tuple(grid), frequency=f)


def _greedy_fit(y: np.ndarray, D: np.ndarray, support: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares refit on the selected atoms; returns (coeffs, residual)."""
    sub = D[:, support]
    coeffs, *_ = np.linalg.lstsq(sub, y, rcond=None)
    return coeffs, y - sub @ coeffs


def omp(y: np.ndarray, D: np.ndarray, sparsity: int, rtol: float = 1e-6):
    """Greedy OMP; ties broken toward the lowest atom index.

    Returns (support indices, coefficients, residual).
    """
    support: list[int] = []
    coeffs = np.zeros(0, dtype=complex)
    residual = y.copy()
    y_norm = np.linalg.norm(y)
    if y_norm == 0 or sparsity == 0:
        return support, coeffs, residual
    for _ in range(min(sparsity, D.shape[1])):
        corr = np.abs(D.conj().T @ residual)
        corr[support] = -1.0
        idx = int(np.argmax(corr))  # argmax returns the first (lowest) maximizer
        candidate = support + [idx]
        sub = D[:, candidate]
        if np.linalg.matrix_rank(sub) < len(candidate):
            break
        support = candidate
        coeffs, residual = _greedy_fit(y, D, support)
        if np.linalg.norm(residual) < rtol * y_norm:
            break
    return support, coeffs, residual


def omp_estimate(
    y_m: np.ndarray, D: PolarDictionary, pc: PilotConfig, sparsity: int, symbol: complex | None = None
) -> np.ndarray:
    """Channel estimate for one subcarrier column: D_S coeffs rescaled by 1/s[m]."""
    s = np.sqrt(pc.power) if symbol is None else symbol
    support, coeffs, _ = omp(y_m, D.atoms, sparsity)
    if not support:
        return np.zeros_like(y_m)
    return (D.atoms[:, support] @ coeffs) / s


def somp(Y: np.ndarray, dicts: list[np.ndarray], sparsity: int, rtol: float = 1e-6):
    """Shared-support SOMP across subcarriers with per-subcarrier dictionaries.

    Y has shape (N, M); dicts[m] is the (N, Q) dictionary for subcarrier m.
    Selection maximizes sum_m |<residual_m, atom_q^(m)>|^2.
    """
    M = Y.shape[1]
    Q = dicts[0].shape[1]
    support: list[int] = []
    coeffs = np.zeros((0, M), dtype=complex)
    residual = Y.copy()
    y_norm = np.linalg.norm(Y)
    if y_norm == 0 or sparsity == 0:
        return support, coeffs, residual
    stacked = np.stack(dicts, axis=0)  # (M, N, Q)
    for _ in range(min(sparsity, Q)):
        corr = np.einsum("mnq,nm->qm", stacked.conj(), residual)
        score = np.sum(np.abs(corr) ** 2, axis=1)
        score[support] = -1.0
        idx = int(np.argmax(score))
        candidate = support + [idx]
        ok = True
        new_coeffs = np.zeros((len(candidate), M), dtype=complex)
        new_res = np.empty_like(Y)
        for m in range(M):
            sub = dicts[m][:, candidate]
            if np.linalg.matrix_rank(sub) < len(candidate):
                ok = False
                break
            c, *_ = np.linalg.lstsq(sub, Y[:, m], rcond=None)
            new_coeffs[:, m] = c
            new_res[:, m] = Y[:, m] - sub @ c
        if not ok:
            break
        support, coeffs, residual = candidate, new_coeffs, new_res
        if np.linalg.norm(residual) < rtol * y_norm:
            break
    return support, coeffs, residual


def somp_estimate(
    Y: np.ndarray, dicts: list[PolarDictionary], pc: PilotConfig, sparsity: int
) -> np.ndarray:
    """Joint-support channel estimate for all subcarriers."""
    symbols = pc.symbol_vector(Y.shape[1])
    support, coeffs, _ = somp(Y, [D.atoms for D in dicts], sparsity)
    H = np.zeros_like(Y)
    if support:
        for m in range(Y.shape[1]):
            H[:, m] = dicts[m].atoms[:, support] @ coeffs[:, m]
    return H / symbols[None, :]
