import numpy as np
import pytest

from nfwchan.channel import steering_vector, subcarrier_frequencies
from nfwchan.config import SystemConfig
from nfwchan.observation import PilotConfig
from nfwchan.rng import substream
from nfwchan.sparse_est import (
    PolarDictionary,
    build_polar_dictionary,
    omp,
    omp_estimate,
    somp,
    somp_estimate,
)


def make_cfg(**kw):
    defaults = dict(num_antennas=32, num_subcarriers=4, carrier_freq=60e9,
                    bandwidth=6.4e9, num_paths=2)
    defaults.update(kw)
    return SystemConfig(**defaults)


class TestDictionary:
    def test_atoms_unit_norm(self):
        cfg = make_cfg()
        D = build_polar_dictionary(cfg, cfg.carrier_freq, num_angles=16, num_rings=2)
        np.testing.assert_allclose(np.linalg.norm(D.atoms, axis=0), 1.0, atol=1e-12)
        assert D.num_atoms == len(D.grid)

    def test_angle_grid_uniform_in_theta(self):
        cfg = make_cfg()
        D = build_polar_dictionary(cfg, cfg.carrier_freq, num_angles=8, num_rings=0)
        thetas = [g[0] for g in D.grid]
        np.testing.assert_allclose(thetas, -1.0 + (2 * np.arange(8) + 1) / 8)
        assert all(np.isinf(g[1]) for g in D.grid)

    def test_atom_matches_steering_vector(self):
        cfg = make_cfg()
        D = build_polar_dictionary(cfg, cfg.carrier_freq, num_angles=16, num_rings=0)
        theta, r = D.grid[3]
        a = steering_vector(theta, r, cfg.carrier_freq, cfg)
        assert abs(np.vdot(a, D.atoms[:, 3])) == pytest.approx(1.0)

    def test_far_field_coherence_finite(self):
        cfg = make_cfg(num_antennas=64)
        D = build_polar_dictionary(cfg, cfg.carrier_freq, num_angles=128, num_rings=0)
        G = np.abs(D.atoms.conj().T @ D.atoms)
        np.fill_diagonal(G, 0.0)
        assert 0.0 < G.max() < 1.0

    def test_small_aperture_drops_subwavelength_rings(self):
        # at N=32 every sampled ring radius falls below the 10 d validity floor,
        # so the dictionary degenerates to the far-field ring alone
        cfg = make_cfg()
        D = build_polar_dictionary(cfg, cfg.carrier_freq, num_angles=16, num_rings=3)
        assert all(np.isinf(g[1]) for g in D.grid)

    def test_large_aperture_keeps_rings(self):
        cfg = make_cfg(num_antennas=256)
        D = build_polar_dictionary(cfg, cfg.carrier_freq, num_angles=8, num_rings=2)
        finite = [g for g in D.grid if np.isfinite(g[1])]
        assert finite
        assert all(r >= 10.0 * cfg.spacing for _, r in finite)

    def test_grid_length_validated(self):
        with pytest.raises(ValueError):
            PolarDictionary(atoms=np.ones((4, 3), dtype=complex),
                            grid=((0.0, np.inf),), frequency=60e9)

    def test_rejects_bad_counts(self):
        cfg = make_cfg()
        with pytest.raises(ValueError):
            build_polar_dictionary(cfg, cfg.carrier_freq, num_angles=0)
        with pytest.raises(ValueError):
            build_polar_dictionary(cfg, cfg.carrier_freq, num_rings=-1)


class TestOmp:
    def setup_method(self):
        cfg = make_cfg(num_antennas=64)
        self.cfg = cfg
        self.D = build_polar_dictionary(cfg, cfg.carrier_freq, num_angles=64, num_rings=0)

    def test_single_atom_exact(self):
        y = 2.0 * self.D.atoms[:, 17]
        support, coeffs, residual = omp(y, self.D.atoms, sparsity=2)
        assert support[0] == 17
        assert np.linalg.norm(residual) < 1e-10 * np.linalg.norm(y)

    def test_zero_input(self):
        support, coeffs, residual = omp(np.zeros(64, dtype=complex), self.D.atoms, 3)
        assert support == [] and coeffs.size == 0

    def test_support_unique_and_bounded(self):
        rng = substream(0, "omp")
        y = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        support, _, _ = omp(y, self.D.atoms, sparsity=5)
        assert len(support) == len(set(support)) <= 5

    def test_tie_break_lowest_index(self):
        atom = self.D.atoms[:, [0]]
        D = np.concatenate([atom, atom], axis=1)  # exact duplicate columns
        support, _, _ = omp(atom[:, 0], D, sparsity=2)
        assert support[0] == 0

    def test_residual_decreases_with_budget(self):
        rng = substream(1, "omp")
        y = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        norms = []
        for k in (1, 2, 4, 8):
            _, _, residual = omp(y, self.D.atoms, sparsity=k)
            norms.append(np.linalg.norm(residual))
        assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))

    def test_estimate_rescales_by_symbol(self):
        pc = PilotConfig(power=1.0, symbols=np.full(4, 1j))
        y = 1j * 3.0 * self.D.atoms[:, 5]
        h = omp_estimate(y, self.D, pc, sparsity=1, symbol=1j)
        np.testing.assert_allclose(h, 3.0 * self.D.atoms[:, 5], atol=1e-10)


class TestSomp:
    def setup_method(self):
        cfg = make_cfg(num_antennas=64, num_subcarriers=4)
        self.cfg = cfg
        freqs = subcarrier_frequencies(cfg)
        self.dicts = [build_polar_dictionary(cfg, f, num_angles=64, num_rings=0)
                      for f in freqs]

    def test_shared_support_recovery(self):
        rng = substream(2, "somp")
        sel = [7, 30]
        coeffs = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        Y = np.stack([self.dicts[m].atoms[:, sel] @ coeffs[:, m] for m in range(4)], axis=1)
        support, got, residual = somp(Y, [D.atoms for D in self.dicts], sparsity=2)
        assert sorted(support) == sel
        assert np.linalg.norm(residual) < 1e-10 * np.linalg.norm(Y)

    def test_zero_input(self):
        Y = np.zeros((64, 4), dtype=complex)
        support, coeffs, _ = somp(Y, [D.atoms for D in self.dicts], sparsity=2)
        assert support == []

    def test_estimate_shape_and_rescale(self):
        pc = PilotConfig(power=4.0)
        Y = 2.0 * np.stack([self.dicts[m].atoms[:, 3] for m in range(4)], axis=1)
        H = somp_estimate(Y, self.dicts, pc, sparsity=1)
        assert H.shape == (64, 4)
        np.testing.assert_allclose(H[:, 0], self.dicts[0].atoms[:, 3], atol=1e-10)
