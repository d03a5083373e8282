import numpy as np
import pytest

from nfwchan import diffusion
from nfwchan.channel import generate_channels, dataset_scale
from nfwchan.config import SystemConfig
from nfwchan.denoiser import DenoiserParams, NetworkConfig
from nfwchan.diffusion import (
    Adam,
    NoiseSchedule,
    TrainingConfig,
    clip_gradients,
    forward_sample,
    likelihood_score,
    likelihood_score_dense,
    linear_schedule,
    posterior_estimate,
    prior_score,
    train,
)
from nfwchan.observation import MeasurementOperator, PilotConfig, operator_from_pilots
from nfwchan.rng import substream

TINY_NET = NetworkConfig(hidden_features=4, num_blocks=1, height=8, width=8)


class TestSchedule:
    def test_default_terminal_gamma_bar(self):
        sched = linear_schedule()
        assert sched.T == 100
        assert sched.gamma_bar(100) < 1e-3

    def test_gamma_bars_strictly_decreasing(self):
        sched = linear_schedule()
        assert np.all(np.diff(sched.gamma_bars) < 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseSchedule(betas=np.array([0.2, 0.1]))
        with pytest.raises(ValueError):
            NoiseSchedule(betas=np.array([0.0, 0.1]))
        with pytest.raises(ValueError):
            linear_schedule(beta_start=0.3, beta_end=0.2)

    def test_step_index_one_based(self):
        sched = linear_schedule(T=10)
        assert sched.gamma_bar(1) == pytest.approx(1.0 - sched.betas[0])
        with pytest.raises(ValueError):
            sched.gamma_bar(0)
        with pytest.raises(ValueError):
            sched.gamma_bar(11)


class TestForwardSample:
    def test_mixture_identity(self):
        sched = linear_schedule(T=10)
        h0 = np.ones((2, 4, 4))
        ht, eps = forward_sample(h0, 5, sched, seed=0)
        gb = sched.gamma_bar(5)
        np.testing.assert_allclose(ht, np.sqrt(gb) * h0 + np.sqrt(1 - gb) * eps)

    def test_terminal_step_is_nearly_pure_noise(self):
        sched = linear_schedule()
        h0 = 100.0 * np.ones((2, 16, 16))
        ht, eps = forward_sample(h0, 100, sched, seed=1)
        # gamma_bar_T ~ 2e-5, so the signal contributes < 1% of the amplitude
        assert np.abs(ht - eps).max() < 0.5

    def test_deterministic(self):
        sched = linear_schedule(T=10)
        a, _ = forward_sample(np.zeros((2, 3, 3)), 3, sched, seed=9)
        b, _ = forward_sample(np.zeros((2, 3, 3)), 3, sched, seed=9)
        np.testing.assert_array_equal(a, b)


class TestOptimizer:
    def test_adam_first_step_is_signed_lr(self):
        p = DenoiserParams.init(TINY_NET, seed=0)
        tc = TrainingConfig(learning_rate=1e-2, seed=0)
        opt = Adam(p, tc)
        before = p.tensors["embed.w"].copy()
        grads = p.zeros_like()
        grads["embed.w"][...] = 3.0
        opt.step(p, grads)
        # bias-corrected m/sqrt(v) = sign(g) on the first step, up to eps
        np.testing.assert_allclose(before - p.tensors["embed.w"], 1e-2, rtol=1e-5)

    def test_clip_gradients(self):
        grads = {"a": np.array([3.0, 4.0])}
        total = clip_gradients(grads, max_norm=1.0)
        assert total == pytest.approx(5.0)
        assert np.linalg.norm(grads["a"]) == pytest.approx(1.0)
        grads = {"a": np.array([0.3, 0.4])}
        clip_gradients(grads, max_norm=1.0)
        np.testing.assert_allclose(grads["a"], [0.3, 0.4])


class TestTraining:
    def make_data(self, count=96):
        cfg = SystemConfig(num_antennas=8, num_subcarriers=8, num_paths=4)
        chans = generate_channels(cfg, count, 0, tag=("tiny", "train"))
        return np.stack([chans.real, chans.imag], axis=1) / dataset_scale(chans)

    def test_loss_decreases(self):
        data = self.make_data()
        sched = linear_schedule()
        tc = TrainingConfig(epochs=4, batch_size=32, seed=0)
        _, history = train(data, TINY_NET, sched, tc)
        assert history[-1][1] < history[0][1]

    def test_history_bit_reproducible(self):
        data = self.make_data(64)
        sched = linear_schedule()
        tc = TrainingConfig(epochs=2, batch_size=32, seed=3)
        _, h1 = train(data, TINY_NET, sched, tc)
        _, h2 = train(data, TINY_NET, sched, tc)
        assert h1 == h2

    def test_best_params_from_validation(self):
        data = self.make_data(96)
        sched = linear_schedule()
        tc = TrainingConfig(epochs=3, batch_size=32, seed=1)
        params, history = train(data[:64], TINY_NET, sched, tc, val_dataset=data[64:])
        assert params.tensors["embed.w"].dtype == np.float64
        assert all(np.isfinite(v) for _, _, v in history)


class TestScores:
    def setup_method(self):
        self.sched = linear_schedule(T=10)
        self.params = DenoiserParams.init(TINY_NET, seed=0)

    def test_prior_score_definition(self):
        from nfwchan import denoiser
        x = np.random.default_rng(0).standard_normal((1, 2, 8, 8))
        t = 4
        eps = denoiser.forward(x, t, self.params, self.sched.T)
        got = prior_score(x, t, self.params, self.sched)
        np.testing.assert_allclose(got, -eps / np.sqrt(1 - self.sched.gamma_bar(t)))

    def test_likelihood_fast_path_matches_dense(self):
        rng = np.random.default_rng(1)
        op = MeasurementOperator(symbols=np.exp(1j * rng.uniform(0, 6, 4)), num_antennas=8)
        h = rng.standard_normal((2, 8, 4))
        y = rng.standard_normal((2, 8, 4))
        for t in (1, 5, 10):
            fast = likelihood_score(h, y, op, t, 0.3, self.sched)
            dense = likelihood_score_dense(h, y, op, t, 0.3, self.sched)
            np.testing.assert_allclose(fast, dense, atol=1e-12)

    def test_likelihood_zero_residual(self):
        rng = np.random.default_rng(2)
        op = MeasurementOperator(symbols=np.ones(4, dtype=complex), num_antennas=8)
        h = rng.standard_normal((2, 8, 4))
        t = 5
        y = op.apply_planes(h) / np.sqrt(self.sched.gamma_bar(t))
        score = likelihood_score(h, y, op, t, 0.1, self.sched)
        np.testing.assert_allclose(score, 0.0, atol=1e-12)


class TestPosterior:
    def test_stubbed_zero_score_unrolls_exactly(self, monkeypatch):
        sched = linear_schedule(T=10)
        params = DenoiserParams.init(TINY_NET, seed=0)
        op = MeasurementOperator(symbols=np.ones(8, dtype=complex), num_antennas=8)
        monkeypatch.setattr(diffusion, "prior_score",
                            lambda h, t, p, s: np.zeros_like(h))
        y = np.zeros((2, 8, 8))
        out = posterior_estimate(y, op, 0.1, params, sched, seed=4, likelihood_weight=0.0)
        h_T = substream(4, "posterior").standard_normal((1, 2, 8, 8))[0]
        np.testing.assert_allclose(out, h_T / np.sqrt(sched.gamma_bars[-1]), rtol=1e-12)

    def test_batch_matches_loop(self):
        sched = linear_schedule(T=5)
        params = DenoiserParams.init(TINY_NET, seed=0)
        op = MeasurementOperator(symbols=np.ones(8, dtype=complex), num_antennas=8)
        rng = np.random.default_rng(3)
        y = rng.standard_normal((2, 2, 8, 8))
        batched = posterior_estimate(y, op, 0.5, params, sched, seed=7)
        assert batched.shape == (2, 2, 8, 8)
        assert np.all(np.isfinite(batched))

    def test_deterministic_given_seed(self):
        sched = linear_schedule(T=5)
        params = DenoiserParams.init(TINY_NET, seed=0)
        op = MeasurementOperator(symbols=np.ones(8, dtype=complex), num_antennas=8)
        y = np.random.default_rng(5).standard_normal((2, 8, 8))
        a = posterior_estimate(y, op, 0.5, params, sched, seed=11)
        b = posterior_estimate(y, op, 0.5, params, sched, seed=11)
        np.testing.assert_array_equal(a, b)
