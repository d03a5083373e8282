import numpy as np
import pytest

from nfwchan import denoiser
from nfwchan.denoiser import (
    DenoiserParams,
    NetworkConfig,
    flop_estimate,
    flop_estimate_leading_order,
    load_checkpoint,
    parameter_count,
    parameter_count_leading_order,
    per_block_weight_tally,
    save_checkpoint,
    time_features,
)
from nfwchan.diffusion import linear_schedule

TINY = NetworkConfig(hidden_features=4, num_blocks=1, height=8, width=8)


class TestConfig:
    def test_embed_dim(self):
        assert NetworkConfig(hidden_features=32).embed_dim == 128

    def test_validation(self):
        with pytest.raises(ValueError):
            NetworkConfig(num_blocks=0)


class TestParams:
    def test_flat_round_trip(self):
        p = DenoiserParams.init(TINY, seed=1)
        flat = p.to_flat()
        assert flat.size == p.num_params
        q = DenoiserParams.init(TINY, seed=2)
        q.set_flat(flat)
        np.testing.assert_array_equal(q.to_flat(), flat)

    def test_slice_offsets_partition(self):
        p = DenoiserParams.init(TINY)
        offsets = p.slice_offsets()
        pos = 0
        for name, (lo, hi) in offsets.items():
            assert lo == pos
            assert hi - lo == p.tensors[name].size
            pos = hi
        assert pos == p.num_params

    def test_zero_initialized_slices(self):
        p = DenoiserParams.init(TINY)
        assert np.all(p.tensors["time.w2"] == 0)
        assert np.all(p.tensors["embed.b"] == 0)
        assert np.any(p.tensors["embed.w"] != 0)

    def test_missing_slice_rejected(self):
        p = DenoiserParams.init(TINY)
        tensors = dict(p.tensors)
        tensors.pop("out.b")
        with pytest.raises(ValueError):
            DenoiserParams(TINY, tensors)

    def test_init_deterministic(self):
        a = DenoiserParams.init(TINY, seed=5).to_flat()
        b = DenoiserParams.init(TINY, seed=5).to_flat()
        np.testing.assert_array_equal(a, b)


class TestTimeFeatures:
    def test_shape_and_range(self):
        f = time_features([1, 50, 100], 100, 16)
        assert f.shape == (3, 16)
        assert np.all(np.abs(f) <= 1.0)

    def test_distinct_steps_distinct_features(self):
        f = time_features([1, 2], 100, 32)
        assert not np.allclose(f[0], f[1])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            time_features(0, 100, 16)
        with pytest.raises(ValueError):
            time_features(101, 100, 16)


class TestForward:
    def test_output_shape(self):
        p = DenoiserParams.init(TINY)
        x = np.random.default_rng(0).standard_normal((3, 2, 8, 8))
        out = denoiser.forward(x, [1, 5, 9], p, T=10)
        assert out.shape == (3, 2, 8, 8)

    def test_single_sample_promotion(self):
        p = DenoiserParams.init(TINY)
        x = np.random.default_rng(1).standard_normal((2, 8, 8))
        out = denoiser.forward(x, 3, p, T=10)
        assert out.shape == (1, 2, 8, 8)

    def test_batch_consistency(self):
        p = DenoiserParams.init(TINY)
        rng = np.random.default_rng(2)
        x = rng.standard_normal((4, 2, 8, 8))
        t = np.array([1, 3, 7, 10])
        full = denoiser.forward(x, t, p, T=10)
        for i in range(4):
            single = denoiser.forward(x[i : i + 1], t[i], p, T=10)
            np.testing.assert_allclose(full[i], single[0], atol=1e-12)

    def test_time_invariant_at_init(self):
        # time.w2 starts at zero, so the step index cannot influence the output
        p = DenoiserParams.init(TINY)
        x = np.random.default_rng(3).standard_normal((1, 2, 8, 8))
        np.testing.assert_array_equal(denoiser.forward(x, 1, p, T=10),
                                      denoiser.forward(x, 10, p, T=10))

    def test_shape_mismatch_rejected(self):
        p = DenoiserParams.init(TINY)
        with pytest.raises(ValueError):
            denoiser.forward(np.zeros((1, 2, 4, 4)), 1, p, T=10)


class TestBackward:
    def test_spot_gradient_check(self):
        # a few entries per slice; the full sweep lives in the acceptance suite
        rng = np.random.default_rng(7)
        p = DenoiserParams.init(TINY, seed=0)
        for name in p.tensors:
            p.tensors[name] += 0.05 * rng.standard_normal(p.tensors[name].shape)
        x = rng.standard_normal((2, 2, 8, 8))
        t = np.array([2, 8])
        proj = rng.standard_normal((2, 2, 8, 8))
        out, cache = denoiser.forward_with_cache(x, t, p, T=10)
        grads, gx = denoiser.backward(p, cache, proj)

        def loss():
            return float(np.sum(denoiser.forward(x, t, p, T=10) * proj))

        eps = 1e-6
        for name in ("embed.w", "block0.featatt.w", "block0.spatt.dw",
                     "time.w1", "time.w2", "out.w"):
            arr = p.tensors[name]
            flat_idx = rng.integers(0, arr.size, size=3)
            for fi in flat_idx:
                i = np.unravel_index(fi, arr.shape)
                old = arr[i]
                arr[i] = old + eps
                fp = loss()
                arr[i] = old - eps
                fm = loss()
                arr[i] = old
                num = (fp - fm) / (2 * eps)
                assert grads[name][i] == pytest.approx(num, rel=1e-4, abs=1e-7)
        # input gradient too
        i = (0, 1, 3, 3)
        old = x[i]
        x[i] = old + eps
        fp = loss()
        x[i] = old - eps
        fm = loss()
        x[i] = old
        assert gx[i] == pytest.approx((fp - fm) / (2 * eps), rel=1e-4, abs=1e-7)


class TestAccounting:
    def test_reference_exact_count(self):
        cfg = NetworkConfig()  # C=32, K=3, 2 -> 2 features
        assert parameter_count(cfg) == 305_982

    def test_per_block_tally(self):
        cfg = NetworkConfig()
        tally = per_block_weight_tally(cfg)
        C = 32
        assert tally["branch_3x3"] == 9 * C * C
        assert tally["branch_5x5"] == 25 * C * C
        assert tally["branch_7x7"] == 49 * C * C
        assert tally["feature_attention"] == 9 * C * C
        assert tally["compression"] == 3 * C * C
        assert sum(v for k, v in tally.items() if k != "spatial_attention") == 95 * C * C
        assert tally["spatial_attention"] == 52

    def test_leading_order_close(self):
        cfg = NetworkConfig()
        exact = parameter_count(cfg)
        approx = parameter_count_leading_order(cfg)
        assert abs(exact - approx) / approx < 0.05

    def test_flop_leading_order_close(self):
        cfg = NetworkConfig()
        assert abs(flop_estimate(cfg) - flop_estimate_leading_order(cfg)) \
            / flop_estimate_leading_order(cfg) < 0.1


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        p = DenoiserParams.init(TINY, seed=3).astype(np.float32).astype(np.float64)
        sched = linear_schedule(T=20)
        path = tmp_path / "model.nfwn"
        save_checkpoint(path, p, schedule=sched, scale=1.75)
        q, scale, info = load_checkpoint(path)
        assert scale == 1.75
        assert info == (20, sched.betas[0], sched.betas[-1])
        assert q.cfg == TINY
        np.testing.assert_array_equal(q.to_flat(), p.to_flat())

    def test_no_schedule_metadata(self, tmp_path):
        p = DenoiserParams.init(TINY)
        path = tmp_path / "bare.nfwn"
        save_checkpoint(path, p)
        _, scale, info = load_checkpoint(path)
        assert scale == 1.0 and info is None

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.nfwn"
        path.write_bytes(b"XXXX" + b"\x00" * 64)
        with pytest.raises(ValueError):
            load_checkpoint(path)
