"""Multi-scale attention denoising network with exact analytic gradients.

Pipeline: 3x3 embedding conv -> K blocks of {spatial layer-norm, three
parallel conv branches (3x3 / 5x5 dilated / 7x7 dilated), feature attention,
spatial attention, 1x1 compression, time modulation, residual add} -> 3x3
output conv. The per-step scale/bias modulation comes from a sinusoidal step
encoding passed through a small MLP whose final layer starts at zero, so the
network begins as an unmodulated residual stack.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import nn_ops as ops
from .rng import substream

CHECKPOINT_MAGIC = b"NFWN"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    in_features: int = 2
    hidden_features: int = 32
    out_features: int = 2
    num_blocks: int = 3
    height: int = 32          # antenna axis N
    width: int = 16           # subcarrier axis M

    def __post_init__(self):
        for name in ("in_features", "hidden_features", "out_features", "num_blocks",
                     "height", "width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def embed_dim(self) -> int:
        """Sinusoidal time-feature dimension E = 4C."""
        return 4 * self.hidden_features


def _slice_shapes(cfg: NetworkConfig) -> dict[str, tuple[int, ...]]:
    C, Ci, Co, K, E = (cfg.hidden_features, cfg.in_features, cfg.out_features,
                       cfg.num_blocks, cfg.embed_dim)
    shapes: dict[str, tuple[int, ...]] = {
        "embed.w": (C, Ci, 3, 3),
        "embed.b": (C,),
    }
    for k in range(K):
        p = f"block{k}."
        shapes[p + "branch1.w"] = (C, C, 3, 3)
        shapes[p + "branch1.b"] = (C,)
        shapes[p + "branch2.w"] = (C, C, 5, 5)
        shapes[p + "branch2.b"] = (C,)
        shapes[p + "branch3.w"] = (C, C, 7, 7)
        shapes[p + "branch3.b"] = (C,)
        shapes[p + "featatt.w"] = (3 * C, 3 * C)
        shapes[p + "spatt.dw"] = (2, 5, 5)
        shapes[p + "spatt.pw"] = (1, 2)
        shapes[p + "compress.w"] = (C, 3 * C)
        shapes[p + "compress.b"] = (C,)
    shapes["time.w1"] = (2 * C, E)
    shapes["time.b1"] = (2 * C,)
    shapes["time.w2"] = (2 * C, 2 * C)
    shapes["time.b2"] = (2 * C,)
    shapes["out.w"] = (Co, C, 3, 3)
    shapes["out.b"] = (Co,)
    return shapes


class DenoiserParams:
    """Named parameter slices, also addressable as one flat vector."""

    def __init__(self, cfg: NetworkConfig, tensors: dict[str, np.ndarray]):
        shapes = _slice_shapes(cfg)
        if set(tensors) != set(shapes):
            missing = set(shapes) ^ set(tensors)
            raise ValueError(f"parameter slices do not match config: {sorted(missing)}")
        for name, shape in shapes.items():
            if tensors[name].shape != shape:
                raise ValueError(f"slice {name} has shape {tensors[name].shape}, want {shape}")
        self.cfg = cfg
        self.tensors = {name: tensors[name] for name in shapes}  # canonical order

    @classmethod
    def init(cls, cfg: NetworkConfig, seed: int = 0, dtype=np.float64) -> "DenoiserParams":
        rng = substream(seed, "denoiser-init")
        tensors = {}
        for name, shape in _slice_shapes(cfg).items():
            if name.endswith(".b") or name in ("time.b1", "time.b2"):
                tensors[name] = np.zeros(shape, dtype=dtype)
            elif name == "time.w2":
                # zero-initialized final layer: time modulation starts as identity
                tensors[name] = np.zeros(shape, dtype=dtype)
            else:
                fan_in = int(np.prod(shape[1:]))
                lim = 1.0 / np.sqrt(fan_in)
                tensors[name] = rng.uniform(-lim, lim, size=shape).astype(dtype)
        return cls(cfg, tensors)

    # --- flat view ---------------------------------------------------------

    def slice_offsets(self) -> dict[str, tuple[int, int]]:
        offsets = {}
        pos = 0
        for name, arr in self.tensors.items():
            offsets[name] = (pos, pos + arr.size)
            pos += arr.size
        return offsets

    def to_flat(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for arr in self.tensors.values()])

    def set_flat(self, vec: np.ndarray) -> None:
        pos = 0
        for name, arr in self.tensors.items():
            arr[...] = vec[pos : pos + arr.size].reshape(arr.shape)
            pos += arr.size
        if pos != len(vec):
            raise ValueError("flat vector length mismatch")

    @property
    def num_params(self) -> int:
        return sum(arr.size for arr in self.tensors.values())

    def astype(self, dtype) -> "DenoiserParams":
        return DenoiserParams(self.cfg, {k: v.astype(dtype) for k, v in self.tensors.items()})

    def copy(self) -> "DenoiserParams":
        return DenoiserParams(self.cfg, {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}


# --- time embedding ---------------------------------------------------------

def time_features(t, T: int, E: int) -> np.ndarray:
    """Sinusoidal features of the step index at E/2 geometric frequencies."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(t < 1) or np.any(t > T):
        raise ValueError("step index out of range")
    half = E // 2
    freqs = np.exp(-np.log(1e4) * np.arange(half) / max(half - 1, 1))
    ang = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


def time_modulation(params: DenoiserParams, t, T: int):
    """(s_t, b_t) per-feature scale and bias vectors, plus the MLP cache."""
    C = params.cfg.hidden_features
    feats = time_features(t, T, params.cfg.embed_dim)
    feats = feats.astype(params.tensors["time.w1"].dtype)
    h1, c1 = ops.linear_forward(feats, params.tensors["time.w1"], params.tensors["time.b1"])
    a1, ca = ops.silu_forward(h1)
    e, c2 = ops.linear_forward(a1, params.tensors["time.w2"], params.tensors["time.b2"])
    s_t, b_t = e[:, :C], e[:, C:]
    return s_t, b_t, (c1, ca, c2, C)


def time_modulation_backward(cache, gs, gb, grads):
    c1, ca, c2, C = cache
    ge = np.concatenate([gs, gb], axis=1)
    ga1, gw2, gb2 = ops.linear_backward(c2, ge)
    grads["time.w2"] += gw2
    grads["time.b2"] += gb2
    gh1 = ops.silu_backward(ca, ga1)
    _, gw1, gb1 = ops.linear_backward(c1, gh1)
    grads["time.w1"] += gw1
    grads["time.b1"] += gb1


# --- forward / backward -----------------------------------------------------

def forward(x: np.ndarray, t, params: DenoiserParams, T: int = 100):
    """Predicted noise for a batch; x has shape (B, C_in, N, M), t scalar or (B,)."""
    out, _ = forward_with_cache(x, t, params, T)
    return out


def forward_with_cache(x: np.ndarray, t, params: DenoiserParams, T: int = 100):
    cfg = params.cfg
    if x.ndim == 3:
        x = x[None]
    B = x.shape[0]
    if x.shape[1:] != (cfg.in_features, cfg.height, cfg.width):
        raise ValueError(f"input shape {x.shape[1:]} does not match network config")
    t = np.broadcast_to(np.atleast_1d(t), (B,))
    P = params.tensors

    s_t, b_t, time_cache = time_modulation(params, t, T)

    h, c_embed = ops.conv2d_forward(x, P["embed.w"], P["embed.b"])
    block_caches = []
    for k in range(cfg.num_blocks):
        p = f"block{k}."
        xn, c_ln = ops.layernorm_forward(h)
        b1, c_b1 = ops.conv2d_forward(xn, P[p + "branch1.w"], P[p + "branch1.b"])
        b2, c_b2 = ops.conv2d_forward(xn, P[p + "branch2.w"], P[p + "branch2.b"], dilation=2)
        b3, c_b3 = ops.conv2d_forward(xn, P[p + "branch3.w"], P[p + "branch3.b"], dilation=3)
        cat = np.concatenate([b1, b2, b3], axis=1)

        # feature attention: shared 1x1 map on pooled avg/max descriptors
        avg, c_avg = ops.global_avgpool_forward(cat)
        mx, c_mx = ops.global_maxpool_forward(cat)
        fa = P[p + "featatt.w"]
        pre = avg @ fa.T + mx @ fa.T
        w_feat, c_sig = ops.sigmoid_forward(pre)
        x1 = cat * w_feat[:, :, None, None]

        # spatial attention on channel-pooled maps
        pavg, c_pavg = ops.channel_mean_forward(x1)
        pmax, c_pmax = ops.channel_max_forward(x1)
        pcat = np.concatenate([pavg, pmax], axis=1)
        dw, c_dw = ops.depthwise_conv2d_forward(pcat, P[p + "spatt.dw"])
        pw, c_pw = ops.pointwise_forward(dw, P[p + "spatt.pw"])
        w_sp, c_sig2 = ops.sigmoid_forward(pw)
        x2 = x1 * w_sp

        x3, c_comp = ops.pointwise_forward(x2, P[p + "compress.w"], P[p + "compress.b"])
        mod = x3 + s_t[:, :, None, None] * x3 + b_t[:, :, None, None]
        h_new = h + mod
        block_caches.append(
            (c_ln, c_b1, c_b2, c_b3, c_avg, c_mx, avg, mx, c_sig, w_feat, cat,
             c_pavg, c_pmax, c_dw, c_pw, c_sig2, w_sp, x1, c_comp, x3)
        )
        h = h_new

    out, c_out = ops.conv2d_forward(h, P["out.w"], P["out.b"])
    cache = (c_embed, block_caches, c_out, time_cache, s_t, B)
    return out, cache


def backward(params: DenoiserParams, cache, gout: np.ndarray):
    """Gradients of a scalar loss wrt all parameter slices and the input."""
    cfg = params.cfg
    C = cfg.hidden_features
    P = params.tensors
    grads = params.zeros_like()
    c_embed, block_caches, c_out, time_cache, s_t, B = cache

    gh, gw, gb = ops.conv2d_backward(c_out, gout)
    grads["out.w"] += gw
    grads["out.b"] += gb

    gs_total = np.zeros_like(s_t)
    gb_total = np.zeros_like(s_t)
    for k in reversed(range(cfg.num_blocks)):
        p = f"block{k}."
        (c_ln, c_b1, c_b2, c_b3, c_avg, c_mx, avg, mx, c_sig, w_feat, cat,
         c_pavg, c_pmax, c_dw, c_pw, c_sig2, w_sp, x1, c_comp, x3) = block_caches[k]

        gmod = gh  # residual: gh flows both into the block and straight through
        gx3 = gmod * (1.0 + s_t[:, :, None, None])
        gs_total += np.sum(gmod * x3, axis=(2, 3))
        gb_total += np.sum(gmod, axis=(2, 3))

        gx2, gw, gb = ops.pointwise_backward(c_comp, gx3)
        grads[p + "compress.w"] += gw
        grads[p + "compress.b"] += gb

        gx1 = gx2 * w_sp
        gwsp = np.sum(gx2 * x1, axis=1, keepdims=True)
        gpw = ops.sigmoid_backward(c_sig2, gwsp)
        gdw, gw, _ = ops.pointwise_backward(c_pw, gpw)
        grads[p + "spatt.pw"] += gw
        gpcat, gw = ops.depthwise_conv2d_backward(c_dw, gdw)
        grads[p + "spatt.dw"] += gw
        gx1 += ops.channel_mean_backward(c_pavg, gpcat[:, :1])
        gx1 += ops.channel_max_backward(c_pmax, gpcat[:, 1:])

        gcat = gx1 * w_feat[:, :, None, None]
        gwfeat = np.sum(gx1 * cat, axis=(2, 3))
        gpre = ops.sigmoid_backward(c_sig, gwfeat)
        fa = P[p + "featatt.w"]
        grads[p + "featatt.w"] += gpre.T @ (avg + mx)
        gavg = gpre @ fa
        gmx = gpre @ fa
        gcat += ops.global_avgpool_backward(c_avg, gavg)
        gcat += ops.global_maxpool_backward(c_mx, gmx)

        gb1, gb2, gb3 = gcat[:, :C], gcat[:, C : 2 * C], gcat[:, 2 * C :]
        gxn, gw, gb = ops.conv2d_backward(c_b1, gb1)
        grads[p + "branch1.w"] += gw
        grads[p + "branch1.b"] += gb
        gxn2, gw, gb = ops.conv2d_backward(c_b2, gb2)
        grads[p + "branch2.w"] += gw
        grads[p + "branch2.b"] += gb
        gxn3, gw, gb = ops.conv2d_backward(c_b3, gb3)
        grads[p + "branch3.w"] += gw
        grads[p + "branch3.b"] += gb
        gxn = gxn + gxn2 + gxn3
        gh = gh + ops.layernorm_backward(c_ln, gxn)

    time_modulation_backward(time_cache, gs_total, gb_total, grads)

    gx, gw, gb = ops.conv2d_backward(c_embed, gh)
    grads["embed.w"] += gw
    grads["embed.b"] += gb
    return grads, gx


# --- accounting -------------------------------------------------------------

def parameter_count(cfg: NetworkConfig) -> int:
    """Exact parameter count by slice enumeration (biases and time MLP included)."""
    return sum(int(np.prod(s)) for s in _slice_shapes(cfg).values())


def per_block_weight_tally(cfg: NetworkConfig) -> dict[str, int]:
    """Weights-only tally of one block's conv/attention path."""
    C = cfg.hidden_features
    return {
        "branch_3x3": 9 * C * C,
        "branch_5x5": 25 * C * C,
        "branch_7x7": 49 * C * C,
        "feature_attention": (3 * C) ** 2,
        "compression": 3 * C * C,
        "spatial_attention": 2 * 25 + 2,
    }


def parameter_count_leading_order(cfg: NetworkConfig) -> int:
    """Leading-order approximation 9 C_in C + 95 K C^2."""
    C = cfg.hidden_features
    return 9 * cfg.in_features * C + 95 * cfg.num_blocks * C * C


def flop_estimate(cfg: NetworkConfig) -> int:
    """Multiply count of one forward pass, by layer enumeration."""
    Ci, Co, K = cfg.in_features, cfg.out_features, cfg.num_blocks
    C = cfg.hidden_features
    NM = cfg.height * cfg.width
    E = cfg.embed_dim
    total = 9 * NM * Ci * C + 9 * NM * C * Co
    per_block = (
        (9 + 25 + 49) * NM * C * C      # multi-scale branches
        + 2 * (3 * C) ** 2              # feature attention on two descriptors
        + 2 * 25 * NM + 2 * NM          # spatial attention depthwise + pointwise
        + 3 * C * C * NM                # compression
        + 2 * C * NM                    # time modulation multiply + add path
    )
    total += K * per_block
    total += E * 2 * C + (2 * C) ** 2   # time MLP
    return total


def flop_estimate_leading_order(cfg: NetworkConfig) -> int:
    """Leading-order complexity 9 N M C_in C + K (86 N M C^2 + 52 N M)."""
    C = cfg.hidden_features
    NM = cfg.height * cfg.width
    return 9 * NM * cfg.in_features * C + cfg.num_blocks * (86 * NM * C * C + 52 * NM)


# --- checkpoint io ----------------------------------------------------------

def save_checkpoint(path, params: DenoiserParams, schedule=None, scale: float = 1.0) -> None:
    """Binary checkpoint with config, schedule metadata, and named f32 slices."""
    cfg = params.cfg
    T = schedule.T if schedule is not None else 0
    beta_start = schedule.betas[0] if schedule is not None else 0.0
    beta_end = schedule.betas[-1] if schedule is not None else 0.0
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<6I", cfg.in_features, cfg.hidden_features,
                             cfg.out_features, cfg.num_blocks, cfg.height, cfg.width))
        fh.write(struct.pack("<dIdd", scale, T, beta_start, beta_end))
        fh.write(struct.pack("<I", len(params.tensors)))
        for name, arr in params.tensors.items():
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            data = arr.astype("<f4").ravel()
            fh.write(struct.pack("<I", data.size))
            fh.write(data.tobytes())


def load_checkpoint(path):
    """Returns (params, scale, schedule_info) with schedule_info = (T, b0, b1) or None."""
    with open(path, "rb") as fh:
        if fh.read(4) != CHECKPOINT_MAGIC:
            raise ValueError("not a denoiser checkpoint")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        ci, c, co, k, h, w = struct.unpack("<6I", fh.read(24))
        cfg = NetworkConfig(in_features=ci, hidden_features=c, out_features=co,
                            num_blocks=k, height=h, width=w)
        scale, T, b0, b1 = struct.unpack("<dIdd", fh.read(28))
        (count,) = struct.unpack("<I", fh.read(4))
        shapes = _slice_shapes(cfg)
        tensors = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", fh.read(2))
            name = fh.read(nlen).decode("utf-8")
            (size,) = struct.unpack("<I", fh.read(4))
            data = np.frombuffer(fh.read(4 * size), dtype="<f4").astype(np.float64)
            tensors[name] = data.reshape(shapes[name])
    params = DenoiserParams(cfg, tensors)
    info = (T, b0, b1) if T else None
    return params, scale, info
