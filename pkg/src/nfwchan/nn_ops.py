"""Hand-rolled differentiable tensor ops for the denoiser.

Every op returns (output, cache) from its forward and consumes (cache,
upstream gradient) in its backward. Shapes follow the (batch, channels,
height, width) convention; all math is plain numpy so gradients can be
validated against central finite differences in float64.
"""

from __future__ import annotations

import numpy as np


def conv2d_forward(x, w, b=None, dilation: int = 1):
    """Same-padded 2-D convolution. x: (B,Ci,H,W), w: (Co,Ci,kh,kw)."""
    B, Ci, H, W = x.shape
    Co, Ci2, kh, kw = w.shape
    if Ci != Ci2:
        raise ValueError("channel mismatch between input and kernel")
    ph = dilation * (kh - 1) // 2
    pw = dilation * (kw - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    out = np.zeros((B, Co, H, W), dtype=x.dtype)
    for a in range(kh):
        for c in range(kw):
            patch = xp[:, :, a * dilation : a * dilation + H, c * dilation : c * dilation + W]
            out += np.einsum("oi,biHW->boHW", w[:, :, a, c], patch, optimize=True)
    if b is not None:
        out += b[None, :, None, None]
    cache = (xp, x.shape, w, dilation)
    return out, cache


def conv2d_backward(cache, gout):
    xp, xshape, w, dilation = cache
    B, Ci, H, W = xshape
    Co, _, kh, kw = w.shape
    ph = dilation * (kh - 1) // 2
    pw = dilation * (kw - 1) // 2
    gw = np.zeros_like(w)
    gxp = np.zeros_like(xp)
    for a in range(kh):
        for c in range(kw):
            sl = np.s_[:, :, a * dilation : a * dilation + H, c * dilation : c * dilation + W]
            patch = xp[sl]
            gw[:, :, a, c] = np.einsum("boHW,biHW->oi", gout, patch, optimize=True)
            gxp[sl] += np.einsum("oi,boHW->biHW", w[:, :, a, c], gout, optimize=True)
    gb = gout.sum(axis=(0, 2, 3))
    gx = gxp[:, :, ph : ph + H, pw : pw + W] if (ph or pw) else gxp
    return gx, gw, gb


def depthwise_conv2d_forward(x, w):
    """Per-channel same-padded convolution. x: (B,C,H,W), w: (C,kh,kw), no bias."""
    B, C, H, W = x.shape
    C2, kh, kw = w.shape
    if C != C2:
        raise ValueError("depthwise kernel channel mismatch")
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    out = np.zeros_like(x)
    for a in range(kh):
        for c in range(kw):
            out += w[None, :, a, c, None, None] * xp[:, :, a : a + H, c : c + W]
    return out, (xp, x.shape, w)


def depthwise_conv2d_backward(cache, gout):
    xp, xshape, w = cache
    B, C, H, W = xshape
    _, kh, kw = w.shape
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    gw = np.zeros_like(w)
    gxp = np.zeros_like(xp)
    for a in range(kh):
        for c in range(kw):
            patch = xp[:, :, a : a + H, c : c + W]
            gw[:, a, c] = np.einsum("bchw,bchw->c", gout, patch, optimize=True)
            gxp[:, :, a : a + H, c : c + W] += w[None, :, a, c, None, None] * gout
    return gxp[:, :, ph : ph + H, pw : pw + W], gw


def pointwise_forward(x, w, b=None):
    """1x1 convolution: channel mixing. w: (Co, Ci)."""
    out = np.einsum("oi,bihw->bohw", w, x, optimize=True)
    if b is not None:
        out += b[None, :, None, None]
    return out, (x, w)


def pointwise_backward(cache, gout):
    x, w = cache
    gw = np.einsum("bohw,bihw->oi", gout, x, optimize=True)
    gx = np.einsum("oi,bohw->bihw", w, gout, optimize=True)
    gb = gout.sum(axis=(0, 2, 3))
    return gx, gw, gb


def layernorm_forward(x, eps: float = 1e-6):
    """Per-(sample, channel) normalization over spatial dims, no affine."""
    mu = x.mean(axis=(2, 3), keepdims=True)
    var = x.var(axis=(2, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    y = (x - mu) * inv
    return y, (y, inv)


def layernorm_backward(cache, gout):
    y, inv = cache
    gmean = gout.mean(axis=(2, 3), keepdims=True)
    gymean = (gout * y).mean(axis=(2, 3), keepdims=True)
    return inv * (gout - gmean - y * gymean)


def sigmoid_forward(x):
    y = 1.0 / (1.0 + np.exp(-x))
    return y, y


def sigmoid_backward(y, gout):
    return gout * y * (1.0 - y)


def silu_forward(x):
    s = 1.0 / (1.0 + np.exp(-x))
    return x * s, (x, s)


def silu_backward(cache, gout):
    x, s = cache
    return gout * s * (1.0 + x * (1.0 - s))


def linear_forward(x, w, b):
    """x: (B, Fin), w: (Fout, Fin)."""
    return x @ w.T + b, (x, w)


def linear_backward(cache, gout):
    x, w = cache
    return gout @ w, gout.T @ x, gout.sum(axis=0)


def global_avgpool_forward(x):
    B, C, H, W = x.shape
    return x.mean(axis=(2, 3)), (x.shape,)


def global_avgpool_backward(cache, gout):
    (shape,) = cache
    B, C, H, W = shape
    return np.broadcast_to(gout[:, :, None, None] / (H * W), shape).copy()


def global_maxpool_forward(x):
    B, C, H, W = x.shape
    flat = x.reshape(B, C, H * W)
    idx = flat.argmax(axis=2)  # first maximizer wins on ties
    return np.take_along_axis(flat, idx[:, :, None], axis=2)[:, :, 0], (x.shape, idx)


def global_maxpool_backward(cache, gout):
    shape, idx = cache
    B, C, H, W = shape
    gx = np.zeros((B, C, H * W), dtype=gout.dtype)
    np.put_along_axis(gx, idx[:, :, None], gout[:, :, None], axis=2)
    return gx.reshape(shape)


def channel_mean_forward(x):
    return x.mean(axis=1, keepdims=True), (x.shape,)


def channel_mean_backward(cache, gout):
    (shape,) = cache
    return np.broadcast_to(gout / shape[1], shape).copy()


def channel_max_forward(x):
    idx = x.argmax(axis=1)  # first maximizer wins on ties
    return np.take_along_axis(x, idx[:, None], axis=1), (x.shape, idx)


def channel_max_backward(cache, gout):
    shape, idx = cache
    gx = np.zeros(shape, dtype=gout.dtype)
    np.put_along_axis(gx, idx[:, None], gout, axis=1)
    return gx
