"""Differentiable bilinear sampling, inverse warping, and pyramids.

Sampling clamps to the image border; coordinates outside
[0, W-1] x [0, H-1] still return the clamped-edge value but are flagged
invalid, and their coordinate derivative is zero (the clamped lookup is
locally constant there, so this matches finite differences).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "bilinear_sample",
    "bilinear_sample_grad",
    "bilinear_scatter",
    "inverse_warp",
    "downsample_image",
    "downsample_depth",
    "downsample_flow",
    "downsample_image_adjoint",
    "downsample_flow_adjoint",
    "image_pyramid",
    "depth_pyramid",
    "flow_pyramid",
]


def _cell(height, width, xs, ys):
    """Shared bilinear bookkeeping: corner indices, weights, validity."""
    xc = np.clip(xs, 0.0, width - 1.0)
    yc = np.clip(ys, 0.0, height - 1.0)
    x0 = np.floor(xc).astype(np.intp)
    y0 = np.floor(yc).astype(np.intp)
    x0 = np.minimum(x0, max(width - 2, 0))
    y0 = np.minimum(y0, max(height - 2, 0))
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    wx = xc - x0
    wy = yc - y0
    inbounds = (xs >= 0.0) & (xs <= width - 1.0) & (ys >= 0.0) & (ys <= height - 1.0)
    return x0, x1, y0, y1, wx, wy, inbounds


def bilinear_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Sample img at continuous coordinates.

    img is (H, W) or (H, W, C); xs/ys share any shape S. Returns
    (values with shape S or S+(C,), inbounds bool mask of shape S).
    """
    img = np.asarray(img, dtype=float)
    h, w = img.shape[:2]
    x0, x1, y0, y1, wx, wy, inb = _cell(h, w, xs, ys)
    if img.ndim == 2:
        v00 = img[y0, x0]
        v01 = img[y0, x1]
        v10 = img[y1, x0]
        v11 = img[y1, x1]
    else:
        flat = img.reshape(h * w, -1)
        v00 = flat[y0 * w + x0]
        v01 = flat[y0 * w + x1]
        v10 = flat[y1 * w + x0]
        v11 = flat[y1 * w + x1]
        wx = wx[..., None]
        wy = wy[..., None]
    top = v00 + wx * (v01 - v00)
    bot = v10 + wx * (v11 - v10)
    return top + wy * (bot - top), inb


def bilinear_sample_grad(img: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Sample a single-channel image and return coordinate derivatives.

    Returns (values, d/dx, d/dy, inbounds). Derivatives are zero where the
    lookup is clamped (coordinate outside the valid range on that axis).
    """
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a single-channel image")
    h, w = img.shape
    x0, x1, y0, y1, wx, wy, inb = _cell(h, w, xs, ys)
    v00 = img[y0, x0]
    v01 = img[y0, x1]
    v10 = img[y1, x0]
    v11 = img[y1, x1]
    top = v00 + wx * (v01 - v00)
    bot = v10 + wx * (v11 - v10)
    val = top + wy * (bot - top)
    free_x = (xs >= 0.0) & (xs <= w - 1.0)
    free_y = (ys >= 0.0) & (ys <= h - 1.0)
    ddx = np.where(free_x, (v01 - v00) + wy * ((v11 - v10) - (v01 - v00)), 0.0)
    ddy = np.where(free_y, bot - top, 0.0)
    return val, ddx, ddy, inb


def bilinear_scatter(grad_out, xs, ys, shape):
    """Adjoint of `bilinear_sample` w.r.t. the source image.

    Accumulates grad_out (same shape as xs) into an (H, W) array using the
    same corner weights the forward lookup used (including clamping).
    """
    h, w = shape
    x0, x1, y0, y1, wx, wy, _ = _cell(h, w, xs, ys)
    g = np.asarray(grad_out, dtype=float).ravel()
    x0 = x0.ravel()
    x1 = x1.ravel()
    y0 = y0.ravel()
    y1 = y1.ravel()
    wx = wx.ravel()
    wy = wy.ravel()
    idx = np.concatenate([y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1])
    wgt = np.concatenate(
        [
            g * (1.0 - wx) * (1.0 - wy),
            g * wx * (1.0 - wy),
            g * (1.0 - wx) * wy,
            g * wx * wy,
        ]
    )
    return np.bincount(idx, weights=wgt, minlength=h * w).reshape(h, w)


def inverse_warp(target: np.ndarray, flow: np.ndarray):
    """Pull target back through flow: out(p) = target(p + flow(p)).

    Returns (warped, valid) where valid is False wherever p + flow(p) falls
    outside the target bounds (the warped value there is a clamped lookup).
    """
    flow = np.asarray(flow, dtype=float)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError("flow must be (H, W, 2)")
    h, w = flow.shape[:2]
    if np.asarray(target).shape[:2] != (h, w):
        raise ValueError("target and flow sizes differ")
    ys, xs = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float), indexing="ij")
    return bilinear_sample(target, xs + flow[..., 0], ys + flow[..., 1])


def _pool2(a: np.ndarray) -> np.ndarray:
    """2x2 average pooling with edge replication for odd sizes."""
    h, w = a.shape[:2]
    if h < 2 or w < 2:
        raise ValueError("cannot downsample a dimension of size 1")
    if h % 2:
        a = np.concatenate([a, a[-1:]], axis=0)
    if w % 2:
        a = np.concatenate([a, a[:, -1:]], axis=1)
    return 0.25 * (a[0::2, 0::2] + a[0::2, 1::2] + a[1::2, 0::2] + a[1::2, 1::2])


def _pool2_adjoint(grad: np.ndarray, fine_shape) -> np.ndarray:
    h, w = fine_shape
    hp, wp = h + (h % 2), w + (w % 2)
    out = np.zeros((hp, wp) + grad.shape[2:])
    q = 0.25 * grad
    out[0::2, 0::2] += q
    out[0::2, 1::2] += q
    out[1::2, 0::2] += q
    out[1::2, 1::2] += q
    if h % 2:
        out[h - 1] += out[h]
    if w % 2:
        out[:, w - 1] += out[:, w]
    return out[:h, :w]


def downsample_image(img: np.ndarray) -> np.ndarray:
    return _pool2(np.asarray(img, dtype=float))


def downsample_depth(depth: np.ndarray) -> np.ndarray:
    return _pool2(np.asarray(depth, dtype=float))


def downsample_flow(flow: np.ndarray) -> np.ndarray:
    """Average-pool and halve the displacements to stay in level units."""
    return 0.5 * _pool2(np.asarray(flow, dtype=float))


def downsample_image_adjoint(grad: np.ndarray, fine_shape) -> np.ndarray:
    """Adjoint of downsample_image/downsample_depth (they share the kernel)."""
    return _pool2_adjoint(np.asarray(grad, dtype=float), fine_shape)


def downsample_flow_adjoint(grad: np.ndarray, fine_shape) -> np.ndarray:
    return 0.5 * _pool2_adjoint(np.asarray(grad, dtype=float), fine_shape)


def _pyramid(arr, levels, step):
    if levels < 1:
        raise ValueError("need at least one level")
    out = [np.asarray(arr, dtype=float)]
    for _ in range(levels - 1):
        out.append(step(out[-1]))
    return out


def image_pyramid(img, levels):
    return _pyramid(img, levels, downsample_image)


def depth_pyramid(depth, levels):
    return _pyramid(depth, levels, downsample_depth)


def flow_pyramid(flow, levels):
    return _pyramid(flow, levels, downsample_flow)
