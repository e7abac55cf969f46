"""Forward-backward consistency masks.

A pixel survives the check when the forward flow and the backward flow
sampled at its landing point roughly cancel:

    |f(p) + b(p + f(p))|^2 < alpha1 * (|f(p)|^2 + |b(p + f(p))|^2) + alpha2

and p + f(p) stays inside the image. Masks are treated as constants of the
state they were computed from; nothing differentiates through them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import bilinear_sample

__all__ = ["FBCheckParams", "fb_check", "intersect"]


@dataclass(frozen=True)
class FBCheckParams:
    alpha1: float = 0.01
    alpha2: float = 0.5

    def __post_init__(self):
        if self.alpha1 < 0.0 or self.alpha2 < 0.0:
            raise ValueError("thresholds must be non-negative")


def fb_check(fwd: np.ndarray, bwd: np.ndarray, params: FBCheckParams = FBCheckParams()):
    """Mask of pixels whose forward/backward flows are mutually consistent.

    fwd and bwd are (H, W, 2) fields of the two directions; returns (H, W) bool.
    """
    fwd = np.asarray(fwd, dtype=float)
    bwd = np.asarray(bwd, dtype=float)
    if fwd.shape != bwd.shape or fwd.ndim != 3 or fwd.shape[2] != 2:
        raise ValueError("flows must both be (H, W, 2)")
    h, w = fwd.shape[:2]
    ys, xs = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float), indexing="ij")
    back, inb = bilinear_sample(bwd, xs + fwd[..., 0], ys + fwd[..., 1])
    ru = fwd[..., 0] + back[..., 0]
    rv = fwd[..., 1] + back[..., 1]
    lhs = ru * ru + rv * rv
    mag = (
        fwd[..., 0] * fwd[..., 0]
        + fwd[..., 1] * fwd[..., 1]
        + back[..., 0] * back[..., 0]
        + back[..., 1] * back[..., 1]
    )
    return (lhs < params.alpha1 * mag + params.alpha2) & inb


def intersect(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("mask sizes differ")
    if a.dtype != np.bool_ or b.dtype != np.bool_:
        raise ValueError("masks must be boolean")
    return a & b
