"""
Largest real root of a cubic
============================
root_plus(a, b, c, d) = the largest real x with ax³ + bx² + cx + d = 0.

Closed form (Cardano / trigonometric) on the depressed cubic, vectorised over
numpy arrays, followed by one Newton step. The μ-update calls it once per
space–time cell with a = 1, c = 0, d <= 0.
"""
from __future__ import annotations

from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

_THIRD = 1.0 / 3.0


def root_plus(a: ArrayLike, b: ArrayLike, c: ArrayLike, d: ArrayLike) -> ArrayLike:
    a, b, c, d = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, d)))
    if np.any(a == 0):
        raise ValueError("root_plus: leading coefficient a must be nonzero")

    B, C, D = b / a, c / a, d / a
    shift = B * _THIRD

    # x = y - B/3  →  y³ + p·y + q = 0
    p = C - B * shift
    q = (2.0 * B * B * B - 9.0 * B * C + 27.0 * D) / 27.0
    disc = 0.25 * q * q + (p * _THIRD) ** 3

    with np.errstate(invalid="ignore", divide="ignore"):
        # One real root: pick the cube root without cancellation, then S + U
        sqrt_disc = np.sqrt(np.maximum(disc, 0.0))
        S = np.cbrt(-0.5 * q - np.copysign(sqrt_disc, q))
        U = np.where(S != 0.0, -p / (3.0 * S), 0.0)
        single = S + U

        # Three real roots: y_k = 2√(-p/3)·cos((θ - 2πk)/3), k = 0 is the largest
        r = np.sqrt(np.maximum(-p * _THIRD, 0.0))
        cos_theta = np.where(r > 0.0, -0.5 * q / np.where(r > 0.0, r, 1.0) ** 3, 1.0)
        theta = np.arccos(np.clip(cos_theta, -1.0, 1.0))
        triple = 2.0 * r * np.cos(theta * _THIRD)

    x_single, x_triple = single - shift, triple - shift
    # disc ≈ 0 with q > 0: the single-root formula lands on the simple root,
    # while the larger double root is still given by the trigonometric branch
    near_double = (p < 0.0) & (x_triple > x_single) & _is_root(x_triple, B, C, D)
    x = np.where((disc < 0.0) | near_double, x_triple, x_single)
    x = _newton_polish(x, B, C, D)
    return float(x) if x.ndim == 0 else x


def _is_root(x: np.ndarray, B: np.ndarray, C: np.ndarray, D: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    value = ((x + B) * x + C) * x + D
    ax = np.abs(x)
    scale = 1.0 + ax ** 3 + np.abs(B) * ax ** 2 + np.abs(C) * ax + np.abs(D)
    return np.abs(value) <= rtol * scale


def _newton_polish(x: np.ndarray, B: np.ndarray, C: np.ndarray, D: np.ndarray) -> np.ndarray:
    """One Newton step on the monic cubic, kept only where it lowers |P(x)|."""
    value = ((x + B) * x + C) * x + D
    slope = (3.0 * x + 2.0 * B) * x + C
    with np.errstate(invalid="ignore", divide="ignore"):
        step = np.where(slope != 0.0, value / slope, 0.0)
    candidate = x - step
    new_value = ((candidate + B) * candidate + C) * candidate + D
    return np.where(np.abs(new_value) <= np.abs(value), candidate, x)
