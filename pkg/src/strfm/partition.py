"""Partition-of-unity functions on normalized cell coordinates.

A cell is mapped onto ``[-1, 1]`` per axis. Two PoU kinds are supported:

* ``A``: the indicator of ``[-1, 1)``; cells do not overlap.
* ``B``: a C^1 sine blend supported on ``[-5/4, 5/4]`` with a flat plateau on
  ``[-3/4, 3/4]``; neighbouring normalized cells overlap in a band of width 1/2.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

PLATEAU = 0.75
SUPPORT = 1.25


class PoUKind(str, enum.Enum):
    A = "A"
    B = "B"

    @classmethod
    def coerce(cls, value) -> "PoUKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown PoU kind {value!r}; expected 'A' or 'B'") from None


@dataclass(frozen=True)
class Jet1D:
    value: float
    d1: float
    d2: float


def pou_arrays(kind, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized PoU value and first two derivatives with respect to ``z``."""
    kind = PoUKind.coerce(kind)
    z = np.asarray(z, dtype=float)
    if kind is PoUKind.A:
        value = ((z >= -1.0) & (z < 1.0)).astype(float)
        zero = np.zeros_like(z)
        return value, zero, zero.copy()

    value = np.zeros_like(z)
    d1 = np.zeros_like(z)
    d2 = np.zeros_like(z)
    s = np.sin(2.0 * np.pi * z)
    c = np.cos(2.0 * np.pi * z)
    left = (z >= -SUPPORT) & (z < -PLATEAU)
    middle = (z >= -PLATEAU) & (z <= PLATEAU)
    right = (z > PLATEAU) & (z <= SUPPORT)
    value[left] = 0.5 * (1.0 + s[left])
    d1[left] = np.pi * c[left]
    d2[left] = -2.0 * np.pi**2 * s[left]
    value[middle] = 1.0
    value[right] = 0.5 * (1.0 - s[right])
    d1[right] = -np.pi * c[right]
    d2[right] = 2.0 * np.pi**2 * s[right]
    return value, d1, d2


def pou_eval(kind, z: float) -> Jet1D:
    v, d1, d2 = pou_arrays(kind, np.array([z], dtype=float))
    return Jet1D(float(v[0]), float(d1[0]), float(d2[0]))


def pou_derivative(kind, z, order: int) -> np.ndarray:
    if order < 0 or order > 2:
        raise ValueError(f"PoU derivative order {order} is not supported (max 2)")
    return pou_arrays(kind, z)[order]


def support_mask(kind, z) -> np.ndarray:
    """Points where the PoU (or one of its derivatives) can be nonzero."""
    kind = PoUKind.coerce(kind)
    z = np.asarray(z, dtype=float)
    if kind is PoUKind.A:
        return (z >= -1.0) & (z < 1.0)
    return (z > -SUPPORT) & (z < SUPPORT)


def pou_spacetime(kind, z_space, z_time, needed: Iterable, scales=None) -> dict:
    """Space-time tensor-product PoU and requested partial derivatives.

    Parameters
    ----------
    kind : PoUKind or str
    z_space : array_like, shape (d_x,) or (n, d_x)
        Normalized spatial coordinates.
    z_time : float or array_like, shape (n,)
        Normalized time coordinate.
    needed : iterable of DerivativeIndex
    scales : sequence of float, optional
        Chain-rule factors ``dz/dx`` per axis (spatial axes then time). With the
        default of ones the derivatives are taken with respect to ``z``.

    Returns
    -------
    dict
        ``DerivativeIndex -> value`` (scalar inputs) or array of shape (n,).
    """
    z_space = np.asarray(z_space, dtype=float)
    scalar = z_space.ndim == 1
    zs = np.atleast_2d(z_space)
    zt = np.atleast_1d(np.asarray(z_time, dtype=float))
    d_x = zs.shape[1]
    if scales is None:
        scales = np.ones(d_x + 1)
    axes = [pou_arrays(kind, zs[:, k]) for k in range(d_x)] + [pou_arrays(kind, zt)]
    out = {}
    for idx in needed:
        orders = tuple(idx.space) + (idx.time,)
        if len(orders) != d_x + 1:
            raise ValueError(f"derivative index {idx} does not match d_x={d_x}")
        prod = np.ones(zs.shape[0])
        for k, m in enumerate(orders):
            if m > 2:
                raise ValueError(f"PoU derivative order {m} is not supported (max 2)")
            prod = prod * axes[k][m] * scales[k] ** m
        out[idx] = float(prod[0]) if scalar else prod
    return out


def partition_sum(kind, z, n_cells_each_side: int = 3) -> np.ndarray:
    """Sum of translated PoU copies ``sum_i psi(z - 2 i)`` (diagnostic helper)."""
    z = np.asarray(z, dtype=float)
    total = np.zeros_like(z)
    for i in range(-n_cells_each_side, n_cells_each_side + 1):
        total += pou_arrays(kind, z - 2.0 * i)[0]
    return total
