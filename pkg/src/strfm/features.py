"""Random space-time feature functions and their analytic derivatives.

Two families are provided. ``STC`` applies one activation to a joint affine
function of the normalized space and time coordinates; ``SoV`` multiplies a
spatial activation by a temporal one. Parameters are drawn uniformly from
``[-R_m, R_m]`` with an independent sub-seed per ``(spatial cell, time cell,
feature)`` so a bank does not depend on evaluation order.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from pathlib import Path

import numpy as np

from .geometry import SubdomainDecomposition
from .partition import PoUKind, pou_arrays, support_mask

MAX_ORDER_PER_AXIS = 2


class FeatureKind(str, enum.Enum):
    STC = "STC"
    SOV = "SoV"

    @classmethod
    def coerce(cls, value) -> "FeatureKind":
        if isinstance(value, cls):
            return value
        for member in cls:
            if str(value).lower() == member.value.lower():
                return member
        raise ValueError(f"unknown feature kind {value!r}; expected 'STC' or 'SoV'")


@dataclass(frozen=True, order=True)
class DerivativeIndex:
    """Orders of partial differentiation: per spatial axis, then time."""

    space: tuple
    time: int = 0

    def __post_init__(self):
        space = tuple(int(a) for a in self.space)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "time", int(self.time))
        if any(a < 0 for a in space) or self.time < 0:
            raise ValueError(f"negative derivative order in {self}")
        if any(a > MAX_ORDER_PER_AXIS for a in space) or self.time > MAX_ORDER_PER_AXIS:
            raise ValueError(f"derivative order above {MAX_ORDER_PER_AXIS} per axis: {self}")

    @classmethod
    def zero(cls, d_x: int) -> "DerivativeIndex":
        return cls((0,) * d_x, 0)

    @classmethod
    def of(cls, d_x: int, axis: int | None = None, order: int = 1, time: int = 0) -> "DerivativeIndex":
        space = [0] * d_x
        if axis is not None:
            space[axis] = order
        return cls(tuple(space), time)

    @property
    def d_x(self) -> int:
        return len(self.space)

    @property
    def total(self) -> int:
        return sum(self.space) + self.time

    @property
    def orders(self) -> tuple:
        return self.space + (self.time,)

    def lower_indices(self):
        """All indices ``beta <= self`` componentwise."""
        for orders in itertools.product(*[range(m + 1) for m in self.orders]):
            yield DerivativeIndex(orders[:-1], orders[-1])

    def __str__(self):
        parts = [f"x{k}^{a}" for k, a in enumerate(self.space) if a]
        if self.time:
            parts.append(f"t^{self.time}")
        return "d[" + ",".join(parts) + "]" if parts else "id"


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _tanh_poly(order: int) -> np.ndarray:
    """Coefficients (ascending) of the polynomial P with tanh^(order)(u) = P(tanh u)."""
    if order == 0:
        return np.array([0.0, 1.0])
    p = _tanh_poly(order - 1)
    dp = np.polynomial.polynomial.polyder(p)
    return np.polynomial.polynomial.polymul(dp, [1.0, 0.0, -1.0])


def activation_derivatives(name: str, u: np.ndarray, max_order: int) -> list:
    """``[sigma(u), sigma'(u), ..., sigma^(max_order)(u)]``."""
    if name == "tanh":
        v = np.tanh(u)
        out = [v]
        if max_order >= 1:
            w = 1.0 - v * v
            out.append(w)
        if max_order >= 2:
            out.append(-2.0 * v * w)
        for m in range(3, max_order + 1):
            out.append(np.polynomial.polynomial.polyval(v, _tanh_poly(m)))
        return out
    if name in ("sin", "cos"):
        shift = 0.0 if name == "sin" else 0.5 * np.pi
        return [np.sin(u + shift + 0.5 * np.pi * m) for m in range(max_order + 1)]
    raise ValueError(f"unknown activation {name!r}")


# ---------------------------------------------------------------------------
# banks
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FeatureBank:
    """Fixed random inner parameters for every space-time cell.

    Arrays are indexed ``[ix, it_bank, j]`` where ``it_bank`` is 0 for every
    time cell when ``share_across_time`` is set.
    """

    kind: FeatureKind
    decomp: SubdomainDecomposition
    J_n: int
    R_m: float
    seed: int
    share_across_time: bool
    activation: str
    k_x: np.ndarray   # (Ns, Nt_bank, J, d_x)
    k_t: np.ndarray   # (Ns, Nt_bank, J)
    b: np.ndarray     # STC bias, or spatial bias for SoV
    b_t: np.ndarray   # temporal bias (SoV only; zeros for STC)

    @property
    def d_x(self) -> int:
        return self.decomp.d_x

    def _it(self, it: int) -> int:
        return 0 if self.share_across_time else it

    def params(self, ix: int, it: int):
        i = self._it(it)
        return self.k_x[ix, i], self.k_t[ix, i], self.b[ix, i], self.b_t[ix, i]

    def to_dict(self) -> dict:
        return {
            "format": "strfm-feature-bank/1",
            "kind": self.kind.value,
            "activation": self.activation,
            "J_n": self.J_n,
            "R_m": self.R_m,
            "seed": self.seed,
            "share_across_time": self.share_across_time,
            "n_x": list(self.decomp.n_x),
            "n_t": self.decomp.n_t,
            "lo": self.decomp.lo.tolist(),
            "hi": self.decomp.hi.tolist(),
            "t_start": self.decomp.t_start,
            "t_end": self.decomp.t_end,
            "k_x": self.k_x.tolist(),
            "k_t": self.k_t.tolist(),
            "b": self.b.tolist(),
            "b_t": self.b_t.tolist(),
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureBank":
        decomp = SubdomainDecomposition(np.asarray(d["lo"], float), np.asarray(d["hi"], float),
                                        tuple(d["n_x"]), float(d["t_start"]), float(d["t_end"]),
                                        int(d["n_t"]))
        return cls(FeatureKind.coerce(d["kind"]), decomp, int(d["J_n"]), float(d["R_m"]),
                   int(d["seed"]), bool(d["share_across_time"]), d["activation"],
                   np.asarray(d["k_x"], float), np.asarray(d["k_t"], float),
                   np.asarray(d["b"], float), np.asarray(d["b_t"], float))

    @classmethod
    def load(cls, path) -> "FeatureBank":
        return cls.from_dict(json.loads(Path(path).read_text()))


def draw_bank(seed: int, kind, decomp: SubdomainDecomposition, J_n: int, R_m: float = 1.0,
              share_across_time: bool = False, activation: str = "tanh") -> FeatureBank:
    """Draw a feature bank; each feature gets its own generator keyed by ``(ix, it, j)``."""
    kind = FeatureKind.coerce(kind)
    if J_n < 1:
        raise ValueError(f"J_n must be >= 1, got {J_n}")
    if not R_m > 0:
        raise ValueError(f"R_m must be positive, got {R_m}")
    if activation not in ("tanh", "sin", "cos"):
        raise ValueError(f"unknown activation {activation!r}")
    d_x = decomp.d_x
    n_tb = 1 if share_across_time else decomp.n_t
    per = d_x + (2 if kind is FeatureKind.STC else 3)
    raw = np.empty((decomp.n_space_cells, n_tb, J_n, per))
    for ix in range(decomp.n_space_cells):
        for it in range(n_tb):
            for j in range(J_n):
                ss = np.random.SeedSequence(int(seed), spawn_key=(int(ix), int(it), int(j)))
                raw[ix, it, j] = np.random.Generator(np.random.PCG64(ss)).uniform(-R_m, R_m, per)
    k_x = raw[..., :d_x].copy()
    k_t = raw[..., d_x].copy()
    if kind is FeatureKind.STC:
        b = raw[..., d_x + 1].copy()
        b_t = np.zeros_like(b)
    else:
        b = raw[..., d_x + 1].copy()
        b_t = raw[..., d_x + 2].copy()
    return FeatureBank(kind, decomp, int(J_n), float(R_m), int(seed), bool(share_across_time),
                       activation, k_x, k_t, b, b_t)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _check_indices(needed, d_x: int) -> list:
    needed = list(needed)
    for idx in needed:
        if not isinstance(idx, DerivativeIndex):
            raise TypeError(f"expected DerivativeIndex, got {type(idx).__name__}")
        if idx.d_x != d_x:
            raise ValueError(f"derivative index {idx} does not match d_x={d_x}")
    return needed


def feature_values(bank: FeatureBank, ix: int, it: int, X, T, needed, zt=None) -> dict:
    """Feature jets of cell ``(ix, it)`` at points ``(X[n], T[n])``.

    Returns ``{DerivativeIndex: array (n, J_n)}`` with derivatives taken in
    physical coordinates. ``zt`` optionally supplies the cell-local time
    coordinates of ``T`` directly (avoids round-off from re-mapping).
    """
    decomp = bank.decomp
    needed = _check_indices(needed, decomp.d_x)
    X = np.asarray(X, dtype=float).reshape(-1, decomp.d_x)
    T = np.asarray(T, dtype=float).reshape(-1)
    k_x, k_t, b, b_t = bank.params(ix, it)
    zx = decomp.map_space(ix, X)
    zt = decomp.map_time(it, T) if zt is None else np.asarray(zt, dtype=float).reshape(-1)
    sx = decomp.space_scale(ix)
    st = decomp.time_scale(it)
    wx = k_x * sx            # (J, d_x)
    wt = k_t * st            # (J,)
    out = {}
    if bank.kind is FeatureKind.STC:
        u = zx @ k_x.T + zt[:, None] * k_t + b
        sig = activation_derivatives(bank.activation, u, max(i.total for i in needed))
        for idx in needed:
            factor = np.prod(wx ** np.asarray(idx.space), axis=1) * wt ** idx.time
            out[idx] = sig[idx.total] * factor
    else:
        ux = zx @ k_x.T + b
        ut = zt[:, None] * k_t + b_t
        sx_d = activation_derivatives(bank.activation, ux, max(sum(i.space) for i in needed))
        st_d = activation_derivatives(bank.activation, ut, max(i.time for i in needed))
        for idx in needed:
            fx = np.prod(wx ** np.asarray(idx.space), axis=1)
            out[idx] = (sx_d[sum(idx.space)] * fx) * (st_d[idx.time] * wt ** idx.time)
    return out


def pou_values(pou, decomp: SubdomainDecomposition, ix: int, it: int, X, T, needed, zt=None) -> dict:
    """Space-time PoU of cell ``(ix, it)`` and its derivatives in physical coordinates."""
    X = np.asarray(X, dtype=float).reshape(-1, decomp.d_x)
    T = np.asarray(T, dtype=float).reshape(-1)
    zx = decomp.map_space(ix, X)
    zt = decomp.map_time(it, T) if zt is None else np.asarray(zt, dtype=float).reshape(-1)
    scales = list(decomp.space_scale(ix)) + [decomp.time_scale(it)]
    axes = [pou_arrays(pou, zx[:, k]) for k in range(decomp.d_x)] + [pou_arrays(pou, zt)]
    out = {}
    for idx in needed:
        prod = np.ones(len(T))
        for k, m in enumerate(idx.orders):
            prod = prod * axes[k][m] * scales[k] ** m
        out[idx] = prod
    return out


def basis_values(bank: FeatureBank, pou, ix: int, it: int, X, T, needed, zt=None) -> dict:
    """Jets of ``psi_{ix,it} * phi_{ix,it,j}`` via the generalized Leibniz rule."""
    pou = PoUKind.coerce(pou)
    needed = _check_indices(needed, bank.d_x)
    closure = set()
    for idx in needed:
        closure.update(idx.lower_indices())
    phi = feature_values(bank, ix, it, X, T, closure, zt)
    psi = pou_values(pou, bank.decomp, ix, it, X, T, closure, zt)
    out = {}
    for idx in needed:
        acc = np.zeros_like(phi[idx])
        for beta in idx.lower_indices():
            coeff = 1
            for m, k in zip(idx.orders, beta.orders):
                coeff *= comb(m, k)
            rest = DerivativeIndex(tuple(m - k for m, k in zip(idx.space, beta.space)),
                                   idx.time - beta.time)
            acc += coeff * psi[beta][:, None] * phi[rest]
        out[idx] = acc
    return out


def cell_support(pou, decomp: SubdomainDecomposition, ix: int, it: int, X, T) -> np.ndarray:
    """Mask of points inside the (extended) support of space-time cell ``(ix, it)``."""
    X = np.asarray(X, dtype=float).reshape(-1, decomp.d_x)
    mask = support_mask(pou, decomp.map_time(it, T))
    zx = decomp.map_space(ix, X)
    for k in range(decomp.d_x):
        mask &= support_mask(pou, zx[:, k])
    return mask


def _point_jet(values: dict, j: int) -> dict:
    return {idx: float(v[0, j]) for idx, v in values.items()}


def feature_jet(bank: FeatureBank, cell, j: int, x, t: float, needed) -> dict:
    """Scalar jet of feature ``j`` of cell ``(ix, it)`` at ``(x, t)``."""
    ix, it = cell
    return _point_jet(feature_values(bank, ix, it, np.atleast_1d(x), [t], needed), j)


def basis_jet(bank: FeatureBank, pou, cell, j: int, x, t: float, needed) -> dict:
    """Scalar jet of the PoU-weighted basis function ``psi * phi_j`` at ``(x, t)``."""
    ix, it = cell
    return _point_jet(basis_values(bank, pou, ix, it, np.atleast_1d(x), [t], needed), j)
