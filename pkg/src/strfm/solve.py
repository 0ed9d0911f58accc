"""Least-squares solvers, global and block-marching drivers, and model evaluation."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
import scipy.linalg

from .assembly import (AssemblyError, RowBlock, assemble_blocks, block_columns,
                       iter_row_blocks)
from .features import DerivativeIndex, FeatureBank, draw_bank, feature_values, basis_values, cell_support
from .geometry import SubdomainDecomposition, decompose, sample_collocation
from .partition import PoUKind
from .problems import ProblemSpec

DEFAULT_TRUNC_TOL = 1e-12


class SolveError(RuntimeError):
    pass


class DivergenceError(SolveError):
    pass


@dataclass
class SolveReport:
    coefficients: np.ndarray
    residual_2norm: float
    numerical_rank: int
    sigma_max: float
    sigma_min_kept: float
    truncation_tol: float
    wall_time: float
    n_rows: int = 0
    n_cols: int = 0
    rhs_2norm: float = 0.0

    def summary(self) -> dict:
        return {
            "residual_2norm": self.residual_2norm,
            "rhs_2norm": self.rhs_2norm,
            "numerical_rank": self.numerical_rank,
            "sigma_max": self.sigma_max,
            "sigma_min_kept": self.sigma_min_kept,
            "truncation_tol": self.truncation_tol,
            "wall_time": self.wall_time,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "coefficient_ordering": "(i_x, i_t, j, k)",
        }


def _check_tol(trunc_tol: float) -> float:
    trunc_tol = float(trunc_tol)
    if not 0.0 < trunc_tol < 1.0:
        raise ValueError(f"trunc_tol must lie in (0, 1), got {trunc_tol}")
    return trunc_tol


def lstsq(A, b, trunc_tol: float = DEFAULT_TRUNC_TOL) -> SolveReport:
    """Minimum-norm least squares with relative singular-value truncation."""
    trunc_tol = _check_tol(trunc_tol)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("A must be a nonempty 2D array")
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
    if not (np.isfinite(A).all() and np.isfinite(b).all()):
        raise ValueError("A and b must be finite")
    t0 = time.perf_counter()
    u, _, rank, s = scipy.linalg.lstsq(A, b, cond=trunc_tol, lapack_driver="gelsd")
    wall = time.perf_counter() - t0
    kept = s[s >= trunc_tol * s[0]] if s.size and s[0] > 0 else s[:0]
    return SolveReport(u, float(np.linalg.norm(A @ u - b)), int(rank),
                       float(s[0]) if s.size else 0.0, float(kept[-1]) if kept.size else 0.0,
                       trunc_tol, wall, A.shape[0], A.shape[1], float(np.linalg.norm(b)))


def _r_factor(M: np.ndarray) -> np.ndarray:
    """Triangular factor of ``M`` (rows only as many as needed)."""
    if M.shape[0] <= M.shape[1]:
        return M
    R = scipy.linalg.qr(M, mode="r", overwrite_a=True, check_finite=False)[0]
    # mode="r" returns the full-height factor; keep the triangle as a fresh array
    return np.triu(R[:M.shape[1]])


class CompressedSystem:
    """Orthogonal reduction of a stream of row blocks to a small equivalent system.

    Row blocks with identical column support are merged and reduced to their
    triangular factor of ``[A_g | b_g]``. Orthogonal row transformations
    preserve singular values, so truncated solves on the reduced system match
    those on the full one up to round-off.

    With ``n_t > 1`` every row couples at most two consecutive time cells, and
    the groups are eliminated one time cell at a time, so only one band of the
    system is ever held in full.
    """

    def __init__(self, n_cols: int, nloc: int, n_t: int = 1):
        self.n_cols = n_cols
        self.nloc = nloc
        self.n_t = int(n_t)
        self.groups: dict = {}
        self.n_rows = 0
        self.rhs_sq = 0.0

    def add(self, blk: RowBlock) -> None:
        if not (np.isfinite(blk.A).all() and np.isfinite(blk.b).all()):
            raise SolveError(f"non-finite entries in {blk.tag} rows")
        self.n_rows += blk.A.shape[0]
        self.rhs_sq += float(blk.b @ blk.b)
        M = np.column_stack([blk.A, blk.b])
        prev = self.groups.get(blk.cells)
        if prev is not None:
            M = np.vstack([prev, M])
        self.groups[blk.cells] = _r_factor(M) if M.shape[0] > 2 * M.shape[1] or prev is not None else M

    def extend(self, blocks: Iterable[RowBlock]) -> "CompressedSystem":
        for blk in blocks:
            self.add(blk)
        return self

    def _cols(self, cells) -> np.ndarray:
        return np.concatenate([np.arange(c * self.nloc, (c + 1) * self.nloc) for c in cells])

    def _bands(self) -> Optional[list]:
        """Groups by first time cell, or None when some row spans more than two time cells."""
        bands = [[] for _ in range(self.n_t)]
        for cells in sorted(self.groups):
            times = {c % self.n_t for c in cells}
            if max(times) - min(times) > 1:
                return None
            bands[min(times)].append(cells)
        return bands

    def reduced(self) -> tuple[np.ndarray, np.ndarray, float]:
        """Square-or-smaller system ``(R, z, tail)`` with ``||Au-b||^2 = ||Ru-z||^2 + tail^2``."""
        n = self.n_cols
        bands = self._bands() if self.n_t > 1 else None
        if bands is None:
            # one band holding every time cell
            bands = [sorted(self.groups)]
            time_cols = [np.arange(n)]
        else:
            n_cells = n // self.nloc
            time_cols = [self._cols([c for c in range(n_cells) if c % self.n_t == i]) for i in range(self.n_t)]
        R = np.zeros((n, n), order="F")
        z = np.zeros(n)
        row = 0
        carry = np.zeros((0, len(time_cols[0]) + 1))
        for i, band in enumerate(bands):
            cols = time_cols[i] if i + 1 == len(bands) else np.concatenate([time_cols[i], time_cols[i + 1]])
            where = np.full(n, -1)
            where[cols] = np.arange(len(cols))
            groups = [self.groups.pop(cells) for cells in band]
            M = np.zeros((len(carry) + sum(len(g) for g in groups), len(cols) + 1), order="F")
            M[:len(carry), :carry.shape[1] - 1] = carry[:, :-1]
            M[:len(carry), -1] = carry[:, -1]
            r = len(carry)
            for cells, g in zip(band, groups):
                M[r:r + len(g), where[self._cols(cells)]] = g[:, :-1]
                M[r:r + len(g), -1] = g[:, -1]
                r += len(g)
            del groups
            if M.shape[0] > 1:
                M = np.triu(scipy.linalg.qr(M, mode="r", overwrite_a=True, check_finite=False)[0]
                            [:M.shape[1]])
            n_i = len(time_cols[i])
            top = M[:n_i]
            R[np.ix_(np.arange(row, row + len(top)), cols)] = top[:, :-1]
            z[row:row + len(top)] = top[:, -1]
            row += len(top)
            # remaining rows vanish on this time cell's columns
            carry = M[n_i:, n_i:].copy()
            del M
        tail = float(np.linalg.norm(carry[:, -1])) if carry.size else 0.0
        return R, z, tail


def solve_compressed(comp: CompressedSystem, trunc_tol: float = DEFAULT_TRUNC_TOL) -> SolveReport:
    t0 = time.perf_counter()
    R, z, tail = comp.reduced()
    rep = lstsq(R, z, trunc_tol)
    rep.residual_2norm = float(np.hypot(rep.residual_2norm, tail))
    rep.n_rows = comp.n_rows
    rep.rhs_2norm = float(np.sqrt(comp.rhs_sq))
    rep.wall_time = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


@dataclass
class Solution:
    """A fitted space-time random feature model."""

    problem: ProblemSpec
    decomp: SubdomainDecomposition
    bank: FeatureBank
    pou: PoUKind
    coefficients: np.ndarray

    def __call__(self, X, T, index: DerivativeIndex | None = None) -> np.ndarray:
        index = index or DerivativeIndex.zero(self.decomp.d_x)
        return evaluate(self.problem, self.decomp, self.bank, self.pou, self.coefficients, X, T,
                        [index])[index]


def evaluate(problem: ProblemSpec, decomp: SubdomainDecomposition, bank: FeatureBank, pou,
             coefficients, X, T, needed=None, chunk: int = 20000) -> dict:
    """Model values (and derivatives) at points; returns ``{index: (n, d_u)}``.

    With the indicator PoU each point uses its owning cell (half-open cells,
    last cell closed); with the smooth PoU all cells whose support contains it.
    """
    pou = PoUKind.coerce(pou)
    d_x, d_u = decomp.d_x, problem.d_u
    X = np.asarray(X, dtype=float).reshape(-1, d_x)
    T = np.asarray(T, dtype=float).reshape(-1)
    if len(X) != len(T):
        raise ValueError("X and T must have the same number of points")
    needed = list(needed) if needed is not None else [DerivativeIndex.zero(d_x)]
    tol = 1e-9 * max(1.0, float(np.max(np.abs(decomp.hi))), abs(decomp.t_end))
    if (X < decomp.lo - tol).any() or (X > decomp.hi + tol).any() or \
            (T < decomp.t_start - tol).any() or (T > decomp.t_end + tol).any():
        raise ValueError("evaluation points lie outside the space-time domain")
    u = np.asarray(coefficients, dtype=float).reshape(decomp.n_cells, bank.J_n, d_u)
    out = {idx: np.zeros((len(T), d_u)) for idx in needed}
    for s in range(0, len(T), chunk):
        Xc, Tc = X[s:s + chunk], T[s:s + chunk]
        if pou is PoUKind.A:
            owner = decomp.locate_space(Xc) * decomp.n_t + decomp.locate_time(Tc)
            for c in np.unique(owner):
                sel = np.flatnonzero(owner == c)
                ix, it = decomp.cell_pair(int(c))
                jets = feature_values(bank, ix, it, Xc[sel], Tc[sel], needed)
                for idx in needed:
                    out[idx][s + sel] += jets[idx] @ u[c]
        else:
            for c in range(decomp.n_cells):
                ix, it = decomp.cell_pair(c)
                sel = np.flatnonzero(cell_support(pou, decomp, ix, it, Xc, Tc))
                if sel.size == 0:
                    continue
                jets = basis_values(bank, pou, ix, it, Xc[sel], Tc[sel], needed)
                for idx in needed:
                    out[idx][s + sel] += jets[idx] @ u[c]
    return out


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


@dataclass
class Discretization:
    problem: ProblemSpec
    decomp: SubdomainDecomposition
    bank: FeatureBank
    colloc: object
    pou: PoUKind


def discretize(problem: ProblemSpec, config, n_t: Optional[int] = None) -> Discretization:
    decomp = decompose(problem.domain, problem.T, config.N_x, config.N_t if n_t is None else n_t)
    bank = draw_bank(config.seed, config.kind, decomp, config.J_n, config.R_m,
                     config.share_across_time, config.activation)
    colloc = sample_collocation(decomp, problem.domain, config.Q_x, config.Q_t)
    return Discretization(problem, decomp, bank, colloc, PoUKind.coerce(config.pou))


@dataclass
class StrfmResult:
    report: SolveReport
    solution: Solution


def solve_strfm(problem: ProblemSpec, config) -> StrfmResult:
    """Solve the whole space-time problem as one least-squares system."""
    t0 = time.perf_counter()
    disc = discretize(problem, config)
    blocks, n_cols = iter_row_blocks(problem, disc.decomp, disc.bank, disc.pou, disc.colloc,
                                     config.weights)
    comp = CompressedSystem(n_cols, disc.bank.J_n * problem.d_u, disc.decomp.n_t).extend(blocks)
    if comp.n_rows == 0:
        raise AssemblyError("empty least-squares system")
    report = solve_compressed(comp, config.trunc_tol)
    report.wall_time = time.perf_counter() - t0
    return StrfmResult(report, Solution(problem, disc.decomp, disc.bank, disc.pou, report.coefficients))


@dataclass
class MarchReport:
    blocks: list
    coefficients: np.ndarray          # block-major: [u_1; u_2; ...]
    terminal_values: list             # Phi1_i @ u_i per block
    solution: Solution = field(repr=False, default=None)
    wall_time: float = 0.0

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)


def march(blocks: list, trunc_tol: float = DEFAULT_TRUNC_TOL, rhs: Optional[list] = None,
          guard: float = 1e3) -> tuple[list, list, list]:
    """Sequential block solves; block ``i`` takes its initial data from block ``i-1``.

    ``rhs`` optionally overrides each block's right-hand side (its initial
    rows are still replaced by the propagated values for ``i > 0``).
    """
    reports, coeffs, terminal = [], [], []
    u_prev = None
    for i, blk in enumerate(blocks):
        b = blk.b if rhs is None else np.asarray(rhs[i], dtype=float).copy()
        if u_prev is not None:
            b = b.copy()
            b[: blk.n_init] = blk.coupling @ u_prev
        if not np.isfinite(b).all():
            raise DivergenceError(f"block {i}: non-finite right-hand side")
        rep = lstsq(blk.A, b, trunc_tol)
        nb = np.linalg.norm(b)
        if rep.residual_2norm > guard * max(nb, np.finfo(float).tiny) or not np.isfinite(rep.coefficients).all():
            raise DivergenceError(f"block {i}: residual {rep.residual_2norm:.3e} exceeds {guard:g} x ||b|| = {nb:.3e}")
        reports.append(rep)
        coeffs.append(rep.coefficients)
        terminal.append(blk.Phi1 @ rep.coefficients)
        u_prev = rep.coefficients
    return reports, coeffs, terminal


def block_to_global(decomp: SubdomainDecomposition, nloc: int, coeffs: list) -> np.ndarray:
    """Reorder block-major coefficients into the global ``(i_x, i_t, j, k)`` layout."""
    u = np.zeros(decomp.n_cells * nloc)
    for it, ui in enumerate(coeffs):
        u[block_columns(decomp, nloc, it)] = ui
    return u


def solve_block_marching(problem: ProblemSpec, config, N_b: Optional[int] = None) -> MarchReport:
    """Block time-marching: one least-squares solve per time block."""
    N_b = int(config.N_b if N_b is None else N_b)
    if N_b < 1:
        raise ValueError(f"N_b must be >= 1, got {N_b}")
    if PoUKind.coerce(config.pou) is not PoUKind.A:
        raise ValueError("block time-marching uses the indicator PoU (pou = 'A')")
    t0 = time.perf_counter()
    disc = discretize(problem, config, n_t=N_b)
    blocks = assemble_blocks(problem, disc.decomp, disc.bank, disc.colloc, config.weights)
    reports, coeffs, terminal = march(blocks, config.trunc_tol)
    nloc = disc.bank.J_n * problem.d_u
    sol = Solution(problem, disc.decomp, disc.bank, PoUKind.A, block_to_global(disc.decomp, nloc, coeffs))
    return MarchReport(reports, np.concatenate(coeffs), terminal, sol, time.perf_counter() - t0)
