"""Error metrics, propagation-matrix spectra, growth fits and convergence sweeps."""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
import scipy.stats

from .assembly import assemble_blocks, compute_B
from .geometry import eval_grid
from .problems import ProblemSpec


@dataclass
class ErrorReport:
    L2_global: float
    Linf_global: float
    segment_L2: list
    segment_bounds: list
    grid_shape: tuple
    reference_L2: float = float("nan")
    Linf_components: list = field(default_factory=list)

    @property
    def L2_relative(self) -> float:
        return self.L2_global / self.reference_L2 if self.reference_L2 > 0 else float("nan")

    @property
    def segment_relative(self) -> list:
        return list(self.segment_L2)

    def summary(self) -> dict:
        return {"L2_global": self.L2_global, "Linf_global": self.Linf_global,
                "L2_relative": self.L2_relative, "reference_L2": self.reference_L2,
                "Linf_components": list(self.Linf_components),
                "segment_L2": list(self.segment_L2),
                "segment_bounds": [list(b) for b in self.segment_bounds],
                "grid_shape": list(self.grid_shape)}


def _trapz_weights(axis: np.ndarray) -> np.ndarray:
    if len(axis) == 1:
        return np.ones(1)
    h = np.diff(axis)
    w = np.zeros(len(axis))
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def error_report(problem: ProblemSpec, solution: Callable, reference: Optional[Callable] = None,
                 n_space: Sequence[int] | int = 200, n_time: int = 400,
                 segments: Optional[Sequence[float]] = None) -> ErrorReport:
    """Trapezoid L2 and grid-max errors of ``solution`` against the exact or a reference solution.

    Both callables take ``(X, T)`` and return ``(n, d_u)``. The grid has
    ``n_space`` cell-centred points per axis and ``n_time`` endpoint-inclusive
    time levels. ``segments`` are time breakpoints (default: the whole
    interval); the ``n_time - 1`` time steps are shared out between segments
    so that every breakpoint is a grid level, and the segment errors
    square-sum to the global one.
    """
    if reference is None:
        if problem.exact is None:
            raise ValueError(f"problem {problem.name!r} has no exact solution; supply a reference")
        reference = problem.exact_values
    d_x = problem.d_x
    n_space = (int(n_space),) * d_x if np.isscalar(n_space) else tuple(int(v) for v in n_space)
    X, axes = eval_grid(problem.domain, n_space)
    inside = problem.domain.in_closure(X).astype(float)
    W = np.ones(tuple(n_space))
    for k, ax in enumerate(axes):
        shape = [1] * d_x
        shape[k] = len(ax)
        W = W * _trapz_weights(ax).reshape(shape)
    w_space = W.reshape(-1) * inside
    keep = inside > 0
    Xk, wk = X[keep], w_space[keep]
    bounds = list(segments) if segments is not None else [0.0, problem.T]
    n_seg = len(bounds) - 1
    if n_time - 1 < n_seg:
        raise ValueError(f"n_time={n_time} gives fewer time steps than the {n_seg} segments")
    steps = np.full(n_seg, (n_time - 1) // n_seg)
    steps[: (n_time - 1) % n_seg] += 1
    seg_sq, ref_sq, linf = [], 0.0, np.zeros(problem.d_u)
    for (a, b), m in zip(zip(bounds[:-1], bounds[1:]), steps):
        ts = np.linspace(a, b, m + 1)
        wt = _trapz_weights(ts)
        acc = 0.0
        for t, w in zip(ts, wt):
            T = np.full(len(Xk), t)
            ref = np.asarray(reference(Xk, T)).reshape(len(Xk), -1)
            err = np.asarray(solution(Xk, T)).reshape(len(Xk), -1) - ref
            acc += w * float(wk @ (err**2).sum(axis=1))
            ref_sq += w * float(wk @ (ref**2).sum(axis=1))
            linf = np.maximum(linf, np.abs(err).max(axis=0))
        seg_sq.append(acc)
    seg = [float(np.sqrt(s)) for s in seg_sq]
    return ErrorReport(float(np.sqrt(sum(seg_sq))), float(linf.max()), seg,
                       [(float(a), float(b)) for a, b in zip(bounds[:-1], bounds[1:])],
                       tuple(n_space) + (int(n_time),), float(np.sqrt(ref_sq)),
                       [float(v) for v in linf])


# ---------------------------------------------------------------------------
# propagation matrix spectra
# ---------------------------------------------------------------------------


@dataclass
class EigenReport:
    eigenvalues: np.ndarray
    unique_count: int
    max_modulus: float
    rel_tol: float

    @property
    def growth_factor(self) -> float:
        """Predicted per-block amplification ``sqrt(lambda_m)``."""
        return float(np.sqrt(self.max_modulus))

    def summary(self) -> dict:
        return {"n": int(len(self.eigenvalues)), "unique_count": self.unique_count,
                "max_modulus": self.max_modulus, "growth_factor": self.growth_factor,
                "rel_tol": self.rel_tol}


def unique_eigenvalue_count(ev: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Clusters of eigenvalues closer than ``rel_tol * max(|a|, |b|)`` (transitively)."""
    ev = np.asarray(ev, dtype=complex).reshape(-1)
    if ev.size == 0:
        return 0
    D = np.abs(ev[:, None] - ev[None, :])
    S = np.maximum(np.abs(ev)[:, None], np.abs(ev)[None, :])
    graph = scipy.sparse.csr_matrix(D <= rel_tol * S)
    return int(scipy.sparse.csgraph.connected_components(graph, directed=False)[0])


def complex_matrix(B) -> np.ndarray:
    """Complex matrix whose realification (interleaved re/im unknowns) is ``B``.

    A complex-linear map written on ``(re, im)`` pairs has the block pattern
    ``[[P, -Q], [Q, P]]``; its spectrum is that of ``P + iQ`` together with the
    conjugates. We read ``P`` and ``Q`` off the columns acting on real parts.
    """
    B = np.asarray(B, dtype=float)
    if B.shape[0] % 2 or B.shape[1] % 2:
        raise ValueError("complex form needs an even-sized matrix")
    return B[0::2, 0::2] + 1j * B[1::2, 0::2]


def eigen_report(B, rel_tol: float = 1e-9, complex_form: bool = False) -> EigenReport:
    """Spectrum of ``B``; with ``complex_form`` that of the underlying complex matrix."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"B must be square, got shape {B.shape}")
    if not np.isfinite(B).all():
        raise ValueError("B has non-finite entries")
    ev = np.linalg.eigvals(complex_matrix(B) if complex_form else B)
    return EigenReport(ev, unique_eigenvalue_count(ev, rel_tol), float(np.abs(ev).max()), rel_tol)


def propagation_matrices(problem: ProblemSpec, config, n_blocks: int = 3, method: str = "pinv",
                         block_width: Optional[float] = None) -> list:
    """``B_i`` for ``i = 1 .. n_blocks-1`` on a shared-bank block decomposition.

    Blocks have width ``block_width`` (default ``T / n_blocks``); only the
    first ``n_blocks`` of them are assembled.
    """
    from .solve import discretize

    if n_blocks < 2:
        raise ValueError("need at least two blocks to form a propagation matrix")
    if block_width is not None:
        problem = dataclasses.replace(problem, T=n_blocks * float(block_width))
    cfg = config.replace(share_across_time=True)
    disc = discretize(problem, cfg, n_t=n_blocks)
    blocks = assemble_blocks(problem, disc.decomp, disc.bank, disc.colloc, cfg.weights)
    return [compute_B(blocks[i], blocks[i - 1], method, cfg.trunc_tol) for i in range(1, n_blocks)]


# ---------------------------------------------------------------------------
# growth and sweeps
# ---------------------------------------------------------------------------


def growth_fit(errors: Sequence[float]) -> tuple[float, float]:
    """Per-segment growth rate ``exp(slope)`` of ``log(error)`` against segment index, and r^2."""
    e = np.asarray(errors, dtype=float)
    if e.size < 3:
        raise ValueError("growth_fit needs at least 3 segments")
    if not (np.isfinite(e).all() and (e > 0).all()):
        raise ValueError("growth_fit needs finite positive errors")
    y = np.log(e)
    x = np.arange(e.size, dtype=float)
    if np.ptp(y) == 0.0:
        return 1.0, 1.0
    fit = scipy.stats.linregress(x, y)
    return float(np.exp(fit.slope)), float(fit.rvalue**2)


def flatness_ratio(errors: Sequence[float]) -> float:
    e = np.asarray(errors, dtype=float)
    return float(e.max() / e.min())


@dataclass
class SweepRow:
    axis: str
    value: int
    L2: float
    Linf: float
    L2_relative: float = float("nan")


def apply_axis(config, axis: str, value: int):
    if axis == "Q":
        return config.replace(Q=value if np.isscalar(config.Q_x) else (value,) * len(config.Q_x),
                              Q_t=value)
    return config.replace(**{axis: value})


def convergence_sweep(problem: ProblemSpec, base_config, axis: str, values: Sequence[int],
                      solver: str = "strfm", reference: Optional[Callable] = None,
                      n_space=None, n_time=None) -> list:
    """One solve per axis value with seeds fixed; returns ``SweepRow`` entries."""
    from .solve import solve_block_marching, solve_strfm

    values = list(values)
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("sweep values must be strictly increasing")
    if axis not in ("N_t", "N_b", "J_n", "Q"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    n_space = base_config.eval.space_counts(problem.d_x) if n_space is None else n_space
    n_time = base_config.eval.n_time if n_time is None else n_time
    rows = []
    for v in values:
        cfg = apply_axis(base_config, axis, v)
        if solver == "march":
            sol = solve_block_marching(problem, cfg.replace(N_t=1)).solution
        else:
            sol = solve_strfm(problem, cfg.replace(N_b=1)).solution
        rep = error_report(problem, sol, reference, n_space, n_time)
        rows.append(SweepRow(axis, int(v), rep.L2_global, rep.Linf_global, rep.L2_relative))
    return rows


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _write(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])


def write_sweep_csv(path, rows: Sequence[SweepRow]) -> None:
    _write(path, ("axis", "value", "L2", "Linf"), [(r.axis, r.value, r.L2, r.Linf) for r in rows])


def write_segments_csv(path, report: ErrorReport) -> None:
    _write(path, ("segment", "t_mid", "L2"),
           [(i, 0.5 * (a + b), e) for i, ((a, b), e) in enumerate(zip(report.segment_bounds, report.segment_L2))])


def write_eigen_csv(path, eigenvalues) -> None:
    ev = np.asarray(eigenvalues, dtype=complex)
    order = np.lexsort((ev.imag, ev.real, -np.abs(ev)))
    _write(path, ("re", "im", "modulus"), [(float(z.real), float(z.imag), float(abs(z))) for z in ev[order]])
