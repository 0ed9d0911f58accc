"""Collocation least-squares systems for space-time random feature models.

Rows are produced time cell by time cell. For time cell ``i`` the order is

    [initial rows (i = 0) | time-interface rows (i > 0)], interior, boundary,
    periodic, spatial-interface

so the global matrix is block lower bidiagonal in time when the indicator PoU
is used, and block ``i`` of the marching scheme is exactly the rows of chunk
``i`` restricted to the columns of time cell ``i``.

Unknowns are ordered lexicographically by ``(i_x, i_t, j, k)``: spatial cell,
time cell, feature, solution component.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .features import DerivativeIndex, FeatureBank, basis_values, cell_support, feature_values
from .geometry import CollocationSet, SubdomainDecomposition
from .partition import PoUKind
from .problems import OperatorSpec, ProblemSpec, Term, identity

TAGS = ("initial", "interior", "boundary", "periodic", "interface")
CHUNK_POINTS = 4096
DEFAULT_WEIGHTS = {"interior": 1.0, "boundary": 1.0, "initial": 1.0, "interface": 1.0}


class AssemblyError(ValueError):
    pass


@dataclass
class RowBlock:
    """Rows sharing one column support.

    ``cells`` are flat space-time cell indices; the local columns are the
    concatenated column ranges of those cells. ``rows`` holds the global row
    positions so a dense matrix can be rebuilt in canonical order.
    """

    tag: str
    owner: int
    cells: tuple
    A: np.ndarray
    b: np.ndarray
    rows: np.ndarray


@dataclass
class LSSystem:
    A: np.ndarray
    b: np.ndarray
    row_scale: np.ndarray
    row_tag: np.ndarray
    row_cell: np.ndarray  # owning time cell, -1 when rows are not cell-owned
    n_cols: int
    ordering: str = "(i_x, i_t, j, k)"

    @property
    def shape(self):
        return self.A.shape

    def rows_with(self, tag: str) -> np.ndarray:
        return np.flatnonzero(self.row_tag == tag)

    def dump(self, path) -> None:
        """Plain-text dump: a header line, then one row per line as ``b a_1 ... a_n``."""
        header = (f"strfm-lssystem/1 rows={self.A.shape[0]} cols={self.A.shape[1]} "
                  f"ordering={self.ordering.replace(' ', '')} columns: b then A")
        np.savetxt(path, np.column_stack([self.b, self.A]), fmt="%.17g", header=header)


def load_system_text(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, ndmin=2)
    return data[:, 1:], data[:, 0]


@dataclass
class BlockSystem:
    """One time block of the marching scheme.

    ``A`` stacks ``Phi0`` (initial-operator rows at the block start) over
    ``L`` (PDE, boundary and spatial-interface rows). ``coupling`` maps the
    previous block's coefficients to this block's initial-row data, i.e. it is
    the previous block's terminal matrix ``Phi1``.
    """

    index: int
    A: np.ndarray
    b: np.ndarray
    n_init: int
    Phi1: np.ndarray
    coupling: Optional[np.ndarray] = None
    row_tag: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=object))

    @property
    def Phi0(self) -> np.ndarray:
        return self.A[: self.n_init]

    @property
    def L(self) -> np.ndarray:
        return self.A[self.n_init:]

    def rhs(self, u_prev: Optional[np.ndarray]) -> np.ndarray:
        b = self.b.copy()
        if u_prev is not None:
            if self.coupling is None:
                raise AssemblyError("first block has no coupling to a previous block")
            b[: self.n_init] = self.coupling @ u_prev
        return b


# ---------------------------------------------------------------------------
# context and operator evaluation
# ---------------------------------------------------------------------------


@dataclass
class _Leg:
    sign: float
    X: np.ndarray
    T: np.ndarray
    op: OperatorSpec
    cell: Optional[int]  # fixed owner cell (indicator PoU) or None (support search)
    Z: Optional[np.ndarray] = None  # local time coordinates in the fixed cell


class _Assembler:
    def __init__(self, problem: ProblemSpec, decomp: SubdomainDecomposition, bank: FeatureBank,
                 pou, colloc: CollocationSet, weights=None):
        self.problem = problem
        self.decomp = decomp
        self.bank = bank
        self.pou = PoUKind.coerce(pou)
        self.colloc = colloc
        self.d_u = problem.d_u
        self.nloc = bank.J_n * problem.d_u
        self.n_cols = decomp.n_cells * self.nloc
        w = dict(DEFAULT_WEIGHTS)
        w.update(weights or {})
        unknown = set(w) - set(DEFAULT_WEIGHTS)
        if unknown:
            raise AssemblyError(f"unknown row-weight tags: {sorted(unknown)}")
        self.weights = w
        if bank.decomp.n_space_cells != decomp.n_space_cells or bank.decomp.d_x != decomp.d_x:
            raise AssemblyError("feature bank does not match the decomposition")
        if not bank.share_across_time and bank.k_t.shape[1] != decomp.n_t:
            raise AssemblyError("feature bank has the wrong number of time cells")
        if colloc.decomp.n_cells != decomp.n_cells:
            raise AssemblyError("collocation set does not match the decomposition")
        if problem.d_x != decomp.d_x:
            raise AssemblyError(f"problem has d_x={problem.d_x}, decomposition d_x={decomp.d_x}")
        self.init_ops = [ic.op for ic in problem.initial_conditions]
        self._row = 0

    def weight(self, tag: str) -> float:
        return self.weights["boundary" if tag == "periodic" else tag]

    def cell_cols(self, c: int) -> np.ndarray:
        return np.arange(c * self.nloc, (c + 1) * self.nloc)

    def op_block(self, op: OperatorSpec, c: int, X, T, Z=None) -> np.ndarray:
        """Operator applied to every local unknown of cell ``c``: (m, n_out, nloc)."""
        ix, it = self.decomp.cell_pair(c)
        if self.pou is PoUKind.A:
            jets = feature_values(self.bank, ix, it, X, T, op.indices, Z)
        else:
            jets = basis_values(self.bank, self.pou, ix, it, X, T, op.indices, Z)
        m = len(T)
        out = np.zeros((m, op.n_out, self.nloc))
        for term in op.terms:
            if term.comp >= self.d_u:
                raise AssemblyError(f"operator term refers to component {term.comp} >= d_u={self.d_u}")
            coef = term.coefficient(X, T)
            coef = coef[:, None] if np.ndim(coef) else coef
            out[:, term.out, term.comp::self.d_u] += coef * jets[term.index]
        return out

    def support(self, X, T) -> np.ndarray:
        """(m, n_cells) mask of cells whose PoU support contains each point."""
        d = self.decomp
        mask = np.zeros((len(T), d.n_cells), dtype=bool)
        for c in range(d.n_cells):
            ix, it = d.cell_pair(c)
            mask[:, c] = cell_support(self.pou, d, ix, it, X, T)
        return mask

    def rows(self, tag: str, legs: list, rhs: np.ndarray, owner: int) -> Iterator[RowBlock]:
        """Row blocks for ``sum_leg sign * op(u)(X, T) = rhs``, grouped by column support."""
        m = len(legs[0].T)
        if m == 0:
            return
        n_out = legs[0].op.n_out
        rhs = np.asarray(rhs, dtype=float).reshape(m, n_out)
        masks = []
        for leg in legs:
            if leg.cell is not None:
                mk = np.zeros((m, self.decomp.n_cells), dtype=bool)
                mk[:, leg.cell] = True
            else:
                mk = self.support(leg.X, leg.T)
            masks.append(mk)
        union = np.logical_or.reduce(masks)
        if not union.any(axis=1).all():
            raise AssemblyError(f"{tag} rows with no supporting cell")
        keys, inverse = np.unique(union, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        w = self.weight(tag)
        base = self._row
        self._row += m * n_out
        for g, key in enumerate(keys):
            sel = np.flatnonzero(inverse == g)
            cells = tuple(int(c) for c in np.flatnonzero(key))
            Ag = np.zeros((len(sel), n_out, len(cells) * self.nloc))
            for leg, mk in zip(legs, masks):
                for k, c in enumerate(cells):
                    active = mk[sel, c]
                    if not active.any():
                        continue
                    pts = sel[active]
                    Z = None if leg.Z is None else leg.Z[pts]
                    blk = self.op_block(leg.op, c, leg.X[pts], leg.T[pts], Z)
                    Ag[active, :, k * self.nloc:(k + 1) * self.nloc] += leg.sign * blk
            rows = (base + sel[:, None] * n_out + np.arange(n_out)).reshape(-1)
            yield RowBlock(tag, owner, cells, w * Ag.reshape(len(sel) * n_out, -1),
                           w * rhs[sel].reshape(-1), rows)

    # -- row families -----------------------------------------------------

    def _cell(self, ix: int, it: int) -> Optional[int]:
        return self.decomp.cell_index(ix, it) if self.pou is PoUKind.A else None

    def _owner(self, it: int) -> int:
        return it if self.pou is PoUKind.A else -1

    def _z(self, nodes_local, reps: int) -> Optional[np.ndarray]:
        # exact local time coordinates; only meaningful for a fixed owner cell
        if self.pou is not PoUKind.A:
            return None
        return np.repeat(np.asarray(nodes_local, dtype=float), reps)

    @property
    def z_nodes(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, len(self.colloc.time_nodes[0]))

    def initial_rows(self) -> Iterator[RowBlock]:
        t0 = self.decomp.t_start
        for ix, X in enumerate(self.colloc.initial_x):
            T = np.full(len(X), t0)
            for ic in self.problem.initial_conditions:
                yield from self.rows("initial", [_Leg(1.0, X, T, ic.op, self._cell(ix, 0),
                                                      self._z([-1.0], len(X)))],
                                     ic.data(X), self._owner(0))

    def time_interface_rows(self, it: int) -> Iterator[RowBlock]:
        t = float(self.colloc.time_nodes[it][0])
        for ix, X in enumerate(self.colloc.initial_x):
            T = np.full(len(X), t)
            for op in self.init_ops:
                legs = [_Leg(1.0, X, T, op, self._cell(ix, it), self._z([-1.0], len(X))),
                        _Leg(-1.0, X, T, op, self._cell(ix, it - 1), self._z([1.0], len(X)))]
                yield from self.rows("interface", legs, np.zeros((len(X), op.n_out)), it)

    def interior_rows(self, it: int) -> Iterator[RowBlock]:
        nodes = self.colloc.time_nodes[it][:-1]
        znodes = self.z_nodes[:-1]
        for ix, X in enumerate(self.colloc.interior_x):
            # batches of time nodes keep the dense blocks small
            step = max(1, CHUNK_POINTS // max(1, len(X)))
            for s in range(0, len(nodes), step):
                tn = nodes[s:s + step]
                XX = np.tile(X, (len(tn), 1))
                T = np.repeat(tn, len(X))
                rhs = self.problem.f(XX, T)
                Z = self._z(znodes[s:s + step], len(X))
                yield from self.rows("interior", [_Leg(1.0, XX, T, self.problem.L, self._cell(ix, it), Z)],
                                     rhs, self._owner(it))

    def boundary_rows(self, it: int) -> Iterator[RowBlock]:
        tn = self.colloc.time_nodes[it]
        for ix, bp in enumerate(self.colloc.boundary):
            for bc in self.problem.boundary_conditions:
                X = bp.x[bc.applies(bp.tag)]
                if len(X) == 0:
                    continue
                XX = np.tile(X, (len(tn), 1))
                T = np.repeat(tn, len(X))
                Z = self._z(self.z_nodes, len(X))
                yield from self.rows("boundary", [_Leg(1.0, XX, T, bc.op, self._cell(ix, it), Z)],
                                     bc.data(XX, T), self._owner(it))

    def _continuity_ops(self, axis: int) -> list:
        d_x = self.decomp.d_x
        ops = [identity(d_x, self.d_u)]
        if self.problem.L.space_order(axis) >= 2:
            idx = DerivativeIndex.of(d_x, axis, 1)
            ops.append(OperatorSpec(tuple(Term(k, k, 1.0, idx) for k in range(self.d_u))))
        return ops

    def periodic_rows(self, it: int) -> Iterator[RowBlock]:
        tn = self.colloc.time_nodes[it]
        for pair in self.problem.periodic:
            k = pair.axis
            lo_tag = f"x{k}-"
            pts = [bp.x[bp.tag.astype(str) == lo_tag] for bp in self.colloc.boundary]
            Xlo = np.concatenate(pts) if pts else np.empty((0, self.decomp.d_x))
            if len(Xlo) == 0:
                continue
            Xhi = Xlo.copy()
            Xhi[:, k] = self.decomp.hi[k]
            XL = np.tile(Xlo, (len(tn), 1))
            XH = np.tile(Xhi, (len(tn), 1))
            T = np.repeat(tn, len(Xlo))
            Z = self._z(self.z_nodes, len(Xlo))
            ilo = self.decomp.locate_space(XL)
            ihi = self.decomp.locate_space(XH)
            for op in self._continuity_ops(k):
                # points are grouped by owner pair so every leg has one fixed cell
                for a, b in sorted(set(zip(ilo.tolist(), ihi.tolist()))):
                    sel = (ilo == a) & (ihi == b)
                    Zs = None if Z is None else Z[sel]
                    legs = [_Leg(1.0, XL[sel], T[sel], op, self._cell(a, it), Zs),
                            _Leg(-1.0, XH[sel], T[sel], op, self._cell(b, it), Zs)]
                    yield from self.rows("periodic", legs, np.zeros((int(sel.sum()), op.n_out)),
                                         self._owner(it))

    def space_interface_rows(self, it: int) -> Iterator[RowBlock]:
        if self.pou is not PoUKind.A:
            return
        tn = self.colloc.time_nodes[it]
        for face in self.colloc.space_faces:
            XX = np.tile(face.x, (len(tn), 1))
            T = np.repeat(tn, len(face.x))
            Z = self._z(self.z_nodes, len(face.x))
            for op in self._continuity_ops(face.axis):
                legs = [_Leg(1.0, XX, T, op, self._cell(face.cell_a, it), Z),
                        _Leg(-1.0, XX, T, op, self._cell(face.cell_b, it), Z)]
                yield from self.rows("interface", legs, np.zeros((len(T), op.n_out)), it)

    def chunk(self, it: int) -> Iterator[RowBlock]:
        if it == 0:
            yield from self.initial_rows()
        elif self.pou is PoUKind.A:
            yield from self.time_interface_rows(it)
        yield from self.interior_rows(it)
        yield from self.boundary_rows(it)
        yield from self.periodic_rows(it)
        yield from self.space_interface_rows(it)

    def all_rows(self) -> Iterator[RowBlock]:
        for it in range(self.decomp.n_t):
            yield from self.chunk(it)

    def phi(self, it: int, t: float, z: Optional[float] = None) -> np.ndarray:
        """Initial operators on the features of time cell ``it`` at time ``t``.

        ``z`` is the matching local time coordinate when known exactly.
        Returns the (n_init_rows, N_space_cells * nloc) matrix in block order.
        """
        d = self.decomp
        blocks = []
        for ix, X in enumerate(self.colloc.initial_x):
            T = np.full(len(X), t)
            Z = None if z is None else np.full(len(X), float(z))
            for op in self.init_ops:
                blk = self.op_block(op, d.cell_index(ix, it), X, T, Z).reshape(len(X) * op.n_out, -1)
                row = np.zeros((blk.shape[0], d.n_space_cells * self.nloc))
                row[:, ix * self.nloc:(ix + 1) * self.nloc] = blk
                blocks.append(row)
        return np.concatenate(blocks) if blocks else np.zeros((0, 0))


def iter_row_blocks(problem, decomp, bank, pou, colloc, weights=None) -> tuple[Iterator[RowBlock], int]:
    """Lazily generated row blocks of the global system and its column count."""
    asm = _Assembler(problem, decomp, bank, pou, colloc, weights)
    return asm.all_rows(), asm.n_cols


def assemble_strfm(problem: ProblemSpec, decomp: SubdomainDecomposition, bank: FeatureBank,
                   pou, colloc: CollocationSet, weights=None) -> LSSystem:
    """Dense global least-squares system (suitable for small and medium sizes)."""
    asm = _Assembler(problem, decomp, bank, pou, colloc, weights)
    blocks = list(asm.all_rows())
    n_rows = asm._row
    interior = sum(len(b.rows) for b in blocks if b.tag == "interior")
    if interior == 0:
        raise AssemblyError("no interior collocation rows")
    A = np.zeros((n_rows, asm.n_cols))
    b = np.zeros(n_rows)
    row_tag = np.empty(n_rows, dtype=object)
    row_cell = np.full(n_rows, -1, dtype=int)
    scale = np.ones(n_rows)
    for blk in blocks:
        cols = np.concatenate([asm.cell_cols(c) for c in blk.cells])
        A[np.ix_(blk.rows, cols)] = blk.A
        b[blk.rows] = blk.b
        row_tag[blk.rows] = blk.tag
        row_cell[blk.rows] = blk.owner
        scale[blk.rows] = asm.weight(blk.tag)
    return LSSystem(A, b, scale, row_tag, row_cell, asm.n_cols)


def block_columns(decomp: SubdomainDecomposition, nloc: int, it: int) -> np.ndarray:
    """Global column indices of time cell ``it`` in block order (ix outer)."""
    return np.concatenate([np.arange(decomp.cell_index(ix, it) * nloc, (decomp.cell_index(ix, it) + 1) * nloc)
                           for ix in range(decomp.n_space_cells)])


def assemble_blocks(problem: ProblemSpec, decomp: SubdomainDecomposition, bank: FeatureBank,
                    colloc: CollocationSet, weights=None) -> list:
    """Per-time-cell systems of the marching scheme (indicator PoU semantics)."""
    asm = _Assembler(problem, decomp, bank, PoUKind.A, colloc, weights)
    nloc = asm.nloc
    n_b = decomp.n_space_cells * nloc
    out = []
    edges = decomp.time_edges
    for it in range(decomp.n_t):
        asm._row = 0
        blocks = list(asm.chunk(it))
        n_rows = asm._row
        A = np.zeros((n_rows, n_b))
        prev = np.zeros((n_rows, n_b))
        b = np.zeros(n_rows)
        tags = np.empty(n_rows, dtype=object)
        n_init = 0
        for blk in blocks:
            coupled = False
            for k, c in enumerate(blk.cells):
                ix, jt = decomp.cell_pair(c)
                cols = np.arange(ix * nloc, (ix + 1) * nloc)
                part = blk.A[:, k * nloc:(k + 1) * nloc]
                if jt == it:
                    A[np.ix_(blk.rows, cols)] = part
                else:
                    prev[np.ix_(blk.rows, cols)] = -part
                    coupled = True
            b[blk.rows] = blk.b
            tags[blk.rows] = blk.tag
            if blk.tag == "initial" or coupled:
                n_init = max(n_init, int(blk.rows.max()) + 1)
        Phi1 = asm.phi(it, float(edges[it + 1]), 1.0)
        coupling = prev[:n_init] if it > 0 else None
        out.append(BlockSystem(it, A, b, n_init, Phi1, coupling, tags))
    return out


def slice_bank(bank: FeatureBank, it: int) -> FeatureBank:
    """Feature bank restricted to time cell ``it`` (for single-block decompositions)."""
    i = 0 if bank.share_across_time else it
    sl = slice(i, i + 1)
    return FeatureBank(bank.kind, bank.decomp.time_block(it), bank.J_n, bank.R_m, bank.seed,
                       bank.share_across_time, bank.activation, bank.k_x[:, sl], bank.k_t[:, sl],
                       bank.b[:, sl], bank.b_t[:, sl])


class SingularNormalMatrix(np.linalg.LinAlgError):
    def __init__(self, cond: float):
        super().__init__(f"normal matrix is numerically singular (condition estimate {cond:.3e})")
        self.cond = cond


def compute_B(block: BlockSystem, block_prev: BlockSystem | None = None, method: str = "pinv",
              trunc_tol: float = 1e-12) -> np.ndarray:
    """Propagation matrix from the previous block's coefficients to this block's.

    ``method="normal"`` evaluates ``(A^T A)^{-1} Phi0^T Phi1_prev`` literally;
    ``"pinv"`` applies the truncated pseudo-inverse of ``A`` to the coupling
    placed in the initial rows, which agrees with the normal formula whenever
    ``A`` has full column rank and stays defined otherwise.
    """
    import scipy.linalg

    Phi1 = block_prev.Phi1 if block_prev is not None else block.coupling
    if Phi1 is None:
        raise AssemblyError("the first block has no predecessor")
    if method == "normal":
        N = block.A.T @ block.A
        cond = float(np.linalg.cond(N))
        if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
            raise SingularNormalMatrix(cond)
        return scipy.linalg.solve(N, block.Phi0.T @ Phi1, assume_a="pos")
    if method != "pinv":
        raise ValueError(f"unknown method {method!r}")
    E = np.zeros((block.A.shape[0], Phi1.shape[1]))
    E[: block.n_init] = Phi1
    return scipy.linalg.lstsq(block.A, E, cond=trunc_tol, lapack_driver="gelsd")[0]
