"""Declarative linear time-dependent PDE problems and the preset catalog.

Operators are lists of terms ``coef * d^index u_comp`` contributing to output
row ``out``. Complex-valued problems are written as real systems.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .features import DerivativeIndex
from .geometry import Box, Composite, standin_complex_domain


@dataclass(frozen=True)
class Term:
    out: int
    comp: int
    coef: float | Callable
    index: DerivativeIndex

    def coefficient(self, X, T) -> np.ndarray | float:
        if callable(self.coef):
            return np.asarray(self.coef(X, T), dtype=float).reshape(-1)
        return float(self.coef)


@dataclass(frozen=True)
class OperatorSpec:
    terms: tuple
    n_out: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.n_out is None:
            object.__setattr__(self, "n_out", max(t.out for t in self.terms) + 1)

    @property
    def indices(self) -> list:
        return sorted({t.index for t in self.terms})

    @property
    def time_order(self) -> int:
        return max(t.index.time for t in self.terms)

    def space_order(self, axis: int | None = None) -> int:
        if axis is None:
            return max(max(t.index.space) for t in self.terms)
        return max(t.index.space[axis] for t in self.terms)

    def apply(self, jets: dict, X, T) -> np.ndarray:
        """Apply to solution jets ``{index: (n, d_u)}``; returns (n, n_out)."""
        n = len(np.asarray(T).reshape(-1))
        out = np.zeros((n, self.n_out))
        for term in self.terms:
            out[:, term.out] += term.coefficient(X, T) * jets[term.index][:, term.comp]
        return out


def identity(d_x: int, d_u: int = 1) -> OperatorSpec:
    z = DerivativeIndex.zero(d_x)
    return OperatorSpec(tuple(Term(k, k, 1.0, z) for k in range(d_u)))


def time_derivative(d_x: int, d_u: int = 1, order: int = 1) -> OperatorSpec:
    idx = DerivativeIndex.of(d_x, time=order)
    return OperatorSpec(tuple(Term(k, k, 1.0, idx) for k in range(d_u)))


@dataclass(frozen=True)
class BoundaryCondition:
    op: OperatorSpec
    data: Callable  # (X, T) -> (n, n_out)
    tags: Optional[tuple] = None  # boundary tags this applies to; None = all

    def applies(self, tags: np.ndarray) -> np.ndarray:
        if self.tags is None:
            return np.ones(len(tags), dtype=bool)
        return np.isin(tags.astype(str), list(self.tags))


@dataclass(frozen=True)
class InitialCondition:
    op: OperatorSpec
    data: Callable  # X -> (n, n_out)


@dataclass(frozen=True)
class PeriodicPair:
    """Identify the low and high faces along ``axis`` (value and normal derivative)."""

    axis: int


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: Box | Composite
    T: float
    d_u: int
    L: OperatorSpec
    f: Callable  # (X, T) -> (n, d_u)
    boundary_conditions: tuple = ()
    initial_conditions: tuple = ()
    exact: Optional[Callable] = None  # (X, T, DerivativeIndex) -> (n, d_u)
    periodic: tuple = ()
    section: str = ""
    description: str = ""
    # components (0, 1) are the real and imaginary parts of a complex-linear equation
    complex_form: bool = False

    def __post_init__(self):
        if not self.initial_conditions:
            raise ValueError(f"problem {self.name!r} needs at least one initial condition")
        if self.L.n_out != self.d_u:
            raise ValueError("the PDE operator must have one output row per solution component")

    @property
    def d_x(self) -> int:
        return self.domain.d_x

    @property
    def time_order(self) -> int:
        return self.L.time_order

    @property
    def space_order(self) -> int:
        return self.L.space_order()

    def exact_values(self, X, T, index: DerivativeIndex | None = None) -> np.ndarray:
        if self.exact is None:
            raise ValueError(f"problem {self.name!r} has no exact solution")
        index = index or DerivativeIndex.zero(self.d_x)
        X = np.asarray(X, dtype=float).reshape(-1, self.d_x)
        T = np.asarray(T, dtype=float).reshape(-1)
        return np.asarray(self.exact(X, T, index), dtype=float).reshape(len(T), self.d_u)

    def exact_jets(self, X, T, indices) -> dict:
        return {idx: self.exact_values(X, T, idx) for idx in indices}


# ---------------------------------------------------------------------------
# separable closed-form solutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Factor:
    """1D factor ``sin(k y + phase)`` or ``exp(k y)`` with all derivatives."""

    kind: str
    k: float
    phase: float = 0.0

    def __call__(self, y, m: int) -> np.ndarray:
        if self.kind == "sin":
            return self.k**m * np.sin(self.k * y + self.phase + 0.5 * np.pi * m)
        if self.kind == "exp":
            return self.k**m * np.exp(self.k * y)
        if self.kind == "one":
            return np.ones_like(y) if m == 0 else np.zeros_like(y)
        raise ValueError(self.kind)


def sin_(k, phase=0.0) -> Factor:
    return Factor("sin", float(k), float(phase))


def cos_(k) -> Factor:
    return Factor("sin", float(k), 0.5 * np.pi)


ONE = Factor("one", 0.0)


@dataclass(frozen=True)
class SeparableSolution:
    """Sum of ``coef * prod_k factor_k(x_k) * factor_t(t)`` terms per component."""

    d_u: int
    terms: tuple  # (component, coef, (factor per space axis..., factor_t))

    def __call__(self, X, T, index: DerivativeIndex) -> np.ndarray:
        out = np.zeros((len(T), self.d_u))
        for comp, coef, factors in self.terms:
            v = np.full(len(T), float(coef))
            for k, fac in enumerate(factors[:-1]):
                v = v * fac(X[:, k], index.space[k])
            v = v * factors[-1](T, index.time)
            out[:, comp] += v
        return out


def _restrict(exact: Callable, index: DerivativeIndex) -> Callable:
    return lambda X, T: exact(X, T, index)


def _zeros(n_out: int) -> Callable:
    return lambda X, T=None: np.zeros((len(X), n_out))


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def _heat_operator(kappa: float) -> OperatorSpec:
    return OperatorSpec((Term(0, 0, 1.0, DerivativeIndex((0,), 1)),
                         Term(0, 0, -kappa, DerivativeIndex((2,), 0))))


def make_heat_1d(alpha: float = np.pi / 2, x1: float = 12.0, T: float = 10.0,
                 diffusivity: float | None = None) -> ProblemSpec:
    """Heat equation with the closed-form solution ``2 sin(alpha x) exp(-t)``.

    That function solves ``u_t = kappa u_xx`` only for ``kappa = 1 / alpha^2``,
    which is the default diffusivity.
    """
    kappa = alpha**-2 if diffusivity is None else float(diffusivity)
    z = DerivativeIndex((0,), 0)
    exact = SeparableSolution(1, ((0, 2.0, (sin_(alpha), Factor("exp", -kappa * alpha**2))),))
    L = _heat_operator(kappa)
    return ProblemSpec(
        name="heat_1d", domain=Box((0.0,), (x1,)), T=T, d_u=1, L=L, f=_zeros(1),
        boundary_conditions=(BoundaryCondition(identity(1), _restrict(exact, z)),),
        initial_conditions=(InitialCondition(identity(1), lambda X: exact(X, np.zeros(len(X)), z)),),
        exact=exact, section="3.1.1",
        description="u_t - u_xx / alpha^2 = 0 on [0,12]x[0,10], u = 2 sin(alpha x) exp(-t)",
    )


def nonsmooth_initial(X) -> np.ndarray:
    x = np.asarray(X, dtype=float).reshape(-1)
    left = (x >= 0) & (x < 4)
    right = (x >= 4) & (x <= 8)
    return (2.0 * left * np.sin(np.pi * x / 2) + 2.0 * right * np.sin(np.pi * x)).reshape(-1, 1)


def make_heat_1d_nonsmooth(alpha: float = np.pi / 2, T: float = 10.0,
                           diffusivity: float | None = None) -> ProblemSpec:
    kappa = alpha**-2 if diffusivity is None else float(diffusivity)
    L = _heat_operator(kappa)
    return ProblemSpec(
        name="heat_1d_nonsmooth", domain=Box((0.0,), (8.0,)), T=T, d_u=1, L=L, f=_zeros(1),
        boundary_conditions=(BoundaryCondition(identity(1), _zeros(1)),),
        initial_conditions=(InitialCondition(identity(1), nonsmooth_initial),),
        exact=None, section="3.1.2",
        description="heat equation on [0,8] with a continuous, piecewise-smooth initial condition",
    )


def make_wave_1d(alpha: float = 1.0, x1: float = 6.0 * np.pi, T: float = 10.0) -> ProblemSpec:
    l = x1
    a = alpha
    w1 = a * np.pi / l
    w2 = 2.0 * a * np.pi / l
    exact = SeparableSolution(1, (
        (0, 1.0, (sin_(np.pi / l), cos_(w1))),
        (0, 1.0, (sin_(2 * np.pi / l), cos_(w2))),
        (0, l / (2 * a * np.pi), (sin_(2 * np.pi / l), sin_(w2))),
    ))
    z = DerivativeIndex((0,), 0)
    dt = DerivativeIndex((0,), 1)
    L = OperatorSpec((Term(0, 0, 1.0, DerivativeIndex((0,), 2)),
                      Term(0, 0, -alpha**2, DerivativeIndex((2,), 0))))
    zero_t = lambda X: np.zeros(len(X))  # noqa: E731
    return ProblemSpec(
        name="wave_1d", domain=Box((0.0,), (x1,)), T=T, d_u=1, L=L, f=_zeros(1),
        boundary_conditions=(BoundaryCondition(identity(1), _zeros(1)),),
        initial_conditions=(
            InitialCondition(identity(1), lambda X: exact(X, zero_t(X), z)),
            InitialCondition(time_derivative(1), lambda X: exact(X, zero_t(X), dt)),
        ),
        exact=exact, section="3.1.3",
        description="u_tt - u_xx = 0 on [0,6 pi]x[0,10] with homogeneous Dirichlet data",
    )


def make_schrodinger_1d(x1: float = 5.0, T: float = 10.0) -> ProblemSpec:
    omega = 2.0 * np.pi / x1
    a = 0.5 * omega**2
    # psi = exp(-i a t) (2 cos wx + sin wx) = u1 + i u2
    exact = SeparableSolution(2, (
        (0, 2.0, (cos_(omega), cos_(a))),
        (0, 1.0, (sin_(omega), cos_(a))),
        (1, -2.0, (cos_(omega), sin_(a))),
        (1, -1.0, (sin_(omega), sin_(a))),
    ))
    dt = DerivativeIndex((0,), 1)
    d2x = DerivativeIndex((2,), 0)
    z = DerivativeIndex((0,), 0)
    L = OperatorSpec((
        Term(0, 1, -1.0, dt), Term(0, 0, 0.5, d2x),
        Term(1, 0, 1.0, dt), Term(1, 1, 0.5, d2x),
    ))
    return ProblemSpec(
        name="schrodinger_1d", domain=Box((0.0,), (x1,)), T=T, d_u=2, L=L, f=_zeros(2),
        boundary_conditions=(),
        initial_conditions=(InitialCondition(identity(1, 2), lambda X: exact(X, np.zeros(len(X)), z)),),
        exact=exact, periodic=(PeriodicPair(0),), section="3.1.4", complex_form=True,
        description="i psi_t + 0.5 psi_xx = 0 on [0,5]x[0,10], periodic, split into real/imaginary parts",
    )


def _membrane_parts(lo=(0.0, 0.0), hi=(5.0, 4.0)):
    mu = 2.0 * np.pi / (hi[0] - lo[0])
    nu = 2.0 * np.pi / (hi[1] - lo[1])
    lam = np.sqrt(mu**2 + nu**2)
    exact = SeparableSolution(1, (
        (0, 2.0, (sin_(mu), sin_(nu), cos_(lam))),
        (0, 1.0, (sin_(mu), sin_(nu), sin_(lam))),
    ))
    return mu, nu, lam, exact


def make_membrane_2d(simple: bool = True, alpha: float = 1.0, T: float = 10.0, domain=None) -> ProblemSpec:
    mu, nu, lam, exact = _membrane_parts()
    z = DerivativeIndex((0, 0), 0)
    dt = DerivativeIndex((0, 0), 1)
    L = OperatorSpec((
        Term(0, 0, 1.0, DerivativeIndex((0, 0), 2)),
        Term(0, 0, -alpha**2, DerivativeIndex((2, 0), 0)),
        Term(0, 0, -alpha**2, DerivativeIndex((0, 2), 0)),
    ))
    zero_t = lambda X: np.zeros(len(X))  # noqa: E731
    init = (
        InitialCondition(identity(2), lambda X: exact(X, zero_t(X), z)),
        InitialCondition(time_derivative(2), lambda X: exact(X, zero_t(X), dt)),
    )
    if simple:
        return ProblemSpec(
            name="membrane_2d", domain=domain or Box((0.0, 0.0), (5.0, 4.0)), T=T, d_u=1, L=L,
            f=_zeros(1), boundary_conditions=(BoundaryCondition(identity(2), _zeros(1)),),
            initial_conditions=init, exact=exact, section="3.2.1",
            description="u_tt - Laplace u = 0 on [0,5]x[0,4] with u = sin(mu x) sin(nu y)(2cos + sin)(lambda t)",
        )
    return ProblemSpec(
        name="membrane_complex", domain=domain or standin_complex_domain(), T=T, d_u=1, L=L,
        f=lambda X, T: np.ones((len(T), 1)),
        boundary_conditions=(BoundaryCondition(identity(2), _zeros(1)),),
        initial_conditions=init, exact=None, section="3.2.2",
        description="u_tt - Laplace u = 1 on a composite domain, zero Dirichlet data",
    )


CATALOG = {
    "heat_1d": make_heat_1d,
    "heat_1d_nonsmooth": make_heat_1d_nonsmooth,
    "wave_1d": make_wave_1d,
    "schrodinger_1d": make_schrodinger_1d,
    "membrane_2d": lambda: make_membrane_2d(True),
    "membrane_complex": lambda: make_membrane_2d(False),
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; available: {', '.join(sorted(CATALOG))}") from None


def residuals(problem: ProblemSpec, X, T) -> dict:
    """Residuals of the exact solution for the PDE, boundary and initial operators."""
    X = np.asarray(X, dtype=float).reshape(-1, problem.d_x)
    T = np.asarray(T, dtype=float).reshape(-1)
    jets = problem.exact_jets(X, T, problem.L.indices)
    out = {"pde": problem.L.apply(jets, X, T) - problem.f(X, T)}
    for k, ic in enumerate(problem.initial_conditions):
        T0 = np.zeros(len(X))
        j0 = problem.exact_jets(X, T0, ic.op.indices)
        out[f"initial{k}"] = ic.op.apply(j0, X, T0) - ic.data(X)
    return out


def boundary_residual(problem: ProblemSpec, bc: BoundaryCondition, X, T) -> np.ndarray:
    jets = problem.exact_jets(X, T, bc.op.indices)
    return bc.op.apply(jets, X, T) - bc.data(X, T)


def parse_index(spec, d_x: int) -> DerivativeIndex:
    """Parse ``"xx"``, ``"t"``, ``"xxt"``, ``"yy"``, ``"id"`` or ``[[a1, ..], c]`` into an index."""
    if isinstance(spec, DerivativeIndex):
        return spec
    if isinstance(spec, (list, tuple)):
        return DerivativeIndex(tuple(spec[0]), int(spec[1]))
    s = str(spec).strip()
    if s in ("", "id", "u"):
        return DerivativeIndex.zero(d_x)
    names = "xyz"[:d_x]
    space = [0] * d_x
    time = 0
    for ch in s:
        if ch == "t":
            time += 1
        elif ch in names:
            space[names.index(ch)] += 1
        else:
            raise ValueError(f"cannot parse derivative index {spec!r}")
    return DerivativeIndex(tuple(space), time)


def operator_from_terms(terms: Sequence[dict], d_x: int, n_out: int | None = None) -> OperatorSpec:
    """Build an operator from ``[{out, comp, coef, index}]`` dictionaries."""
    return OperatorSpec(tuple(Term(int(t.get("out", 0)), int(t.get("comp", 0)), float(t.get("coef", 1.0)),
                                   parse_index(t.get("index", "id"), d_x)) for t in terms), n_out)
