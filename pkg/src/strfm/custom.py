"""Problems defined inline in a run config.

Data, coefficients and exact solutions are strings in the variables
``x, y, z`` (as many as spatial dimensions) and ``t``, parsed with sympy.
Exact-solution derivatives are obtained symbolically. Example::

    [problem]
    name = "heat_unit"
    d_u = 1
    T = 1.0
    domain = { kind = "box", lo = [0.0], hi = [1.0] }
    L = [ { index = "t", coef = 1.0 }, { index = "xx", coef = -1.0 } ]
    f = ["0"]
    exact = ["sin(pi*x)*exp(-pi**2*t)"]

    [[problem.boundary]]
    op = [ { index = "id" } ]
    data = ["0"]

    [[problem.initial]]
    op = [ { index = "id" } ]
    data = ["sin(pi*x)"]

Boundary or initial ``data`` may be the string ``"exact"`` to restrict the
exact solution through the condition's operator.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy

from .features import DerivativeIndex
from .geometry import Box, composite_from_dict
from .problems import (BoundaryCondition, InitialCondition, OperatorSpec, PeriodicPair, ProblemSpec,
                       Term, parse_index)

_NAMES = "xyz"


def _symbols(d_x: int):
    return sympy.symbols(list(_NAMES[:d_x]) + ["t"])


def _parse(expr, d_x: int) -> sympy.Expr:
    syms = _symbols(d_x)
    local = {str(s): s for s in syms}
    try:
        return sympy.sympify(str(expr), locals=local)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse expression {expr!r}: {exc}") from None


def _lambdify(expr: sympy.Expr, d_x: int):
    syms = _symbols(d_x)
    free = expr.free_symbols - set(syms)
    if free:
        raise ValueError(f"expression {expr} uses unknown symbols {sorted(map(str, free))}")
    if expr.has(sympy.zoo, sympy.nan, sympy.oo, -sympy.oo):
        raise ValueError(f"expression {expr} is not finite")
    fn = sympy.lambdify(syms, expr, "numpy")

    def call(X, T):
        X = np.asarray(X, dtype=float).reshape(-1, d_x)
        T = np.asarray(T, dtype=float).reshape(-1)
        out = fn(*[X[:, k] for k in range(d_x)], T)
        return np.broadcast_to(np.asarray(out, dtype=float), T.shape).copy()

    return call


class SymbolicSolution:
    def __init__(self, exprs, d_x: int):
        self.d_x = d_x
        self.exprs = [_parse(e, d_x) for e in exprs]

    @lru_cache(maxsize=None)
    def _fn(self, index: DerivativeIndex, comp: int):
        syms = _symbols(self.d_x)
        e = self.exprs[comp]
        for k, m in enumerate(index.orders):
            if m:
                e = sympy.diff(e, syms[k], m)
        return _lambdify(e, self.d_x)

    def __call__(self, X, T, index: DerivativeIndex) -> np.ndarray:
        return np.column_stack([self._fn(index, c)(X, T) for c in range(len(self.exprs))])


def _operator(terms, d_x: int, n_out=None) -> OperatorSpec:
    out = []
    for t in terms:
        coef = t.get("coef", 1.0)
        if isinstance(coef, str):
            coef = _lambdify(_parse(coef, d_x), d_x)
        else:
            coef = float(coef)
        out.append(Term(int(t.get("out", 0)), int(t.get("comp", 0)), coef,
                        parse_index(t.get("index", "id"), d_x)))
    return OperatorSpec(tuple(out), n_out)


def _vector_fn(exprs, d_x: int):
    fns = [_lambdify(_parse(e, d_x), d_x) for e in exprs]
    return lambda X, T: np.column_stack([f(X, T) for f in fns])


def _domain(d: dict):
    kind = d.get("kind", "box")
    if kind == "box":
        return Box(tuple(map(float, d["lo"])), tuple(map(float, d["hi"])))
    if kind == "composite":
        return composite_from_dict(d)
    raise ValueError(f"unknown domain kind {kind!r}")


def problem_from_dict(d: dict) -> ProblemSpec:
    domain = _domain(d["domain"])
    d_x = domain.d_x
    d_u = int(d.get("d_u", 1))
    exact = SymbolicSolution(d["exact"], d_x) if "exact" in d else None
    L = _operator(d["L"], d_x, d_u)
    f = _vector_fn(d.get("f", ["0"] * d_u), d_x)

    def data_fn(cond, op, initial: bool):
        data = cond.get("data", "exact")
        if data == "exact":
            if exact is None:
                raise ValueError("data = 'exact' needs an exact solution")

            def g(X, T=None):
                T = np.zeros(len(X)) if initial else T
                jets = {idx: exact(X, T, idx) for idx in op.indices}
                return op.apply(jets, X, T)
            return g
        fn = _vector_fn(data, d_x)
        return (lambda X: fn(X, np.zeros(len(X)))) if initial else fn

    bcs = []
    for bc in d.get("boundary", []):
        op = _operator(bc["op"], d_x)
        tags = tuple(bc["tags"]) if "tags" in bc else None
        bcs.append(BoundaryCondition(op, data_fn(bc, op, False), tags))
    ics = []
    for ic in d.get("initial", []):
        op = _operator(ic["op"], d_x)
        ics.append(InitialCondition(op, data_fn(ic, op, True)))
    return ProblemSpec(name=str(d.get("name", "custom")), domain=domain, T=float(d["T"]), d_u=d_u, L=L,
                       f=f, boundary_conditions=tuple(bcs), initial_conditions=tuple(ics), exact=exact,
                       periodic=tuple(PeriodicPair(int(a)) for a in d.get("periodic", [])),
                       description=str(d.get("description", "")))


def validate_problem_dict(d: dict) -> None:
    from .config import ConfigError

    for key in ("domain", "T", "L", "initial"):
        if key not in d:
            raise ConfigError(f"problem.{key}", "required for an inline problem")
    try:
        problem_from_dict(d)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError("problem", str(exc)) from None
