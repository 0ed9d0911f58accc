"""scikit-learn style front end: ``SpaceTimeRFM().fit(problem).predict(XT)``."""
from __future__ import annotations

from types import SimpleNamespace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .features import DerivativeIndex
from .problems import ProblemSpec, get_problem
from .solve import evaluate, solve_block_marching, solve_strfm


class SpaceTimeRFM(BaseEstimator):
    """Space-time random feature solver for a linear evolution problem.

    Parameters
    ----------
    N_x : int or tuple of int
        Spatial cells per axis.
    N_t : int
        Time cells of the global solve (``solver="strfm"``).
    N_b : int
        Time blocks of the marching solve (``solver="march"``).
    Q_x, Q_t : int
        Collocation points per cell and axis in space, and time intervals per cell.
    J_n : int
        Random features per cell.
    R_m : float
        Half-width of the uniform distribution of feature weights.
    kind : {"STC", "SoV"}
        Joint space-time features or products of spatial and temporal ones.
    pou : {"A", "B"}
        Indicator or smooth partition of unity.
    solver : {"strfm", "march"}
    seed : int
    trunc_tol : float
        Relative singular-value cutoff of the least-squares solves.
    weights : dict or None
        Per-tag row weights (``interior``, ``boundary``, ``initial``, ``interface``).

    Attributes
    ----------
    solution_ : Solution
        Fitted model, callable on ``(X, T)``.
    report_ : SolveReport or MarchReport
    problem_ : ProblemSpec
    n_features_in_ : int
        ``d_x + 1`` input columns (space, then time).
    """

    def __init__(self, N_x=2, N_t=1, N_b=1, Q_x=20, Q_t=20, J_n=100, R_m=1.0, kind="STC", pou="A",
                 solver="strfm", seed=0, trunc_tol=1e-12, weights=None, share_across_time=False,
                 activation="tanh"):
        self.N_x = N_x
        self.N_t = N_t
        self.N_b = N_b
        self.Q_x = Q_x
        self.Q_t = Q_t
        self.J_n = J_n
        self.R_m = R_m
        self.kind = kind
        self.pou = pou
        self.solver = solver
        self.seed = seed
        self.trunc_tol = trunc_tol
        self.weights = weights
        self.share_across_time = share_across_time
        self.activation = activation

    def _config(self) -> SimpleNamespace:
        p = self.get_params()
        p["weights"] = dict(self.weights or {})
        return SimpleNamespace(**p)

    def fit(self, problem, y=None):
        """Solve ``problem`` (a ``ProblemSpec`` or catalog name). ``y`` is ignored."""
        if isinstance(problem, str):
            problem = get_problem(problem)
        if not isinstance(problem, ProblemSpec):
            raise TypeError(f"expected a ProblemSpec or problem name, got {type(problem).__name__}")
        cfg = self._config()
        if self.solver == "strfm":
            res = solve_strfm(problem, cfg)
            self.report_ = res.report
            self.solution_ = res.solution
        elif self.solver == "march":
            cfg.N_t = 1
            rep = solve_block_marching(problem, cfg)
            self.report_ = rep
            self.solution_ = rep.solution
        else:
            raise ValueError(f"solver must be 'strfm' or 'march', got {self.solver!r}")
        self.problem_ = problem
        self.n_features_in_ = problem.d_x + 1
        return self

    def _split(self, XT):
        check_is_fitted(self, "solution_")
        XT = check_array(XT, dtype=np.float64)
        if XT.shape[1] != self.n_features_in_:
            raise ValueError(f"XT has {XT.shape[1]} columns, expected {self.n_features_in_} (x..., t)")
        return XT[:, :-1], XT[:, -1]

    def predict(self, XT, derivative: DerivativeIndex | None = None) -> np.ndarray:
        """Model values at rows ``(x..., t)``; shape ``(n,)`` for scalar problems, else ``(n, d_u)``."""
        X, T = self._split(XT)
        out = self.solution_(X, T, derivative)
        return out[:, 0] if out.shape[1] == 1 else out

    def residual(self, XT) -> np.ndarray:
        """PDE residual ``L u - f`` of the fitted model at rows ``(x..., t)``."""
        X, T = self._split(XT)
        p, sol = self.problem_, self.solution_
        jets = evaluate(p, sol.decomp, sol.bank, sol.pou, sol.coefficients, X, T, p.L.indices)
        return p.L.apply(jets, X, T) - p.f(X, T)

    def score(self, XT, y=None) -> float:
        """Negative root-mean-square error against ``y`` (default: the exact solution)."""
        X, T = self._split(XT)
        if y is None:
            y = self.problem_.exact_values(X, T)
        pred = self.predict(XT)
        y = np.asarray(y, dtype=float).reshape(pred.shape)
        return -float(np.sqrt(np.mean((pred - y) ** 2)))
