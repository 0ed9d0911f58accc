import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from strfm.config import RunConfig


def small_config(**kw):
    base = dict(N_x=1, N_t=1, N_b=1, Q_x=6, Q_t=6, J_n=8, seed=3)
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def consistent_instance(seed):
    """A small least-squares instance whose global system has an exact solution.

    The exact coefficients are drawn from the null space of the rows that couple
    consecutive time cells, so marching block by block can reproduce them. Returns the global
    solution, the marching solution (both in global column order) and the
    relative residual of the global solve.
    """
    import scipy.linalg

    from strfm.assembly import assemble_blocks, assemble_strfm
    from strfm.features import draw_bank
    from strfm.geometry import decompose, sample_collocation
    from strfm.problems import get_problem
    from strfm.solve import block_to_global, lstsq, march

    r = np.random.default_rng(seed)
    name = ["heat_1d", "wave_1d", "schrodinger_1d"][seed % 3]
    p = get_problem(name)
    J = int(r.integers(2, 9))
    q = int(r.integers(2, 5))
    n_t = int(r.integers(2, 4))
    n_x = int(r.integers(1, 3))
    d = decompose(p.domain, p.T, n_x, n_t)
    bank = draw_bank(seed, r.choice(["STC", "SoV"]), d, J)
    col = sample_collocation(d, p.domain, q, q)
    g = assemble_strfm(p, d, bank, "A", col)
    blocks = assemble_blocks(p, d, bank, col)
    coupling = [np.flatnonzero(g.row_cell == it)[:blocks[it].n_init] for it in range(1, n_t)]
    C = g.A[np.concatenate(coupling)] if coupling else np.zeros((0, g.A.shape[1]))
    N = scipy.linalg.null_space(C) if len(C) else np.eye(g.A.shape[1])
    assert N.shape[1] > 0
    u_star = N @ r.normal(size=N.shape[1])
    b = g.A @ u_star
    rep = lstsq(g.A, b)
    rhs = [b[g.row_cell == it] for it in range(n_t)]
    _, coeffs, _ = march(blocks, rhs=rhs)
    u_b = block_to_global(d, J * p.d_u, coeffs)
    info = dict(problem=name, J_n=J, Q=q, N_t=n_t, N_x=n_x)
    return rep.coefficients, u_b, rep.residual_2norm / np.linalg.norm(b), info


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion at the end of the session
# ---------------------------------------------------------------------------

ACCEPTANCE_LINES = []


def record_criterion(label: str, ok: bool, detail: str) -> None:
    line = f"{label}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# full-size preset runs, shared across the acceptance and published-value tests
# ---------------------------------------------------------------------------

REPO = Path(__file__).resolve().parents[1]
CACHE = Path(os.environ.get("STRFM_ACCEPTANCE_DIR", REPO / ".acceptance"))


@pytest.fixture(scope="session")
def preset_run(tmp_path_factory):
    """``name -> (summary, wall_seconds, output_dir)``, each preset run once per session."""
    from strfm import cli
    from strfm.config import get_preset

    memo = {}

    def run(name):
        if name not in memo:
            out = tmp_path_factory.mktemp(name)
            t0 = time.perf_counter()
            summary = cli.run_config(get_preset(name), out)
            memo[name] = (summary, time.perf_counter() - t0, out)
        return memo[name]

    return run


def cached_run(name):
    """Run a preset into ``CACHE/name``, reusing ``summary.json`` while its config is unchanged."""
    from strfm import cli
    from strfm.config import get_preset

    cfg = get_preset(name)
    path = CACHE / name / "summary.json"
    if path.exists():
        summary = json.loads(path.read_text())
        if summary.get("config") == json.loads(json.dumps(cfg.to_dict())):
            return summary
    return cli.run_config(cfg, CACHE / name)
