"""Config parsing, presets and the command-line runner."""
import json
from pathlib import Path

import numpy as np
import pytest
import tomli_w

from strfm import cli
from strfm.config import (ConfigError, EigenSpec, EvalSpec, ReferenceSpec, RunConfig, SweepSpec,
                          from_dict, get_preset, list_presets, load, loads, preset_names)
from strfm.custom import problem_from_dict
from strfm.solve import SolveError

HEAT_UNIT = """
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
"""


def shrink(cfg: RunConfig) -> RunConfig:
    """Same experiment shape, tiny discretization."""
    two_d = isinstance(cfg.N_x, tuple)
    q = (6, 6) if two_d else 6
    small = cfg.replace(J_n=8, Q_x=q, Q_t=6, eval=EvalSpec((9, 9) if two_d else 9, 41))
    if cfg.sweep is not None:
        vals = {"J_n": [4, 8], "Q": [4, 6]}.get(cfg.sweep.axis, cfg.sweep.values[:2])
        small.sweep = SweepSpec(cfg.sweep.axis, vals, cfg.sweep.solver)
    if cfg.eigen is not None:
        small.eigen = EigenSpec([4, 6], cfg.eigen.n_blocks, cfg.eigen.method)
    if cfg.reference is not None:
        ov = {k: {"J_n": 14, "N_t": 3}.get(k, v) for k, v in cfg.reference.overrides.items()}
        small.reference = ReferenceSpec(ov)
    return small


# ---------------------------------------------------------------------------
# presets and round trips
# ---------------------------------------------------------------------------


def test_list_presets_shows_sections():
    text = list_presets()
    for line in ("heat-default (§3.1.1)", "schrodinger-default (§3.1.4)", "membrane-complex (§3.2.2)"):
        assert line in text
    assert len(text.splitlines()) == len(preset_names()) >= 10


@pytest.mark.parametrize("name", preset_names())
def test_preset_roundtrip(name):
    cfg = get_preset(name)
    again = loads(cfg.dumps())
    assert again.to_dict() == cfg.to_dict()
    assert again.N_x == cfg.N_x


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as e:
        from_dict({"problem": "heat_1d", "bogus": 1})
    assert e.value.field == "bogus"
    with pytest.raises(ConfigError) as e:
        from_dict({"discretization": {"N_q": 3}})
    assert e.value.field == "discretization.N_q"


@pytest.mark.parametrize("field,value", [("N_t", 0), ("J_n", -1), ("kind", "XYZ"), ("pou", "C"),
                                         ("mode", "nope"), ("trunc_tol", 0.0)])
def test_invalid_values_name_their_field(field, value):
    with pytest.raises(ConfigError) as e:
        RunConfig(**{field: value}).validate()
    assert field in e.value.field


def test_not_toml():
    with pytest.raises(ConfigError) as e:
        loads("N_t = = 3")
    assert e.value.field == "file"


def test_unknown_preset():
    with pytest.raises(ConfigError):
        get_preset("heat-nope")


# ---------------------------------------------------------------------------
# main(): exit codes and error output
# ---------------------------------------------------------------------------


def _write(tmp_path, d, name="c.toml"):
    p = tmp_path / name
    p.write_text(tomli_w.dumps(d))
    return str(p)


def test_main_list_presets(capsys):
    assert cli.main(["list-presets"]) == 0
    assert "wave-default" in capsys.readouterr().out


def test_main_dump_preset_parses_back(capsys):
    assert cli.main(["dump-preset", "wave-growth"]) == 0
    cfg = loads(capsys.readouterr().out)
    assert cfg.to_dict() == get_preset("wave-growth").to_dict()


def test_main_config_error_exit_2(tmp_path, capsys):
    path = _write(tmp_path, {"problem": "heat_1d", "discretization": {"N_t": 0}})
    assert cli.main(["run", path, "-o", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "error" and err["kind"] == "config" and err["field"] == "N_t"


def test_main_unknown_target_exit_2(capsys):
    assert cli.main(["run", "no-such-preset-or-file"]) == 2
    assert json.loads(capsys.readouterr().err)["field"] == "config"


def test_main_bad_thread_env(monkeypatch, capsys):
    monkeypatch.setenv(cli.THREADS_ENV, "x")
    assert cli.main(["run", "heat-default"]) == 2
    assert json.loads(capsys.readouterr().err)["field"] == cli.THREADS_ENV


def test_main_non_finite_inline_data_is_config_error(tmp_path, capsys):
    d = {"problem": {"domain": {"kind": "box", "lo": [0.0], "hi": [1.0]}, "T": 1.0,
                     "L": [{"index": "t"}], "f": ["log(x-x)"],
                     "initial": [{"op": [{"index": "id"}], "data": ["0"]}]}}
    assert cli.main(["run", _write(tmp_path, d)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert "not finite" in err["message"]


def test_main_solve_failure_exit_1(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise SolveError("least-squares system is not finite")

    monkeypatch.setattr(cli, "solve_strfm", boom)
    small = shrink(get_preset("heat-default"))
    path = _write(tmp_path, small.to_dict())
    assert cli.main(["run", path, "-o", str(tmp_path / "o")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["kind"] == "solve" and "not finite" in err["message"]


def test_main_success_prints_status(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    path = _write(tmp_path, shrink(get_preset("heat-default")).to_dict())
    out = tmp_path / "o"
    assert cli.main(["run", path, "-o", str(out)]) == 0
    msg = json.loads(capsys.readouterr().out)
    assert msg["status"] == "ok"
    assert (out / "summary.json").exists() and (out / "snapshot.csv").exists()


# ---------------------------------------------------------------------------
# every preset, shrunk, end to end
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", preset_names())
def test_shrunk_preset_runs_and_validates(name, tmp_path):
    cfg = shrink(get_preset(name))
    summary = cli.run_config(cfg, tmp_path)
    cli.validate_summary(summary)
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk["status"] == "ok" and on_disk["mode"] == cfg.mode
    if cfg.mode == "sweep":
        rows = summary["sweep"]["rows"]
        assert len(rows) == len(cfg.sweep.values)
        assert (tmp_path / "sweep.csv").exists()
    if cfg.mode == "eigen":
        assert [e["J_n"] for e in summary["eigen"]] == [4, 6]
        assert all((tmp_path / f"eigen_J{J}.csv").exists() for J in (4, 6))


@pytest.mark.parametrize("name", ["heat-sweep-J", "eigen-wave"])
def test_rerun_is_byte_identical(name, tmp_path):
    cfg = shrink(get_preset(name))
    cli.run_config(cfg, tmp_path / "a")
    cli.run_config(cfg, tmp_path / "b")
    files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_reference_is_cached(tmp_path):
    cfg = shrink(get_preset("heat-nonsmooth"))
    cli.run_config(cfg, tmp_path)
    first = (tmp_path / "reference.npz").stat().st_mtime_ns
    summary = cli.run_config(cfg, tmp_path)
    assert (tmp_path / "reference.npz").stat().st_mtime_ns == first
    assert summary["reference"]["overrides"] == {"J_n": 14}


def test_domain_table_only_for_complex_membrane():
    cfg = RunConfig(problem="heat_1d", domain={"outer": {"rectangle": {"lo": [0, 0], "hi": [1, 1]}}})
    with pytest.raises(ConfigError) as e:
        cli.resolve_problem(cfg)
    assert e.value.field == "domain"


# ---------------------------------------------------------------------------
# inline problems
# ---------------------------------------------------------------------------


def test_inline_problem_solves(tmp_path):
    cfg = loads(HEAT_UNIT + "\n[discretization]\nN_x = 2\nN_t = 2\nQ_x = 20\nQ_t = 20\nJ_n = 150\n"
                "\n[eval]\nn_space = 21\nn_time = 11\n")
    summary = cli.run_config(cfg, tmp_path)
    assert summary["problem"] == "heat_unit"
    assert summary["error"]["Linf_global"] < 1e-4


def test_inline_exact_derivatives_are_symbolic():
    from strfm.config import tomllib

    p = problem_from_dict(tomllib.loads(HEAT_UNIT)["problem"])
    X = np.linspace(0, 1, 7)[:, None]
    T = np.full(7, 0.3)
    from strfm.features import DerivativeIndex

    ut = p.exact(X, T, DerivativeIndex((0,), 1))[:, 0]
    uxx = p.exact(X, T, DerivativeIndex((2,), 0))[:, 0]
    np.testing.assert_allclose(ut, uxx, atol=1e-12)
    np.testing.assert_allclose(ut, -np.pi ** 2 * np.sin(np.pi * X[:, 0]) * np.exp(-np.pi ** 2 * 0.3),
                               atol=1e-12)


def test_inline_problem_bad_symbol():
    d = {"domain": {"kind": "box", "lo": [0.0], "hi": [1.0]}, "T": 1.0, "L": [{"index": "t"}],
         "f": ["q*x"], "initial": [{"op": [{"index": "id"}], "data": ["0"]}]}
    with pytest.raises(ConfigError) as e:
        RunConfig(problem=d).validate()
    assert "unknown symbols" in e.value.message


@pytest.mark.parametrize("path", sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.toml")),
                         ids=lambda p: p.name)
def test_example_configs_load(path):
    cfg = load(path)
    problem = cli.resolve_problem(cfg)
    assert problem.T > 0 and cfg.name == path.stem.replace("_", "-")
