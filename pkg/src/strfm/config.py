"""Run configuration: a versioned TOML schema, validation and the preset catalog.

A config file looks like::

    schema_version = 1
    problem = "heat_1d"
    mode = "strfm"            # strfm | march | compare | sweep | eigen | reference

    [discretization]
    N_x = 2
    N_t = 5
    N_b = 1
    Q_x = 20
    Q_t = 20
    J_n = 400
    R_m = 1.0
    kind = "STC"              # STC | SoV
    pou = "A"                 # A | B
    seed = 0
    trunc_tol = 1e-12

    [weights]                 # optional per-tag row weights
    interior = 1.0

    [eval]
    n_space = 200
    n_time = 400

    [sweep]                   # mode = "sweep" (or "reference": sweep against the reference run)
    axis = "J_n"              # N_t | N_b | J_n | Q
    values = [50, 100, 200]
    solver = "march"          # strfm | march

    [reference]               # mode = "reference": overrides defining the reference run
    J_n = 250

    [eigen]                   # mode = "eigen"
    J_values = [100, 200, 400]
    n_blocks = 3
    method = "pinv"           # pinv | normal
"""
from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

SCHEMA_VERSION = 1
MODES = ("strfm", "march", "compare", "sweep", "eigen", "reference")
SWEEP_AXES = ("N_t", "N_b", "J_n", "Q")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


@dataclass
class EvalSpec:
    """Error grid: ``n_space`` points per spatial axis (int or per-axis list), ``n_time`` time levels."""

    n_space: Any = 200
    n_time: int = 400

    def space_counts(self, d_x: int) -> tuple:
        if isinstance(self.n_space, (list, tuple)):
            return tuple(int(v) for v in self.n_space)
        return (int(self.n_space),) * d_x


@dataclass
class SweepSpec:
    axis: str = "J_n"
    values: list = field(default_factory=list)
    solver: str = "strfm"


@dataclass
class EigenSpec:
    J_values: list = field(default_factory=lambda: [100, 200, 400])
    n_blocks: int = 3
    method: str = "pinv"


@dataclass
class ReferenceSpec:
    """Overrides that define the high-resolution reference run."""

    overrides: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    problem: Any = "heat_1d"
    mode: str = "strfm"
    N_x: Any = 2
    N_t: int = 1
    N_b: int = 1
    Q_x: Any = 20
    Q_t: int = 20
    J_n: int = 100
    R_m: float = 1.0
    kind: str = "STC"
    pou: str = "A"
    seed: int = 0
    trunc_tol: float = 1e-12
    share_across_time: bool = False
    activation: str = "tanh"
    weights: dict = field(default_factory=dict)
    eval: EvalSpec = field(default_factory=EvalSpec)
    sweep: Optional[SweepSpec] = None
    eigen: Optional[EigenSpec] = None
    reference: Optional[ReferenceSpec] = None
    domain: Optional[dict] = None
    output_dir: str = "out"
    name: str = "custom"
    section: str = ""
    schema_version: int = SCHEMA_VERSION

    def replace(self, **changes) -> "RunConfig":
        cfg = copy.deepcopy(self)
        for k, v in changes.items():
            if k == "Q":
                cfg.Q_x, cfg.Q_t = v, v
            else:
                setattr(cfg, k, v)
        return cfg

    def validate(self) -> "RunConfig":
        return validate(self)

    def to_dict(self) -> dict:
        d = {"schema_version": self.schema_version, "name": self.name, "section": self.section,
             "problem": self.problem, "mode": self.mode, "output_dir": self.output_dir,
             "discretization": {k: _plain(getattr(self, k)) for k in _DISC_KEYS},
             "eval": {k: _plain(v) for k, v in dataclasses.asdict(self.eval).items()}}
        if self.weights:
            d["weights"] = dict(self.weights)
        for key in ("sweep", "eigen"):
            val = getattr(self, key)
            if val is not None:
                d[key] = dataclasses.asdict(val)
        if self.reference is not None:
            d["reference"] = dict(self.reference.overrides)
        if self.domain is not None:
            d["domain"] = self.domain
        return d

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())


_DISC_KEYS = ("N_x", "N_t", "N_b", "Q_x", "Q_t", "J_n", "R_m", "kind", "pou", "seed", "trunc_tol",
              "share_across_time", "activation")


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


def _positive_int(name: str, v) -> None:
    vals = v if isinstance(v, (list, tuple)) else [v]
    for x in vals:
        if isinstance(x, bool) or not isinstance(x, int) or x < 1:
            raise ConfigError(name, f"must be a positive integer (or list of them), got {v!r}")


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.schema_version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {cfg.schema_version!r}")
    if cfg.mode not in MODES:
        raise ConfigError("mode", f"must be one of {MODES}, got {cfg.mode!r}")
    for name in ("N_x", "N_t", "N_b", "Q_x", "Q_t", "J_n"):
        _positive_int(name, getattr(cfg, name))
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or cfg.seed < 0:
        raise ConfigError("seed", f"must be a non-negative integer, got {cfg.seed!r}")
    if not isinstance(cfg.R_m, (int, float)) or not cfg.R_m > 0:
        raise ConfigError("R_m", f"must be positive, got {cfg.R_m!r}")
    if not isinstance(cfg.trunc_tol, (int, float)) or not 0 < cfg.trunc_tol < 1:
        raise ConfigError("trunc_tol", f"must lie in (0, 1), got {cfg.trunc_tol!r}")
    if str(cfg.kind).lower() not in ("stc", "sov"):
        raise ConfigError("kind", f"must be STC or SoV, got {cfg.kind!r}")
    if str(cfg.pou).upper() not in ("A", "B"):
        raise ConfigError("pou", f"must be A or B, got {cfg.pou!r}")
    if cfg.activation not in ("tanh", "sin", "cos"):
        raise ConfigError("activation", f"unknown activation {cfg.activation!r}")
    for k, w in cfg.weights.items():
        if k not in ("interior", "boundary", "initial", "interface"):
            raise ConfigError(f"weights.{k}", "unknown row tag")
        if not isinstance(w, (int, float)) or not w > 0:
            raise ConfigError(f"weights.{k}", f"must be positive, got {w!r}")
    _positive_int("eval.n_space", cfg.eval.n_space)
    _positive_int("eval.n_time", cfg.eval.n_time)
    if cfg.mode == "strfm" and cfg.N_b != 1:
        raise ConfigError("N_b", "a global space-time solve uses N_b = 1 (set mode = 'march' for blocks)")
    if cfg.mode == "march" and cfg.N_t != 1:
        raise ConfigError("N_t", "block marching uses N_t = 1 per block (set mode = 'strfm' for N_t > 1)")
    if cfg.mode in ("march", "compare", "eigen") and str(cfg.pou).upper() != "A":
        raise ConfigError("pou", f"mode {cfg.mode!r} needs the indicator PoU 'A'")
    if cfg.mode == "sweep" and cfg.sweep is None:
        raise ConfigError("sweep", "mode 'sweep' needs a [sweep] table")
    if cfg.sweep is not None and cfg.mode in ("sweep", "reference"):
        if cfg.sweep.axis not in SWEEP_AXES:
            raise ConfigError("sweep.axis", f"must be one of {SWEEP_AXES}, got {cfg.sweep.axis!r}")
        vals = cfg.sweep.values
        _positive_int("sweep.values", list(vals))
        if len(vals) < 1 or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("sweep.values", "must be a nonempty, strictly increasing list")
        if cfg.sweep.solver not in ("strfm", "march"):
            raise ConfigError("sweep.solver", f"must be 'strfm' or 'march', got {cfg.sweep.solver!r}")
    if cfg.mode == "eigen":
        if cfg.eigen is None:
            raise ConfigError("eigen", "mode 'eigen' needs an [eigen] table")
        _positive_int("eigen.J_values", list(cfg.eigen.J_values))
        if cfg.eigen.n_blocks < 2:
            raise ConfigError("eigen.n_blocks", "needs at least two blocks")
        if cfg.eigen.method not in ("pinv", "normal"):
            raise ConfigError("eigen.method", f"must be 'pinv' or 'normal', got {cfg.eigen.method!r}")
    if cfg.mode == "reference" and cfg.reference is None:
        raise ConfigError("reference", "mode 'reference' needs a [reference] table")
    if cfg.reference is not None:
        bad = set(cfg.reference.overrides) - set(_DISC_KEYS) - {"Q"}
        if bad:
            raise ConfigError(f"reference.{sorted(bad)[0]}", "unknown discretization key")
        if cfg.mode == "reference" and cfg.sweep is not None and cfg.sweep.solver != "strfm":
            raise ConfigError("sweep.solver", "reference sweeps use the global solver 'strfm'")
    if isinstance(cfg.problem, dict):
        from .custom import validate_problem_dict
        validate_problem_dict(cfg.problem)
    elif not isinstance(cfg.problem, str):
        raise ConfigError("problem", "must be a catalog name or an inline table")
    else:
        from .problems import CATALOG
        if cfg.problem not in CATALOG:
            raise ConfigError("problem", f"unknown problem {cfg.problem!r}")
    return cfg


def from_dict(d: dict) -> RunConfig:
    d = copy.deepcopy(d)
    known = {"schema_version", "name", "section", "problem", "mode", "output_dir", "discretization",
             "weights", "eval", "sweep", "eigen", "reference", "domain"}
    extra = set(d) - known
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown top-level key")
    disc = d.pop("discretization", {})
    bad = set(disc) - set(_DISC_KEYS)
    if bad:
        raise ConfigError(f"discretization.{sorted(bad)[0]}", "unknown key")
    kw = {k: d[k] for k in ("schema_version", "name", "section", "problem", "mode", "output_dir", "domain")
          if k in d}
    kw.update(disc)
    for key in ("N_x", "Q_x"):
        if isinstance(kw.get(key), list):
            kw[key] = tuple(kw[key])
    if "weights" in d:
        kw["weights"] = dict(d["weights"])
    try:
        if "eval" in d:
            kw["eval"] = EvalSpec(**d["eval"])
        if "sweep" in d:
            kw["sweep"] = SweepSpec(**d["sweep"])
        if "eigen" in d:
            kw["eigen"] = EigenSpec(**d["eigen"])
    except TypeError as exc:
        raise ConfigError("table", str(exc)) from None
    if "reference" in d:
        kw["reference"] = ReferenceSpec(dict(d["reference"]))
    return validate(RunConfig(**kw))


def loads(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("file", f"not valid TOML: {exc}") from None
    return from_dict(data)


def load(path) -> RunConfig:
    return loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _heat(**kw):
    base = dict(problem="heat_1d", N_x=2, N_t=5, Q_x=20, Q_t=20, J_n=400, section="3.1.1")
    base.update(kw)
    return base


def _wave(**kw):
    base = dict(problem="wave_1d", N_x=5, N_t=5, Q_x=30, Q_t=30, J_n=300, section="3.1.3")
    base.update(kw)
    return base


def _complex(**kw):
    base = dict(problem="membrane_complex", N_x=(2, 2), N_t=1, Q_x=(30, 30), Q_t=30, J_n=400,
                section="3.2.2", eval=EvalSpec((51, 41), 101))
    base.update(kw)
    return base


PRESETS = {
    "heat-default": _heat(),
    "heat-sov": _heat(kind="SoV"),
    "heat-sweep-Nt": _heat(mode="sweep", N_t=1, sweep=SweepSpec("N_t", [1, 2, 3, 4, 5], "strfm")),
    "heat-sweep-Nb": _heat(mode="sweep", N_t=1, sweep=SweepSpec("N_b", [1, 2, 3, 4, 5], "march")),
    "heat-sweep-J": _heat(mode="sweep", N_t=1, N_b=5,
                          sweep=SweepSpec("J_n", [50, 100, 200, 300, 400], "march")),
    "heat-sweep-Q": _heat(mode="sweep", N_t=1, N_b=5,
                          sweep=SweepSpec("Q", [5, 10, 15, 20, 25], "march")),
    "heat-marching-vs-strfm": _heat(mode="compare", N_b=5),
    "heat-nonsmooth": dict(problem="heat_1d_nonsmooth", mode="reference", N_x=2, N_t=5, Q_x=30, Q_t=50,
                           J_n=200, section="3.1.2",
                           sweep=SweepSpec("J_n", [50, 100, 150, 200], "strfm"),
                           reference=ReferenceSpec(dict(J_n=250))),
    "wave-default": _wave(),
    "wave-sov": _wave(kind="SoV"),
    "wave-sweep-J": _wave(mode="sweep", N_t=1, N_b=5,
                          sweep=SweepSpec("J_n", [100, 150, 200, 250, 300], "march")),
    "wave-sweep-Q": _wave(mode="sweep", N_t=1, N_b=5,
                          sweep=SweepSpec("Q", [10, 15, 20, 25, 30], "march")),
    "wave-marching-vs-strfm": _wave(mode="compare", N_b=5),
    "wave-growth": _wave(mode="compare", N_x=2, N_t=20, N_b=20, Q_x=10, Q_t=10, J_n=100, section="3.1.5"),
    "eigen-heat": _heat(mode="eigen", N_x=1, N_t=1, section="3.1.5",
                        eigen=EigenSpec([100, 200, 400], 3)),
    "eigen-wave": _wave(mode="eigen", N_x=1, N_t=1, Q_x=30, Q_t=30, section="3.1.5",
                        eigen=EigenSpec([100, 200, 400], 3)),
    "eigen-schrodinger": dict(problem="schrodinger_1d", mode="eigen", N_x=1, N_t=1, Q_x=30, Q_t=30,
                              J_n=200, section="3.1.5", eigen=EigenSpec([200, 400], 3)),
    "schrodinger-default": dict(problem="schrodinger_1d", N_x=5, N_t=3, Q_x=30, Q_t=30, J_n=300,
                                section="3.1.4"),
    "membrane-simple": dict(problem="membrane_2d", N_x=(2, 2), N_t=5, Q_x=(30, 30), Q_t=30, J_n=400,
                            section="3.2.1", eval=EvalSpec((51, 41), 101)),
    "membrane-complex": _complex(mode="reference", N_t=1,
                                 sweep=SweepSpec("N_t", [1, 2, 3, 4, 5], "strfm"),
                                 reference=ReferenceSpec(dict(N_t=6))),
}


def preset_names() -> list:
    return list(PRESETS)


def get_preset(name: str) -> RunConfig:
    try:
        kw = copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}") from None
    for key in ("N_x", "Q_x"):
        if isinstance(kw.get(key), list):
            kw[key] = tuple(kw[key])
    return validate(RunConfig(name=name, **kw))


def list_presets() -> str:
    lines = []
    for name in PRESETS:
        cfg = get_preset(name)
        lines.append(f"{name} (§{cfg.section})  problem={cfg.problem} mode={cfg.mode}")
    return "\n".join(lines)
