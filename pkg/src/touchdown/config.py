"""Run configuration: strict JSON schema, validation, round-trip serialisation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .analysis import Region
from .errors import TouchdownError, ValidationError
from .grid import Domain, Grid, build_grid
from .profiles import (
    BallSpec,
    Profile,
    TwoAnnulusGeometry,
    constant,
    make_convex_lambda,
    make_m_shaped,
    make_one_well,
    make_two_annulus_family,
    make_two_bump,
)
from .solver import SolverConfig


class ConfigError(ValidationError):
    def __init__(self, problems, line: int | None = None):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"invalid configuration{where}: " + "; ".join(self.problems))


@dataclass(frozen=True)
class DomainSpec:
    kind: str = "interval"
    R: float = 1.0
    n: int = 1
    m: int = 801


@dataclass(frozen=True)
class ProfileSpec:
    family: str = "constant"
    params: dict = field(default_factory=lambda: {"c": 10.0})


@dataclass(frozen=True)
class SolverSpec:
    p: float = 2.0
    dt_init: float | None = None
    dt_safety: float = 0.1
    eps_stop: float = 1e-4
    snapshot_stride: int = 10
    fit_window: int = 40
    t_max: float | None = None


@dataclass(frozen=True)
class AnalysisSpec:
    floor_ball: dict | None = None       # {"center": c, "radius": r}
    floor_mu: float | None = None
    regions: tuple = ()                  # ({"kind": ..., "radius": ..., "center": ...}, ...)
    monitor_J: bool = False


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str = "none"                   # none | sweep | bisect
    q: float = 2.0
    sizes: tuple = (0.8, 0.4, 0.2, 0.1, 0.05)
    geometry: dict | None = None         # TwoAnnulusGeometry fields
    tol_h: float | None = None


@dataclass(frozen=True)
class OutputSpec:
    report: str | None = None
    snapshots: str | None = None


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec = DomainSpec()
    profile: ProfileSpec = ProfileSpec()
    solver: SolverSpec = SolverSpec()
    analysis: AnalysisSpec = AnalysisSpec()
    experiment: ExperimentSpec = ExperimentSpec()
    output: OutputSpec = OutputSpec()
    seed: int = 0

    # ---------------------------------------------------------- builders
    def build_domain(self) -> Domain:
        d = self.domain
        return Domain(d.kind, d.R, d.n)

    def build_grid(self) -> Grid:
        return build_grid(self.build_domain(), self.domain.m)

    def build_profile(self, grid: Grid | None = None) -> Profile:
        grid = self.build_grid() if grid is None else grid
        return build_profile(grid, self.profile.family, self.profile.params)

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(s.p, s.dt_init, s.dt_safety, s.eps_stop, s.snapshot_stride, s.fit_window)

    @property
    def t_max(self) -> float:
        return math.inf if self.solver.t_max is None else self.solver.t_max

    def floor_ball(self) -> BallSpec | None:
        b = self.analysis.floor_ball
        return None if b is None else BallSpec(b.get("center", 0.0), b["radius"])

    def regions(self) -> list[Region]:
        return [Region(r["kind"], r["radius"], r.get("center", 0.0)) for r in self.analysis.regions]

    def geometry(self) -> TwoAnnulusGeometry | None:
        g = self.experiment.geometry
        return None if g is None else TwoAnnulusGeometry(**g)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["analysis"]["regions"] = [dict(r) for r in self.analysis.regions]
        d["experiment"]["sizes"] = list(self.experiment.sizes)
        return d


_PROFILE_PARAMS = {
    "constant": ({"c"}, set()),
    "m_shaped": ({"f0", "fL", "L"}, {"smoothness", "f_outer"}),
    "two_bump": ({"r", "eps", "A", "eta"}, set()),
    "convex_lambda": ({"mu", "lambda"}, set()),
    "one_well": ({"base", "well", "width"}, set()),
    "two_annulus_h": ({"h", "c1", "c2", "r", "mu", "eta"}, {"pairs"}),
    "custom": ({"values"}, set()),
}


def build_profile(grid: Grid, family: str, params: dict) -> Profile:
    if family not in _PROFILE_PARAMS:
        raise ValidationError(f"profile.family must be one of {sorted(_PROFILE_PARAMS)}")
    required, optional = _PROFILE_PARAMS[family]
    missing = required - set(params)
    extra = set(params) - required - optional
    if missing or extra:
        raise ValidationError(f"profile.params for {family}: missing {sorted(missing)}, unknown {sorted(extra)}")
    P = params
    if family == "constant":
        return constant(grid, P["c"])
    if family == "m_shaped":
        return make_m_shaped(grid, P["f0"], P["fL"], P["L"], P.get("smoothness"), P.get("f_outer"))
    if family == "two_bump":
        return make_two_bump(grid, P["r"], P["eps"], P["A"], P["eta"])
    if family == "convex_lambda":
        return make_convex_lambda(grid, P["mu"], P["lambda"])
    if family == "one_well":
        return make_one_well(grid, P["base"], P["well"], P["width"])
    if family == "two_annulus_h":
        geo = TwoAnnulusGeometry(P["c1"], P["c2"], P["r"], P["mu"], P["eta"], bool(P.get("pairs", True)))
        return make_two_annulus_family(grid, P["h"], geo)
    return Profile(grid, P["values"], "custom", {})


# ------------------------------------------------------------- parsing

_SECTIONS = {f.name: f for f in fields(RunConfig)}
_SECTION_TYPES = {"domain": DomainSpec, "profile": ProfileSpec, "solver": SolverSpec,
                  "analysis": AnalysisSpec, "experiment": ExperimentSpec, "output": OutputSpec}


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _check_fields(cfg: RunConfig) -> list[str]:
    """Range checks, each message naming its constraint."""
    out = []
    d, s, a, e = cfg.domain, cfg.solver, cfg.analysis, cfg.experiment
    if d.kind not in ("interval", "radial_ball"):
        out.append("domain.kind ∈ {interval, radial_ball}")
    if not (_is_num(d.R) and d.R > 0):
        out.append("domain.R > 0")
    if not (_is_int(d.n) and 1 <= d.n <= 3):
        out.append("domain.n ∈ {1,2,3}")
    elif d.kind == "interval" and d.n != 1:
        out.append("domain.n = 1 for interval domains")
    if not (_is_int(d.m) and d.m >= 3):
        out.append("domain.m >= 3")
    if not (_is_num(s.p) and s.p > 0):
        out.append("solver.p > 0")
    if s.dt_init is not None and not (_is_num(s.dt_init) and s.dt_init > 0):
        out.append("solver.dt_init > 0")
    if not (_is_num(s.dt_safety) and 0 < s.dt_safety <= 1):
        out.append("solver.dt_safety ∈ (0,1]")
    if not (_is_num(s.eps_stop) and 0 < s.eps_stop < 1):
        out.append("eps_stop ∈ (0,1)")
    if not (_is_int(s.snapshot_stride) and s.snapshot_stride >= 1):
        out.append("solver.snapshot_stride >= 1")
    if not (_is_int(s.fit_window) and s.fit_window >= 5):
        out.append("solver.fit_window >= 5")
    if s.t_max is not None and not (_is_num(s.t_max) and s.t_max > 0):
        out.append("solver.t_max > 0")
    if not isinstance(cfg.profile.params, dict):
        out.append("profile.params must be a mapping")
    if a.floor_ball is not None and (not isinstance(a.floor_ball, dict)
                                     or set(a.floor_ball) - {"center", "radius"}
                                     or "radius" not in a.floor_ball):
        out.append("analysis.floor_ball = {center, radius}")
    for r in a.regions:
        if not isinstance(r, dict) or set(r) - {"kind", "radius", "center"} or not {"kind", "radius"} <= set(r):
            out.append("analysis.regions entries = {kind, radius[, center]}")
    if not isinstance(a.monitor_J, bool):
        out.append("analysis.monitor_J must be a boolean")
    if e.kind not in ("none", "sweep", "bisect"):
        out.append("experiment.kind ∈ {none, sweep, bisect}")
    if not (e.q == math.inf or (_is_num(e.q) and e.q >= 1)):
        out.append("experiment.q ∈ [1, inf]")
    if not all(_is_num(x) and x >= 0 for x in e.sizes):
        out.append("experiment.sizes >= 0")
    if e.kind == "bisect" and e.geometry is None:
        out.append("experiment.geometry required for bisect")
    if e.tol_h is not None and not (_is_num(e.tol_h) and e.tol_h > 0):
        out.append("experiment.tol_h > 0")
    if not _is_int(cfg.seed):
        out.append("seed must be an integer")
    return out


def validate(cfg: RunConfig, problems: list[str] | None = None) -> RunConfig:
    """Raise ConfigError listing every violation; build grid/profile to check constructors."""
    problems = list(problems or []) + _check_fields(cfg)
    if not problems:
        try:
            grid = cfg.build_grid()
            cfg.build_profile(grid)
            cfg.solver_config()
            ball = cfg.floor_ball()
            if ball is not None:
                ball.check_inside(grid)
            for r in cfg.regions():
                r.validate(grid.domain)
            if cfg.experiment.geometry is not None:
                cfg.geometry().validate(grid)
        except (TouchdownError, TypeError, KeyError) as exc:
            problems.append(str(exc))
    if problems:
        raise ConfigError(problems)
    return cfg


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    problems = [f"unknown key {k!r}" for k in data if k not in _SECTIONS]
    kwargs = {}
    for name, typ in _SECTION_TYPES.items():
        if name not in data:
            continue
        sec = data[name]
        if not isinstance(sec, dict):
            problems.append(f"{name} must be a mapping")
            continue
        known = {f.name for f in fields(typ)}
        problems += [f"unknown key {name}.{k}" for k in sec if k not in known]
        vals = {k: v for k, v in sec.items() if k in known}
        if name == "analysis" and "regions" in vals:
            vals["regions"] = tuple(dict(r) if isinstance(r, dict) else r for r in vals["regions"])
        if name == "experiment" and "sizes" in vals:
            vals["sizes"] = tuple(vals["sizes"])
        if name == "experiment" and vals.get("q") == "inf":
            vals["q"] = math.inf
        kwargs[name] = typ(**vals)
    if "seed" in data:
        kwargs["seed"] = data["seed"]
    return validate(RunConfig(**kwargs), problems)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error: {exc.msg} at column {exc.colno}", line=exc.lineno) from exc
    return from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    d = cfg.to_dict()
    if d["experiment"]["q"] == math.inf:
        d["experiment"]["q"] = "inf"
    return json.dumps(d, indent=2) + "\n"


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dump_config(cfg), encoding="utf-8", newline="\n")
