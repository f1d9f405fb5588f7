"""Run configuration: a JSON document with sections grid, model, solver,
continuation and verify. Absent keys take their defaults."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .continuation import StepConfig, branch_solver_config
from .model import ConfigurationError, Problem, make_problem
from .solver import SolverConfig
from .spectrum import TOL_DEG

SECTIONS = {
    "grid": ("n",),
    "model": ("M", "kappa", "p", "h_modes"),
    "solver": ("newton_tol", "max_iterations"),
    "continuation": ("ds0", "ds_min", "ds_max", "tol_deg", "c_switch_factor"),
    "verify": ("levels",),
}


@dataclass(frozen=True)
class Config:
    n: int = 199
    M: float = 1.0
    kappa: float = 1.0
    p: int = 3
    h_modes: tuple[tuple[int, float], ...] = ((2, -1.0),)
    newton_tol: float | None = None
    max_iterations: int = 40
    ds0: float = 0.05
    ds_min: float = 1e-7
    ds_max: float = 0.5
    tol_deg: float = TOL_DEG
    c_switch_factor: float = 0.1
    levels: tuple[str, ...] = field(default=("full",))

    def __post_init__(self):
        if self.n < 3:
            raise ConfigurationError(f"grid.n must be >= 3, got {self.n}")
        if self.newton_tol is not None and not self.newton_tol > 0:
            raise ConfigurationError("solver.newton_tol must be positive")
        if self.max_iterations < 1:
            raise ConfigurationError("solver.max_iterations must be >= 1")
        if not 0 < self.ds_min <= self.ds0 <= self.ds_max:
            raise ConfigurationError("continuation needs 0 < ds_min <= ds0 <= ds_max")
        if not self.tol_deg > 0 or not self.c_switch_factor > 0:
            raise ConfigurationError("tol_deg and c_switch_factor must be positive")
        for lv in self.levels:
            if lv not in ("smoke", "full"):
                raise ConfigurationError(f"unknown verify level {lv!r}")

    # ------------------------------------------------------------- builders
    def problem(self) -> Problem:
        return make_problem(self.n, M=self.M, kappa=self.kappa, p=self.p, modes=self.h_modes)

    def solver(self, problem: Problem | None = None) -> SolverConfig:
        """Newton settings; without an explicit newton_tol, whole-branch runs get the
        grid-scaled tolerance and single solves the 1e-10 default."""
        extra = {"max_iterations": self.max_iterations, "tol_deg": self.tol_deg}
        if self.newton_tol is not None:
            return SolverConfig(newton_tol=self.newton_tol, **extra)
        if problem is not None:
            return branch_solver_config(problem, **extra)
        return SolverConfig(**extra)

    def step(self) -> StepConfig:
        return StepConfig(ds0=self.ds0, ds_min=self.ds_min, ds_max=self.ds_max,
                          c_switch_factor=self.c_switch_factor)

    # ------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        flat = asdict(self)
        flat["h_modes"] = [[k, b] for k, b in self.h_modes]
        flat["levels"] = list(self.levels)
        return {sec: {k: flat[k] for k in keys} for sec, keys in SECTIONS.items()}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        if not isinstance(data, dict):
            raise ConfigurationError("configuration must be a JSON object")
        flat = {}
        for sec, body in data.items():
            if sec not in SECTIONS:
                raise ConfigurationError(f"unknown configuration section {sec!r}")
            if not isinstance(body, dict):
                raise ConfigurationError(f"section {sec!r} must be an object")
            for k, v in body.items():
                if k not in SECTIONS[sec]:
                    raise ConfigurationError(f"unknown key {sec}.{k}")
                flat[k] = v
        return cls.from_flat(flat)

    @classmethod
    def from_flat(cls, flat: dict) -> "Config":
        kinds = {f.name: f for f in fields(cls)}
        kw = {}
        try:
            for k, v in flat.items():
                if k not in kinds:
                    raise ConfigurationError(f"unknown key {k}")
                if k == "h_modes":
                    kw[k] = tuple((int(m[0]), float(m[1])) for m in v)
                elif k == "levels":
                    kw[k] = (v,) if isinstance(v, str) else tuple(v)
                elif k in ("n", "p", "max_iterations"):
                    if isinstance(v, bool) or int(v) != v:
                        raise ConfigurationError(f"{k} must be an integer")
                    kw[k] = int(v)
                elif k == "newton_tol" and v is None:
                    kw[k] = None
                else:
                    kw[k] = float(v)
        except (TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"malformed value: {exc}") from exc
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"malformed config {path}: {exc}") from exc
        return cls.from_dict(data)

    def with_overrides(self, **kw) -> "Config":
        flat = {k: v for k, v in asdict(self).items()}
        flat.update({k: v for k, v in kw.items() if v is not None})
        return Config.from_flat(flat)
