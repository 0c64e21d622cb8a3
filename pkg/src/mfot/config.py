"""Run configuration in TOML (JSON accepted with the same schema).

    [run]
    seed = 12345
    budget = 2000000
    jobs = 4
    output_dir = "out"
    formats = ["json", "csv", "svg"]

    [tolerances]
    feas = 1e-9

    [[experiment]]
    kind = "convergence"
    cost = "gaussian:s=0.7071067811865476"
    n_range = "2..10"
    measure = { uniform = [0.0, 1.0] }

Unknown keys at any level raise :class:`ConfigError`.
"""
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli
import tomli_w

from .experiments import DEFAULT_SEED, ExperimentSpec
from .lp import DEFAULT_TOL, Tolerances
from .mmot import DEFAULT_BUDGET

FORMATS = ("json", "csv", "svg")
_RUN_KEYS = {"seed", "budget", "jobs", "output_dir", "formats"}
_TOL_KEYS = {"feas", "gap", "farkas"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiments: list = field(default_factory=list)
    seed: int = DEFAULT_SEED
    budget: int = DEFAULT_BUDGET
    jobs: int = None
    output_dir: str = "out"
    formats: tuple = FORMATS
    tolerances: Tolerances = DEFAULT_TOL

    def to_dict(self):
        run = {"seed": self.seed, "budget": self.budget, "output_dir": self.output_dir,
               "formats": list(self.formats)}
        if self.jobs is not None:
            run["jobs"] = self.jobs
        tol = {k: getattr(self.tolerances, k) for k in sorted(_TOL_KEYS)}
        return {"run": run, "tolerances": tol, "experiment": [e.to_dict() for e in self.experiments]}

    def to_toml(self):
        return tomli_w.dumps(self.to_dict())

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"[{where}] must be a table")
    bad = sorted(set(d) - allowed)
    if bad:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(bad)}")


def config_from_dict(d):
    _check_keys(d, {"run", "tolerances", "experiment"}, "top level")
    run = d.get("run", {})
    _check_keys(run, _RUN_KEYS, "run")
    tol = d.get("tolerances", {})
    _check_keys(tol, _TOL_KEYS, "tolerances")
    exps = d.get("experiment", [])
    if isinstance(exps, dict):
        exps = [exps]
    specs = []
    for i, e in enumerate(exps):
        try:
            specs.append(ExperimentSpec.from_dict(dict(e)))
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"experiment #{i + 1}: {err}") from err
    formats = tuple(run.get("formats", FORMATS))
    bad = sorted(set(formats) - set(FORMATS))
    if bad:
        raise ConfigError(f"unknown output format(s): {', '.join(bad)}")
    try:
        tolerances = Tolerances(**{k: float(v) for k, v in tol.items()})
        cfg = RunConfig(
            experiments=specs,
            seed=int(run.get("seed", DEFAULT_SEED)),
            budget=int(run.get("budget", DEFAULT_BUDGET)),
            jobs=int(run["jobs"]) if "jobs" in run else None,
            output_dir=str(run.get("output_dir", "out")),
            formats=formats,
            tolerances=tolerances,
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err
    if cfg.budget <= 0 or (cfg.jobs is not None and cfg.jobs <= 0):
        raise ConfigError("budget and jobs must be positive")
    return cfg


def parse_config(text, fmt="toml"):
    try:
        d = json.loads(text) if fmt == "json" else tomli.loads(text)
    except (tomli.TOMLDecodeError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot parse {fmt} config: {err}") from err
    return config_from_dict(d)


def load_config(path):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {p}: {err.strerror}") from err
    return parse_config(text, "json" if p.suffix.lower() == ".json" else "toml")
