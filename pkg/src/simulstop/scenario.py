"""Scenario files: a small key-table text format, with JSON as an alternative.

A scenario file declares exactly one model::

    model bivariate            # or gumbel, system
    alpha1 constant 1.0
    alpha2 proportional alpha3 2.0
    alpha3 shape-table rates.csv
    gumbel_delta 1.0           # gumbel model only
    path state.csv             # fixed state path (CSV: time,value)
    ou 1.0 0.0 0.5 1.0 40.0 0.01   # theta mu sigma x0 horizon dt
    ensemble 256               # number of OU paths for the outer expectation
    seed 42
    n 3                        # system model only
    shock 1,3 constant 2.0     # system: members are 1-indexed, ascending
    pattern multiplicative 1.0 # system: rate pattern instead of explicit shocks

Unknown keys are rejected.  `#` starts a comment.  Shape tables are
two-column CSVs (state,rate) interpolated linearly and clamped at the ends.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bivariate import BivariateScenario
from .errors import ConfigError
from .gumbel import GumbelScenario
from .intensity import IntensityModel, StatePath, simulate_ou_path
from .montecarlo import RngSpec, _substream_key
from .multivariate import ShockSystem, SubsetPattern, pattern_system

__all__ = ["ScenarioSpec", "parse_scenario", "parse_scenario_json", "load_scenario"]

_MODELS = ("bivariate", "gumbel", "system")
_ALPHA_KEYS = ("alpha1", "alpha2", "alpha3")


@dataclass
class ScenarioSpec:
    """Parsed, pre-build scenario description (round-trips through text/JSON)."""

    model: str
    alphas: dict = field(default_factory=dict)   # name -> ("constant", r) | ("proportional", ref, f) | ("shape-table", file)
    delta: Optional[float] = None
    n: Optional[int] = None
    shocks: list = field(default_factory=list)   # [(members tuple, spec tuple)]
    pattern: Optional[tuple] = None              # (kind, base_rate)
    path_file: Optional[str] = None
    ou: Optional[tuple] = None                   # (theta, mu, sigma, x0, horizon, dt)
    ensemble: Optional[int] = None
    seed: Optional[int] = None
    base_dir: str = "."

    # -- validation --------------------------------------------------------

    def validate(self) -> "ScenarioSpec":
        if self.model not in _MODELS:
            raise ConfigError(f"model must be one of {_MODELS}, got {self.model!r}")
        if self.model in ("bivariate", "gumbel"):
            missing = [k for k in _ALPHA_KEYS if k not in self.alphas]
            if missing:
                raise ConfigError(f"missing intensity keys: {missing}")
            if self.shocks or self.n is not None or self.pattern:
                raise ConfigError("shock/n/pattern keys are only valid for model system")
            for name, spec in self.alphas.items():
                if spec[0] == "proportional":
                    ref = spec[1]
                    if ref not in self.alphas:
                        raise ConfigError(f"{name} references unknown model {ref!r}")
                    if self.alphas[ref][0] == "proportional":
                        raise ConfigError("proportional chains are not allowed in files")
        if self.model != "gumbel" and self.delta is not None:
            raise ConfigError("gumbel_delta is only valid for model gumbel")
        if self.model == "system":
            if self.alphas:
                raise ConfigError("alpha keys are only valid for pair models")
            if self.n is None:
                raise ConfigError("system model requires n")
            if bool(self.shocks) == bool(self.pattern):
                raise ConfigError("system model needs exactly one of: shock entries, pattern")
        if self.path_file and self.ou:
            raise ConfigError("give either a path file or ou parameters, not both")
        if self.ensemble is not None:
            if self.ou is None:
                raise ConfigError("ensemble requires ou parameters")
            if self.ensemble < 2:
                raise ConfigError("ensemble must be at least 2")
        if self.ou is not None and self.seed is None:
            raise ConfigError("ou paths require a seed key")
        return self

    # -- building ----------------------------------------------------------

    def _resolve_file(self, name: str) -> str:
        return name if os.path.isabs(name) else os.path.join(self.base_dir, name)

    def _build_model(self, spec: tuple, alphas_built: dict) -> IntensityModel:
        kind = spec[0]
        if kind == "constant":
            return IntensityModel.constant(spec[1])
        if kind == "proportional":
            return IntensityModel.proportional(alphas_built[spec[1]], spec[2])
        if kind == "shape-table":
            table = self._resolve_file(spec[1])
            states, rates = _read_shape_table(table)
            return IntensityModel.path_driven(
                lambda x, _s=states, _r=rates: float(np.interp(x, _s, _r))
            )
        raise ConfigError(f"unknown intensity kind {kind!r}")

    def _build_alphas(self) -> dict:
        built: dict = {}
        for name, spec in self.alphas.items():
            if spec[0] != "proportional":
                built[name] = self._build_model(spec, built)
        for name, spec in self.alphas.items():
            if spec[0] == "proportional":
                built[name] = self._build_model(spec, built)
        return built

    def _build_paths(self) -> tuple:
        """(fixed_path, ensemble_list) per the path/ou/ensemble keys."""
        if self.path_file:
            return StatePath.from_csv(self._resolve_file(self.path_file)), None
        if self.ou:
            theta, mu, sigma, x0, horizon, dt = self.ou
            if self.ensemble:
                paths = [
                    simulate_ou_path(
                        theta, mu, sigma, x0, horizon, dt,
                        seed=_substream_key(RngSpec(self.seed, i)),
                    )
                    for i in range(self.ensemble)
                ]
                return None, paths
            return simulate_ou_path(theta, mu, sigma, x0, horizon, dt, seed=self.seed), None
        return None, None

    def build(self):
        """Materialize the scenario object this spec describes."""
        self.validate()
        if self.model == "system":
            if self.pattern:
                kind, rate = self.pattern
                system = pattern_system(self.n, SubsetPattern(kind, rate))
            else:
                shocks = {}
                built: dict = {}
                for members, spec in self.shocks:
                    shocks[members] = self._build_model(spec, built)
                path, ensemble = self._build_paths()
                return ShockSystem(n=self.n, shocks=shocks, path=path, path_ensemble=ensemble)
            return system
        path, ensemble = self._build_paths()
        alphas = self._build_alphas()
        base = BivariateScenario(
            alpha1=alphas["alpha1"],
            alpha2=alphas["alpha2"],
            alpha3=alphas["alpha3"],
            path=path,
            path_ensemble=ensemble,
        )
        if self.model == "bivariate":
            return base
        return GumbelScenario(base=base, delta=self.delta if self.delta is not None else 0.0)

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        lines = [f"model {self.model}"]
        for name in _ALPHA_KEYS:
            if name in self.alphas:
                lines.append(f"{name} {' '.join(_fmt(v) for v in self.alphas[name])}")
        if self.delta is not None:
            lines.append(f"gumbel_delta {_fmt(self.delta)}")
        if self.n is not None:
            lines.append(f"n {self.n}")
        for members, spec in self.shocks:
            member_str = ",".join(str(m) for m in members)
            lines.append(f"shock {member_str} {' '.join(_fmt(v) for v in spec)}")
        if self.pattern:
            lines.append(f"pattern {self.pattern[0]} {_fmt(self.pattern[1])}")
        if self.path_file:
            lines.append(f"path {self.path_file}")
        if self.ou:
            lines.append("ou " + " ".join(_fmt(v) for v in self.ou))
        if self.ensemble is not None:
            lines.append(f"ensemble {self.ensemble}")
        if self.seed is not None:
            lines.append(f"seed {self.seed}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _read_shape_table(path: str):
    import csv as _csv

    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["state", "rate"]:
            raise ConfigError(f"{path}: expected header 'state,rate'")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    if len(rows) < 2:
        raise ConfigError(f"{path}: need at least two table rows")
    states = np.array([r[0] for r in rows])
    rates = np.array([r[1] for r in rows])
    if not np.all(np.diff(states) > 0):
        raise ConfigError(f"{path}: states must increase strictly")
    if np.any(rates < 0):
        raise ConfigError(f"{path}: rates must be nonnegative")
    return states, rates


def _parse_alpha_spec(parts: list, where: str) -> tuple:
    if not parts:
        raise ConfigError(f"{where}: missing intensity kind")
    kind = parts[0]
    if kind == "constant":
        if len(parts) != 2:
            raise ConfigError(f"{where}: constant takes one rate")
        return ("constant", float(parts[1]))
    if kind == "proportional":
        if len(parts) != 3:
            raise ConfigError(f"{where}: proportional takes a reference and a factor")
        return ("proportional", parts[1], float(parts[2]))
    if kind == "shape-table":
        if len(parts) != 2:
            raise ConfigError(f"{where}: shape-table takes a file name")
        return ("shape-table", parts[1])
    raise ConfigError(f"{where}: unknown intensity kind {kind!r}")


def parse_scenario(text: str, base_dir: str = ".") -> ScenarioSpec:
    """Parse the key-table format; unknown or duplicate keys are rejected."""
    spec = ScenarioSpec(model="", base_dir=base_dir)
    seen: set = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        where = f"line {lineno}"
        if key != "shock" and key in seen:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        seen.add(key)
        if key == "model":
            spec.model = _one(args, where, str)
        elif key in _ALPHA_KEYS:
            spec.alphas[key] = _parse_alpha_spec(args, where)
        elif key == "gumbel_delta":
            spec.delta = _one(args, where, float)
        elif key == "n":
            spec.n = _one(args, where, int)
        elif key == "shock":
            if len(args) < 2:
                raise ConfigError(f"{where}: shock needs members and an intensity")
            members = tuple(int(m) for m in args[0].split(","))
            if list(members) != sorted(set(members)):
                raise ConfigError(f"{where}: members must be ascending and unique")
            spec.shocks.append((members, _parse_alpha_spec(args[1:], where)))
        elif key == "pattern":
            if len(args) != 2:
                raise ConfigError(f"{where}: pattern takes kind and base rate")
            spec.pattern = (args[0], float(args[1]))
        elif key == "path":
            spec.path_file = _one(args, where, str)
        elif key == "ou":
            if len(args) != 6:
                raise ConfigError(f"{where}: ou takes theta mu sigma x0 horizon dt")
            spec.ou = tuple(float(a) for a in args)
        elif key == "ensemble":
            spec.ensemble = _one(args, where, int)
        elif key == "seed":
            spec.seed = _one(args, where, int)
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")
    if not spec.model:
        raise ConfigError("scenario is missing the model key")
    return spec.validate()


def _one(args: list, where: str, cast):
    if len(args) != 1:
        raise ConfigError(f"{where}: expected exactly one value")
    try:
        return cast(args[0])
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_scenario_json(text: str, base_dir: str = ".") -> ScenarioSpec:
    """JSON alternative with the same vocabulary as the text format."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON scenario: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("JSON scenario must be an object")
    spec = ScenarioSpec(model="", base_dir=base_dir)
    for key, value in data.items():
        if key == "model":
            spec.model = str(value)
        elif key in _ALPHA_KEYS:
            spec.alphas[key] = _alpha_from_json(key, value)
        elif key == "gumbel_delta":
            spec.delta = float(value)
        elif key == "n":
            spec.n = int(value)
        elif key == "shocks":
            for entry in value:
                members = tuple(int(m) for m in entry["members"])
                spec.shocks.append((members, _alpha_from_json("shock", entry)))
        elif key == "pattern":
            spec.pattern = (str(value["kind"]), float(value.get("base_rate", 1.0)))
        elif key == "path":
            spec.path_file = str(value)
        elif key == "ou":
            spec.ou = tuple(
                float(value[k]) for k in ("theta", "mu", "sigma", "x0", "horizon", "dt")
            )
        elif key == "ensemble":
            spec.ensemble = int(value)
        elif key == "seed":
            spec.seed = int(value)
        else:
            raise ConfigError(f"unknown key {key!r}")
    if not spec.model:
        raise ConfigError("scenario is missing the model key")
    return spec.validate()


def _alpha_from_json(name: str, obj) -> tuple:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{name}: expected an object with a kind")
    kind = obj["kind"]
    if kind == "constant":
        return ("constant", float(obj["rate"]))
    if kind == "proportional":
        return ("proportional", str(obj["base"]), float(obj["factor"]))
    if kind == "shape-table":
        return ("shape-table", str(obj["table"]))
    raise ConfigError(f"{name}: unknown intensity kind {kind!r}")


def load_scenario(path: str, as_json: bool = False) -> ScenarioSpec:
    with open(path) as fh:
        text = fh.read()
    base_dir = os.path.dirname(os.path.abspath(path))
    if as_json or path.endswith(".json"):
        return parse_scenario_json(text, base_dir)
    return parse_scenario(text, base_dir)
