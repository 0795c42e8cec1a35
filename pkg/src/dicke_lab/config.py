"""Run configuration: JSON schema with strict unknown-key rejection.

Silent typos in physics parameters are the dominant failure mode of batch
runs, so every key is validated against an explicit schema and anything
unrecognized is an error carrying the full field path.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError
from .model import EFFICIENT, FOCK, DEFAULT_TOL_ENERGY, DEFAULT_TOL_TAIL, ModelParams

PIPELINES = ("spectrum", "chaos-map", "r-map", "peres", "eth-stats",
             "entropy", "tc-compare", "dos")

PARITY_CHOICES = {"positive": 1, "negative": -1, "both": None}


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _take(mapping: dict, path: str, allowed: dict):
    """Pop known keys with per-key validators; reject leftovers."""
    out = {}
    for key, (validator, default) in allowed.items():
        if key in mapping:
            out[key] = validator(mapping.pop(key), f"{path}.{key}")
        else:
            out[key] = default
    _expect(not mapping, path, f"unknown keys {sorted(mapping)}")
    return out


def _number(value, path, lo=None, hi=None):
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool),
            path, f"expected a number, got {value!r}")
    if lo is not None:
        _expect(value >= lo, path, f"must be >= {lo}")
    if hi is not None:
        _expect(value <= hi, path, f"must be <= {hi}")
    return float(value)


def _integer(value, path, lo=None):
    _expect(isinstance(value, int) and not isinstance(value, bool),
            path, f"expected an integer, got {value!r}")
    if lo is not None:
        _expect(value >= lo, path, f"must be >= {lo}")
    return int(value)


def _boolean(value, path):
    _expect(isinstance(value, bool), path, f"expected true/false, got {value!r}")
    return value


def _string(value, path, choices=None):
    _expect(isinstance(value, str), path, f"expected a string, got {value!r}")
    if choices is not None:
        _expect(value in choices, path, f"must be one of {sorted(choices)}")
    return value


def _grid(value, path):
    _expect(isinstance(value, list) and len(value) >= 1, path,
            "expected a nonempty list of numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


@dataclass
class RunConfig:
    """Validated configuration of one pipeline run; serializes losslessly."""

    pipeline: str
    model: ModelParams
    basis_kind: str = EFFICIENT
    boson_cutoff: Optional[int] = None
    parity: str = "positive"
    seed: int = 0
    output_dir: str = "runs"
    use_cache: bool = True
    options: dict = field(default_factory=dict)

    @property
    def parity_value(self) -> Optional[int]:
        return PARITY_CHOICES[self.parity]

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "model": {"omega": self.model.omega, "omega0": self.model.omega0,
                      "gamma": self.model.gamma, "j": self.model.j},
            "basis": {"kind": self.basis_kind, "boson_cutoff": self.boson_cutoff},
            "parity": self.parity,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "use_cache": self.use_cache,
            "options": dict(self.options),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


_OPTION_SCHEMAS = {
    "spectrum": {
        "tol_energy": (lambda v, p: _number(v, p, lo=0.0), DEFAULT_TOL_ENERGY),
        "tol_tail": (lambda v, p: _number(v, p, lo=0.0), DEFAULT_TOL_TAIL),
        "reference_factor": (lambda v, p: _number(v, p, lo=1.05), 1.2),
    },
    "chaos-map": {
        "epsilon_grid": (_grid, None),
        "gamma_grid": (_grid, None),
        "samples_per_cell": (lambda v, p: _integer(v, p, lo=1), 200),
        "lambda_cut": (lambda v, p: _number(v, p, lo=0.0), None),
        "t_final": (lambda v, p: _number(v, p, lo=10.0), 600.0),
    },
    "dos": {
        "epsilon_min": (_number, None),
        "epsilon_max": (_number, None),
        "n_points": (lambda v, p: _integer(v, p, lo=2), 200),
        "corrected": (_boolean, False),
    },
    "tc-compare": {
        "lambda_max": (lambda v, p: _integer(v, p, lo=0), 400),
        "tc_gamma": (lambda v, p: _number(v, p, lo=0.0), 2.0),
        "tol_energy": (lambda v, p: _number(v, p, lo=0.0), DEFAULT_TOL_ENERGY),
        "tol_tail": (lambda v, p: _number(v, p, lo=0.0), DEFAULT_TOL_TAIL),
        "reference_factor": (lambda v, p: _number(v, p, lo=1.05), 1.2),
    },
}
_OPTION_SCHEMAS["r-map"] = {
    **_OPTION_SCHEMAS["spectrum"],
    "gamma_grid": (_grid, None),
    "epsilon_grid": (_grid, None),
    "window_levels": (lambda v, p: _integer(v, p, lo=10), None),
}
_OPTION_SCHEMAS["peres"] = {
    **_OPTION_SCHEMAS["spectrum"],
    "scaled": (_boolean, True),
}
_OPTION_SCHEMAS["eth-stats"] = {
    **_OPTION_SCHEMAS["spectrum"],
    "window_count": (lambda v, p: _integer(v, p, lo=2), None),
    "epsilon_range": (_grid, None),
    "omega_max": (lambda v, p: _number(v, p, lo=0.0), None),
    "scaled": (_boolean, True),
}
_OPTION_SCHEMAS["entropy"] = {
    **_OPTION_SCHEMAS["spectrum"],
    "delta_window": (lambda v, p: _integer(v, p, lo=2), None),
}


def validate_config(raw: dict, path: str = "config") -> RunConfig:
    """Build a RunConfig from parsed JSON, rejecting anything off-schema."""
    _expect(isinstance(raw, dict), path, "top level must be an object")
    raw = dict(raw)
    pipeline = _string(raw.pop("pipeline", None), f"{path}.pipeline", PIPELINES)

    _expect("model" in raw, f"{path}.model", "is required")
    model_raw = raw.pop("model")
    _expect(isinstance(model_raw, dict), f"{path}.model", "must be an object")
    fields = _take(dict(model_raw), f"{path}.model", {
        "omega": (lambda v, p: _number(v, p), 1.0),
        "omega0": (lambda v, p: _number(v, p), 1.0),
        "gamma": (lambda v, p: _number(v, p, lo=0.0), 1.0),
        "j": (lambda v, p: _number(v, p), None),
    })
    _expect(fields["j"] is not None, f"{path}.model.j", "is required")
    try:
        params = ModelParams(fields["omega"], fields["omega0"],
                             fields["gamma"], fields["j"])
    except Exception as exc:
        raise ConfigError(f"{path}.model: {exc}") from exc

    basis_kind, cutoff = EFFICIENT, None
    if "basis" in raw:
        basis_raw = raw.pop("basis")
        _expect(isinstance(basis_raw, dict), f"{path}.basis", "must be an object")
        taken = _take(dict(basis_raw), f"{path}.basis", {
            "kind": (lambda v, p: _string(v, p, (FOCK, EFFICIENT)), EFFICIENT),
            "boson_cutoff": (lambda v, p: _integer(v, p, lo=0), None),
        })
        basis_kind, cutoff = taken["kind"], taken["boson_cutoff"]
    needs_basis = pipeline in ("spectrum", "r-map", "peres", "eth-stats",
                               "entropy", "tc-compare")
    _expect(cutoff is not None or not needs_basis,
            f"{path}.basis.boson_cutoff", f"is required for pipeline {pipeline!r}")

    parity = _string(raw.pop("parity", "positive"), f"{path}.parity",
                     tuple(PARITY_CHOICES))
    seed = _integer(raw.pop("seed", 0), f"{path}.seed", lo=0)
    output_dir = _string(raw.pop("output_dir", "runs"), f"{path}.output_dir")
    use_cache = _boolean(raw.pop("use_cache", True), f"{path}.use_cache")

    options_raw = raw.pop("options", {})
    _expect(isinstance(options_raw, dict), f"{path}.options", "must be an object")
    schema = _OPTION_SCHEMAS.get(pipeline, {})
    options = _take(dict(options_raw), f"{path}.options", schema)

    _expect(not raw, path, f"unknown keys {sorted(raw)}")
    if pipeline == "chaos-map":
        _expect(options["epsilon_grid"] is not None,
                f"{path}.options.epsilon_grid", "is required for chaos-map")
        _expect(options["gamma_grid"] is not None,
                f"{path}.options.gamma_grid", "is required for chaos-map")
    if pipeline == "r-map":
        _expect(options["gamma_grid"] is not None,
                f"{path}.options.gamma_grid", "is required for r-map")
        _expect(options["epsilon_grid"] is not None,
                f"{path}.options.epsilon_grid", "is required for r-map")
    if pipeline == "dos":
        _expect(options["epsilon_max"] is not None,
                f"{path}.options.epsilon_max", "is required for dos")
    return RunConfig(pipeline=pipeline, model=params, basis_kind=basis_kind,
                     boson_cutoff=cutoff, parity=parity, seed=seed,
                     output_dir=output_dir, use_cache=use_cache, options=options)


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return validate_config(raw)