"""Scenario configuration: JSON loading, schema validation and defaults."""

from __future__ import annotations

import copy
import hashlib
import json
from importlib import resources

import jsonschema

from .errors import ConfigInvalid

DEFAULTS = {
    "curve": {"params": {"rho": 1.0, "c": 1.0, "f": 5.0}},
    "grid": {"n": 256, "substeps": 8, "quad_n": 256, "sweep_n": 64, "segments": [100, 1000, 10000, 100000]},
    "initial": "N",
    "direction": "forward",
    "method": "path_ordered",
    "fermi": {"q_grid": [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]},
    "region": {"closure": "auto", "euler_chi": 1, "grid": 256},
    "interferometer": {"phi_in": 0.0, "phi_out": 3.141592653589793, "n_steps": 2000,
                       "include_dynamical_phase": False, "k": 0.0},
    "tolerances": {"ode": 1e-10, "gb_residual": 1e-6, "fermi_slope_min": 2.7, "fermi_slope_max": 3.3},
}


def schema():
    text = resources.files("dspin").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


def _key_path(err):
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        # the message lists the unexpected names; report the first one with its parent path
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        if extra:
            return f"{path}.{extra[0]}" if path else extra[0]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        if missing:
            return f"{path}.{missing[0]}" if path else missing[0]
    return path or "<root>"


def validate(cfg):
    v = jsonschema.Draft202012Validator(schema())
    errors = sorted(v.iter_errors(cfg), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        key = _key_path(err)
        raise ConfigInvalid(f"invalid config at {key}: {err.message}", key=key)
    return cfg


def parse(text):
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}", key="<root>") from exc
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object", key="<root>")
    return validate(cfg)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}", key="--config") from exc
    return parse(text)


def canonical(cfg):
    """Byte-stable serialisation: sorted keys, two-space indent, trailing newline."""
    return json.dumps(cfg, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_hash(cfg):
    return hashlib.sha256(canonical(cfg).encode("utf-8")).hexdigest()


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve(cfg):
    """The config with every default filled in."""
    return _merge(DEFAULTS, cfg)
