"""Run configuration: a nested YAML file with strict key checking.

Top-level blocks are ``model``, ``drift``, ``jumps``, ``preset``, ``command``
and ``output``. ``preset`` replaces the first three. Relative file names are
resolved against the directory of the config file. Every error names the
offending key.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .action import DiscretePath
from .errors import ConfigError, InvalidArgument
from .io import read_path_csv
from .levy import JumpSpec, TailRule, TemperedStable, TwoSidedTemperedStable
from .pathopt import OptimizerConfig
from .presets import cosine_weights, example41
from .spectral import (
    DiagonalLinearDrift,
    DriftSpec,
    NonlocalDrift,
    ScalarDrift,
    SpectralModel,
    ZeroDrift,
    scalar_function,
)

__all__ = ["RunConfig", "load_config", "parse_config", "COMMANDS"]

COMMANDS = ("check", "eta", "eval", "minimize", "simulate", "tube-ratio")

_COMMAND_KEYS = {
    "check": {"probe_radius"},
    "eta": set(),
    "eval": {"path", "form", "eta"},
    "minimize": {"start", "target", "steps", "optimizer", "initial_path", "eta"},
    "simulate": {"x", "steps", "samples", "seed", "include_jumps", "cutoff", "write_paths"},
    "tube-ratio": {"epsilon", "samples", "seed", "path_a", "path_b", "include_jumps", "cutoff", "eta"},
}


@dataclass
class RunConfig:
    model: SpectralModel
    drift: DriftSpec
    jumps: JumpSpec
    quad_tol: float
    command: str
    params: dict
    out_dir: Path
    formats: tuple = ("jsonl", "csv")
    source: Optional[Path] = None


def _keys(block, allowed, where):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected a mapping")
    extra = set(block) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(map(str, extra)))}")
    return block


def _float(v, where, positive=False):
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if positive and not x > 0:
        raise ConfigError(f"{where}: must be positive")
    return x


def _int(v, where, minimum=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}")
    return int(v)


def _vector(v, where, M=None):
    arr = np.atleast_1d(np.asarray(v, dtype=object))
    try:
        arr = arr.astype(float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number or list of numbers")
    if M is not None:
        if arr.size == 1:
            arr = np.full(M, arr[0])
        elif arr.size != M:
            raise ConfigError(f"{where}: expected {M} entries, got {arr.size}")
    return arr


def _model(block):
    _keys(block, {"truncation", "eigenvalues", "eigenvalue_rule", "diffusion", "horizon"}, "model")
    if "truncation" not in block:
        raise ConfigError("model.truncation: required")
    M = _int(block["truncation"], "model.truncation", 1)
    if ("eigenvalues" in block) == ("eigenvalue_rule" in block):
        raise ConfigError("model: give exactly one of eigenvalues, eigenvalue_rule")
    if "eigenvalues" in block:
        lam = _vector(block["eigenvalues"], "model.eigenvalues")
        if lam.size != M:
            raise ConfigError(f"model.eigenvalues: expected {M} entries, got {lam.size}")
    else:
        rule = _keys(block["eigenvalue_rule"], {"kind", "scale", "exponent"}, "model.eigenvalue_rule")
        kind = rule.get("kind")
        j = np.arange(1, M + 1, dtype=float)
        if kind == "neumann-laplacian":
            lam = (2.0 * np.pi * j) ** 2
        elif kind == "power":
            lam = _float(rule.get("scale", 1.0), "model.eigenvalue_rule.scale") * j ** _float(
                rule.get("exponent", 2.0), "model.eigenvalue_rule.exponent"
            )
        else:
            raise ConfigError("model.eigenvalue_rule.kind: expected neumann-laplacian or power")
    b = _vector(block.get("diffusion", 1.0), "model.diffusion", M)
    T = _float(block.get("horizon", 1.0), "model.horizon", positive=True)
    try:
        return SpectralModel(lam, b, T)
    except InvalidArgument as e:
        raise ConfigError(f"model: {e}")


def _scalar_fn(block, where):
    return scalar_function(
        block.get("function", "zero"),
        _float(block.get("scale", 1.0), f"{where}.scale"),
        block.get("constant"),
    )


def _drift(block, M):
    _keys(block, {"kind", "coefficients", "function", "scale", "constant", "weights"}, "drift")
    kind = block.get("kind", "zero")
    try:
        if kind == "zero":
            return ZeroDrift()
        if kind == "diagonal-linear":
            if "coefficients" not in block:
                raise ConfigError("drift.coefficients: required for diagonal-linear")
            return DiagonalLinearDrift(_vector(block["coefficients"], "drift.coefficients", M))
        if kind == "scalar":
            return ScalarDrift(_scalar_fn(block, "drift"))
        if kind == "nonlocal-example41":
            w = cosine_weights(M) if "weights" not in block else _vector(block["weights"], "drift.weights", M)
            return NonlocalDrift(_scalar_fn(block, "drift"), w)
    except InvalidArgument as e:
        raise ConfigError(f"drift: {e}")
    raise ConfigError(f"drift.kind: unknown kind {kind!r}")


def _side(block, where):
    _keys(block, {"c", "beta", "alpha"}, where)
    try:
        return TemperedStable(
            _float(block.get("c"), f"{where}.c"),
            _float(block.get("beta"), f"{where}.beta"),
            _float(block.get("alpha"), f"{where}.alpha"),
        )
    except InvalidArgument as e:
        raise ConfigError(f"{where}: {e}")


def _tail(v):
    if v is None or v == "finite":
        return TailRule("finite")
    if v == "constant":
        return TailRule("constant")
    if isinstance(v, dict) and set(v) == {"geometric"}:
        try:
            return TailRule("geometric", _float(v["geometric"], "jumps.tail.geometric"))
        except InvalidArgument as e:
            raise ConfigError(f"jumps.tail: {e}")
    raise ConfigError("jumps.tail: expected finite, constant or {geometric: ratio}")


def _jumps(block):
    if block is None:
        return JumpSpec(()), 1e-10
    _keys(block, {"modes", "tail", "tol"}, "jumps")
    modes = []
    for j, m in enumerate(block.get("modes", []) or [], 1):
        where = f"jumps.modes[{j}]"
        if m is None or m == "none":
            modes.append(None)
            continue
        _keys(m, {"one-sided", "two-sided", "symmetric"}, where)
        if len(m) != 1:
            raise ConfigError(f"{where}: give exactly one measure type")
        (kind, spec), = m.items()
        if kind == "one-sided":
            modes.append(_side(spec, f"{where}.one-sided"))
        elif kind == "symmetric":
            s = _side(spec, f"{where}.symmetric")
            modes.append(TwoSidedTemperedStable(s, s))
        else:
            _keys(spec, {"minus", "plus"}, f"{where}.two-sided")
            modes.append(
                TwoSidedTemperedStable(
                    _side(spec.get("minus", {}), f"{where}.two-sided.minus"),
                    _side(spec.get("plus", {}), f"{where}.two-sided.plus"),
                )
            )
    tol = _float(block.get("tol", 1e-10), "jumps.tol", positive=True)
    return JumpSpec(tuple(modes), _tail(block.get("tail"))), tol


def _preset(block):
    _keys(block, {"name", "truncation", "function", "scale", "c", "beta", "alpha"}, "preset")
    name = block.get("name")
    M = _int(block.get("truncation", 1), "preset.truncation", 1)
    if name == "ou":
        return SpectralModel(np.ones(M), 1.0), ZeroDrift(), JumpSpec(())
    if name == "example41":
        f = scalar_function(block.get("function", "sin"), _float(block.get("scale", 1.0), "preset.scale"))
        try:
            ex = example41(M, f, block.get("c", 1.0), block.get("beta", 1.0), block.get("alpha", 0.5))
        except (InvalidArgument, ValueError) as e:
            raise ConfigError(f"preset: {e}")
        return ex.model, ex.drift, JumpSpec(ex.jumps.modes, TailRule("finite"))
    raise ConfigError(f"preset.name: unknown preset {name!r} (known: ou, example41)")


def path_spec(v, where, base: Path, M, T):
    """A path is a CSV file name or ``{kind: linear, start, target, steps}``."""
    if isinstance(v, str):
        p = (base / v) if not Path(v).is_absolute() else Path(v)
        if not p.is_file():
            raise ConfigError(f"{where}: file {p} does not exist")
        return p
    _keys(v, {"kind", "start", "target", "steps"}, where)
    if v.get("kind", "linear") != "linear":
        raise ConfigError(f"{where}.kind: only 'linear' is supported")
    for k in ("start", "target", "steps"):
        if k not in v:
            raise ConfigError(f"{where}.{k}: required")
    return DiscretePath.linear(
        _vector(v["start"], f"{where}.start", M),
        _vector(v["target"], f"{where}.target", M),
        _int(v["steps"], f"{where}.steps", 2),
        T,
    )


def load_path(spec, where):
    if isinstance(spec, DiscretePath):
        return spec
    try:
        return read_path_csv(spec)
    except InvalidArgument as e:
        raise ConfigError(f"{where}: {e}")


def _eta_spec(v, where, M):
    if v is None or v == "auto":
        return "auto"
    if v == "zero":
        return np.zeros(M)
    return _vector(v, where, M)


def _command(block, base, M, T):
    if not isinstance(block, dict):
        raise ConfigError("command: expected a mapping")
    name = block.get("name")
    if name not in COMMANDS:
        raise ConfigError(f"command.name: expected one of {', '.join(COMMANDS)}, got {name!r}")
    _keys(block, {"name"} | _COMMAND_KEYS[name], "command")
    c = {k: v for k, v in block.items() if k != "name"}
    p: dict[str, Any] = {}
    if name == "check":
        p["probe_radius"] = _float(c.get("probe_radius", 2.0), "command.probe_radius", positive=True)
    elif name == "eval":
        if "path" not in c:
            raise ConfigError("command.path: required")
        p["path"] = path_spec(c["path"], "command.path", base, M, T)
        p["form"] = c.get("form", "completed-square")
        if p["form"] not in ("completed-square", "cross-term"):
            raise ConfigError("command.form: expected completed-square or cross-term")
        p["eta"] = _eta_spec(c.get("eta"), "command.eta", M)
    elif name == "minimize":
        for k in ("start", "target"):
            if k not in c:
                raise ConfigError(f"command.{k}: required")
            p[k] = _vector(c[k], f"command.{k}", M)
        p["steps"] = _int(c.get("steps", 64), "command.steps", 2)
        opt = _keys(
            c.get("optimizer", {}) or {},
            {"max_iters", "grad_tol", "method", "memory", "shrink", "sufficient_decrease"},
            "command.optimizer",
        )
        if "initial_path" in c:
            p["initial_path"] = path_spec(c["initial_path"], "command.initial_path", base, M, T)
            opt = dict(opt, initializer="supplied")
        try:
            p["optimizer"] = OptimizerConfig(**opt)
        except (InvalidArgument, TypeError) as e:
            raise ConfigError(f"command.optimizer: {e}")
        p["eta"] = _eta_spec(c.get("eta"), "command.eta", M)
    elif name == "simulate":
        p["x"] = _vector(c.get("x", 0.0), "command.x", M)
        p["steps"] = _int(c.get("steps", 100), "command.steps", 1)
        p["samples"] = _int(c.get("samples", 1000), "command.samples", 1)
        p["seed"] = _int(c.get("seed", 0), "command.seed", 0)
        p["include_jumps"] = bool(c.get("include_jumps", False))
        p["cutoff"] = _float(c.get("cutoff", 0.5), "command.cutoff", positive=True)
        p["write_paths"] = _int(c.get("write_paths", 1), "command.write_paths", 0)
    elif name == "tube-ratio":
        p["epsilon"] = _float(c.get("epsilon", 0.1), "command.epsilon", positive=True)
        p["samples"] = _int(c.get("samples", 100000), "command.samples", 1)
        p["seed"] = _int(c.get("seed", 0), "command.seed", 0)
        for k in ("path_a", "path_b"):
            if k not in c:
                raise ConfigError(f"command.{k}: required")
            p[k] = path_spec(c[k], f"command.{k}", base, M, T)
        p["include_jumps"] = bool(c.get("include_jumps", False))
        p["cutoff"] = _float(c.get("cutoff", 0.5), "command.cutoff", positive=True)
        p["eta"] = _eta_spec(c.get("eta"), "command.eta", M)
    return name, p


def parse_config(data: dict, base: Path = Path("."), source=None) -> RunConfig:
    _keys(data, {"model", "drift", "jumps", "preset", "command", "output"}, "config")
    if "command" not in data:
        raise ConfigError("command: exactly one command block is required")
    if "preset" in data:
        clash = {"model", "drift", "jumps"} & set(data)
        if clash:
            raise ConfigError(f"preset: cannot be combined with {', '.join(sorted(clash))}")
        model, drift, jumps = _preset(data["preset"])
        tol = 1e-10
    else:
        if "model" not in data:
            raise ConfigError("model: required (or give a preset)")
        model = _model(data["model"])
        drift = _drift(data.get("drift", {}) or {}, model.truncation)
        jumps, tol = _jumps(data.get("jumps"))
        if jumps.num_modes > model.truncation:
            raise ConfigError(
                f"jumps.modes: {jumps.num_modes} modes listed but model.truncation is {model.truncation}"
            )
    name, params = _command(data["command"], base, model.truncation, model.time_horizon)
    out = _keys(data.get("output", {}) or {}, {"directory", "formats"}, "output")
    formats = tuple(out.get("formats", ("jsonl", "csv")))
    bad = set(formats) - {"jsonl", "csv"}
    if bad:
        raise ConfigError(f"output.formats: unknown format(s) {', '.join(sorted(bad))}")
    out_dir = Path(out.get("directory", "out"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    return RunConfig(model, drift, jumps, tol, name, params, out_dir, formats, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"--config: file {path} does not exist")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML ({e})")
    return parse_config(data or {}, path.parent, path)
