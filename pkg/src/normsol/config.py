"""Flat dotted-key run configuration shared by the CLI and config files.

A config file is JSON with flat dotted keys, e.g.

    {"nonlinearity.kind": "power_difference", "nonlinearity.p": 2.5,
     "dimension.N": 4, "dimension.M": 2, "sector": "x2",
     "grid.n": 128, "grid.L": 64.0, "rng_seed": 0}

Flags override file values; validation is aggregated so a bad config
reports every violation at once.
"""

from __future__ import annotations

import json
from typing import Any, Dict, List, Optional, Tuple

from pydantic import ValidationError

from .service.schemas import DimensionModel, FlowModel, GridModel, NonlinearityModel

__all__ = ["ConfigError", "load_config_file", "merge_config", "build_problem_parts"]

KNOWN_KEYS = {
    "nonlinearity.kind",
    "nonlinearity.p",
    "nonlinearity.q",
    "nonlinearity.truncate",
    "dimension.N",
    "dimension.M",
    "sector",
    "grid.n",
    "grid.L",
    "flow.dt0",
    "flow.backtrack",
    "flow.tol_grad",
    "flow.tol_energy",
    "flow.max_iter",
    "rng_seed",
    "threads",
}


class ConfigError(ValueError):
    """Aggregated configuration failure; message lists every violation."""

    def __init__(self, problems: List[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(problems))


def load_config_file(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a JSON object of dotted keys"])
    unknown = sorted(set(data) - KNOWN_KEYS)
    if unknown:
        raise ConfigError([f"{path}: unknown key {k!r}" for k in unknown])
    return dict(data)


def merge_config(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Overlay non-None override values on the base config."""
    out = dict(base)
    for k, v in overrides.items():
        if v is not None:
            out[k] = v
    return out


def _parse_grid_n(raw: Any) -> Any:
    if isinstance(raw, str):
        parts = [p for p in raw.replace(" ", "").split(",") if p]
        vals = [int(p) for p in parts]
        return vals[0] if len(vals) == 1 else vals
    return raw


def build_problem_parts(
    cfg: Dict[str, Any],
) -> Tuple[NonlinearityModel, DimensionModel, GridModel, FlowModel, int, int]:
    """Turn a flat config into validated model parts, aggregating all errors."""
    problems: List[str] = []

    def attempt(name, builder, default):
        try:
            return builder()
        except (ValidationError, ValueError) as exc:
            problems.append(f"{name}: {exc}")
            return default

    nl = attempt(
        "nonlinearity",
        lambda: NonlinearityModel(
            kind=cfg.get("nonlinearity.kind", "pure_power"),
            p=cfg.get("nonlinearity.p", 2.5),
            q=cfg.get("nonlinearity.q"),
            truncate=bool(cfg.get("nonlinearity.truncate", False)),
        ),
        None,
    )
    dim = attempt(
        "dimension",
        lambda: DimensionModel(
            N=cfg.get("dimension.N", 4),
            M=cfg.get("dimension.M", 2),
            sector=cfg.get("sector", "x2"),
        ),
        None,
    )
    grid = attempt(
        "grid",
        lambda: GridModel(
            n=_parse_grid_n(cfg.get("grid.n", 128)),
            L=cfg.get("grid.L", 64.0),
        ),
        None,
    )
    flow = attempt(
        "flow",
        lambda: FlowModel(
            dt0=cfg.get("flow.dt0"),
            backtrack=cfg.get("flow.backtrack", 0.5),
            tol_grad=cfg.get("flow.tol_grad"),
            tol_energy=cfg.get("flow.tol_energy", 1e-12),
            max_iter=int(cfg.get("flow.max_iter", 200_000)),
        ),
        None,
    )
    rng_seed = cfg.get("rng_seed", 0)
    threads = cfg.get("threads", 1)
    if not isinstance(rng_seed, int):
        problems.append(f"rng_seed must be an integer, got {rng_seed!r}")
    if not isinstance(threads, int) or threads < 1:
        problems.append(f"threads must be a positive integer, got {threads!r}")

    # cross-field checks only when the parts themselves built
    if nl is not None and dim is not None:
        try:
            nl.to_spec(dim.N)
        except ValueError as exc:
            problems.append(f"nonlinearity/dimension: {exc}")
    if dim is not None:
        try:
            dim.to_config()
        except ValueError as exc:
            problems.append(f"dimension: {exc}")

    if problems:
        raise ConfigError(problems)
    return nl, dim, grid, flow, int(rng_seed), int(threads)
