"""
Configuration helpers for swingbench.

Defaults live in a nested dictionary; user overrides (keyword arguments or a
YAML file) are merged on top of it section by section.  Every section is
exposed as a plain dictionary attribute, e.g. ``config.oracle["hinf_rel_tol"]``.
"""

from __future__ import annotations

import copy
import os
from pathlib import Path
from typing import Any, Dict, Mapping, MutableMapping

import yaml

from .exceptions import ValidationError

THREADS_ENV_VAR = "SWINGBENCH_THREADS"

DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
    "network": {
        "inertia": 1.0,
        "damping": 1.0,
        "kappa": 1.0,
        "connectivity_rtol": 1e-9,
        "random_retries": 200,
    },
    "oracle": {
        "hinf_rel_tol": 1e-9,
        "omega_xtol": 1e-10,
        "grid_points": 64,
        "grid_span": 100.0,
        "h2_rel_tol": 1e-10,
        "impulse_dt_factor": 0.05,
        "impulse_horizon_factor": 12.0,
        "tail_fraction": 1e-3,
    },
    "sweep": {
        "points": 200,
        "spacing": "log",
        "insert_kink": True,
        "progress": False,
    },
    "output": {
        "significant_digits": 17,
    },
    "runtime": {
        "threads": 0,
    },
}


class SwingBenchConfig:
    """
    Run configuration.

    Unknown sections and keys are kept as given so that scripts can carry their
    own settings in the same YAML file.
    """

    def __init__(self, **kwargs: Any) -> None:
        merged = _deep_update(copy.deepcopy(DEFAULT_CONFIG), kwargs)
        self._sections = list(merged)
        for key, value in merged.items():
            setattr(self, key, value)

    def to_dict(self) -> Dict[str, Any]:
        return {key: copy.deepcopy(getattr(self, key)) for key in self._sections}

    # --------------------------------------------------------------------- I/O
    @classmethod
    def from_yaml(cls, path: str | Path) -> "SwingBenchConfig":
        """Load a configuration from a YAML file."""
        with Path(path).expanduser().open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        return cls(**data)

    def to_yaml(self, path: str | Path) -> None:
        """Persist the configuration as YAML."""
        with Path(path).expanduser().open("w", encoding="utf-8") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=False)

    # ----------------------------------------------------------------- runtime
    def threads(self) -> int:
        """
        Worker count for sweeps.  ``SWINGBENCH_THREADS`` wins over the config
        value; 0 means one worker per CPU.
        """
        raw = os.environ.get(THREADS_ENV_VAR)
        try:
            value = int(raw) if raw not in (None, "") else int(self.runtime.get("threads", 0))
        except ValueError:
            raise ValidationError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
        if value <= 0:
            return os.cpu_count() or 1
        return value


def _deep_update(target: MutableMapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``override`` into ``target``."""

    for key, value in override.items():
        if (
            key in target
            and isinstance(target[key], MutableMapping)
            and isinstance(value, Mapping)
        ):
            target[key] = _deep_update(dict(target[key]), value)
        else:
            target[key] = value
    return dict(target)
