"""Run configuration: tunable pipeline parameters and their JSON schema.

A run config JSON file may set any of the keys below; command-line flags
override file values. Unknown keys are rejected so typos surface early.

    {
      "input": "frames/",            "format": "png-dir",
      "size": "352x288",             "config": "tex-cp",
      "qps": [16, 24, 32, 40],       "weights": "model.texw1",
      "seed": 0,                     "out": "results/",
      "video_id": "flower",
      "threshold": 0.5,
      "tau_split": 1.0,  "k_max": 4,  "min_blocks": 5,
      "fast_threshold": 20, "ransac_iters": 2000, "ransac_tol": 1.5
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineParams:
    """Analyzer / refinement / motion knobs with their default calibration."""

    threshold: float = 0.5
    tau_split: float = 1.0
    k_max: int = 4
    min_blocks: int = 5
    fast_threshold: int = 20
    ransac_iters: int = 2000
    ransac_tol: float = 1.5

    def validate(self) -> "PipelineParams":
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigError(f"threshold must be in [0,1], got {self.threshold}")
        if self.tau_split <= 0 or self.k_max < 1 or self.min_blocks < 1:
            raise ConfigError("tau_split, k_max and min_blocks must be positive")
        if self.fast_threshold <= 0 or self.ransac_iters < 1 or self.ransac_tol <= 0:
            raise ConfigError("motion parameters must be positive")
        return self


PARAM_KEYS = {f.name for f in fields(PipelineParams)}
RUN_KEYS = PARAM_KEYS | {"input", "format", "size", "config", "qps", "qp",
                         "weights", "seed", "out", "video_id"}


def load_run_config(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: run config must be a JSON object")
    unknown = set(data) - RUN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return data


def params_from_dict(data: dict) -> PipelineParams:
    kwargs = {k: v for k, v in data.items() if k in PARAM_KEYS and v is not None}
    return PipelineParams(**kwargs).validate()
