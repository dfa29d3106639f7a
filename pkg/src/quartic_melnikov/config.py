"""Run-wide numeric configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

DEFAULT_DPS = int(os.environ.get("QUARTIC_MELNIKOV_DPS", "30"))


@dataclass(frozen=True)
class RunConfig:
    precision_digits: int = DEFAULT_DPS
    quad_tol: float = 1e-12
    endpoint_margin: float = 1e-12
    seed: int = 0
    output_dir: Path = field(default_factory=Path.cwd)
    max_direct_k: int = 5

    def __post_init__(self):
        if self.precision_digits < 15:
            raise ValueError("precision_digits must be >= 15")
        if self.quad_tol <= 0 or self.endpoint_margin < 0:
            raise ValueError("tolerances must be positive")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


DEFAULT = RunConfig()
