"""Line-oriented ``key = value`` run configuration.

Sections are spelled as dotted prefixes (``sampling.fraction = 1/50``).
Every key has a command-line override; the defaults reproduce the
reference configuration: 1/50 under-sampling, dedup after sampling,
selection threshold 1e-5 with a seed-0 selection model, the standard
6+4 model stages with k=3, and one master seed that every other seed
derives from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from .errors import UsageError
from .rng import derive_seed
from .sampling import SamplingConfig

_KNOWN_KEYS = {
    "corpus",
    "truth",
    "schema",
    "pipeline",
    "output",
    "master_seed",
    "malformed",
    "sampling.fraction",
    "sampling.window",
    "sampling.seed",
    "sampling.dedup",
    "sampling.dedup_order",
    "selection.threshold",
    "selection.seed",
    "stack.k",
    "stack.refit_full",
}

_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"0", "false", "no", "off"}


@dataclass
class RunConfig:
    corpus: Optional[str] = None
    truth: Optional[str] = None
    schema: Optional[str] = None
    pipeline: Optional[str] = None
    output: Optional[str] = None
    master_seed: int = 0
    malformed: str = "skip"
    sampling_fraction: Fraction = Fraction(1, 50)
    sampling_window: Optional[int] = None
    sampling_seed: Optional[int] = None  # None -> derived from master_seed
    dedup: bool = True
    dedup_order: str = "after"
    selection_threshold: float = 1e-5
    selection_seed: int = 0
    stack_k: int = 3
    refit_full: bool = False

    def __post_init__(self):
        if self.malformed not in ("skip", "abort"):
            raise UsageError(f"malformed policy must be skip|abort, got {self.malformed!r}")
        if self.dedup_order not in ("after", "before"):
            raise UsageError(f"dedup order must be after|before, got {self.dedup_order!r}")
        if self.selection_threshold < 0:
            raise UsageError("selection.threshold must be >= 0")
        if self.stack_k < 2:
            raise UsageError("stack.k must be >= 2")

    def sampling_config(self) -> SamplingConfig:
        seed = self.sampling_seed
        if seed is None:
            seed = derive_seed(self.master_seed, "sampling", 0)
        return SamplingConfig(
            fraction=self.sampling_fraction, window=self.sampling_window, seed=seed
        )

    def stack_seed(self) -> int:
        return derive_seed(self.master_seed, "stack", 0)

    def schema_path(self) -> str:
        if self.schema is not None:
            return self.schema
        if self.pipeline is None:
            raise UsageError("no schema or pipeline path configured")
        return self.pipeline + ".schema"


def parse_config_file(path: Union[str, Path]) -> dict[str, str]:
    """Read ``key = value`` pairs; '#' starts a comment, blanks ignored."""
    pairs: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{line_no}: expected key = value, got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _KNOWN_KEYS:
                raise UsageError(f"{path}:{line_no}: unknown config key {key!r}")
            pairs[key] = value
    return pairs


def _parse_bool(key: str, value: str) -> bool:
    low = value.lower()
    if low in _TRUTHY:
        return True
    if low in _FALSY:
        return False
    raise UsageError(f"config {key}: expected a boolean, got {value!r}")


def build_run_config(pairs: dict[str, str]) -> RunConfig:
    """Typed RunConfig from raw string pairs (file values + CLI overrides)."""
    kwargs: dict[str, object] = {}
    for key, value in pairs.items():
        if key in ("corpus", "truth", "schema", "pipeline", "output"):
            kwargs[key] = value
        elif key == "master_seed":
            kwargs["master_seed"] = int(value)
        elif key == "malformed":
            kwargs["malformed"] = value
        elif key == "sampling.fraction":
            try:
                kwargs["sampling_fraction"] = Fraction(value)
            except (ValueError, ZeroDivisionError) as exc:
                raise UsageError(f"bad sampling.fraction {value!r}") from exc
        elif key == "sampling.window":
            kwargs["sampling_window"] = None if value == "all" else int(value)
        elif key == "sampling.seed":
            kwargs["sampling_seed"] = int(value)
        elif key == "sampling.dedup":
            kwargs["dedup"] = _parse_bool(key, value)
        elif key == "sampling.dedup_order":
            kwargs["dedup_order"] = value
        elif key == "selection.threshold":
            kwargs["selection_threshold"] = float(value)
        elif key == "selection.seed":
            kwargs["selection_seed"] = int(value)
        elif key == "stack.k":
            kwargs["stack_k"] = int(value)
        elif key == "stack.refit_full":
            kwargs["refit_full"] = _parse_bool(key, value)
        else:  # pragma: no cover - guarded by _KNOWN_KEYS
            raise UsageError(f"unknown config key {key!r}")
    return RunConfig(**kwargs)


def load_run_config(
    path: Optional[Union[str, Path]], overrides: Optional[dict[str, str]] = None
) -> RunConfig:
    pairs = parse_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in _KNOWN_KEYS:
                raise UsageError(f"unknown config key {key!r}")
            pairs[key] = value
    return build_run_config(pairs)
