"""Analytic FLOP / traffic model and roofline classification of one linear layer."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .formats import Method, WorkloadSpec
from .tensorbase import DEFAULT_ELEM_BYTES


class Bound(str, enum.Enum):
    COMPUTE = "ComputeBound"
    MEMORY = "MemoryBound"


@dataclass(frozen=True)
class HardwareProfile:
    name: str
    peak_flops: float      # operations per second
    mem_bandwidth: float   # bytes per second

    def __post_init__(self):
        if not (self.peak_flops > 0 and self.mem_bandwidth > 0):
            raise ConfigError(f"profile {self.name!r}: peak and bandwidth must be positive")

    @property
    def breakpoint(self) -> float:
        return self.peak_flops / self.mem_bandwidth


@dataclass(frozen=True)
class CostReport:
    spec: WorkloadSpec
    flops: int
    bytes: int
    alpha: float
    bound: Bound
    est_runtime_s: float
    elem_bytes: int = DEFAULT_ELEM_BYTES


def model_flops(spec: WorkloadSpec) -> int:
    n, i, o, r, b = spec.shape
    if spec.method is Method.DENSE:
        return 2 * n * i * o
    if spec.method in (Method.LOWRANK, Method.MONARCH):
        return 2 * n * r * (i + o)
    return 2 * n * r * (i + o + b * b)


def intermediate_elements(spec: WorkloadSpec) -> int:
    """Elements written and re-read between stages, per the analytic model."""
    n, _, _, r, b = spec.shape
    return {
        Method.DENSE: 0,
        Method.LOWRANK: 2 * n * r,
        Method.MONARCH: 4 * b * n * r,
        Method.BLAST: 8 * b * n * r,
    }[spec.method]


def model_bytes(spec: WorkloadSpec, elem_bytes: int = DEFAULT_ELEM_BYTES) -> int:
    n, i, o, r, b = spec.shape
    if spec.method is Method.DENSE:
        elems = n * i + i * o + n * o
    elif spec.method is Method.BLAST:
        elems = n * i + i * r + r * o + r * b * b + n * o
    else:
        elems = n * i + i * r + r * o + n * o
    return elem_bytes * (elems + intermediate_elements(spec))


def classify(
    spec: WorkloadSpec, profile: HardwareProfile, elem_bytes: int = DEFAULT_ELEM_BYTES
) -> CostReport:
    flops = model_flops(spec)
    nbytes = model_bytes(spec, elem_bytes)
    alpha = flops / nbytes
    # a layer sitting exactly on the breakpoint counts as compute-bound
    bound = Bound.COMPUTE if alpha >= profile.breakpoint else Bound.MEMORY
    est = max(flops / profile.peak_flops, nbytes / profile.mem_bandwidth)
    return CostReport(spec, flops, nbytes, alpha, bound, est, elem_bytes)


def estimate_runtime(
    spec: WorkloadSpec, profile: HardwareProfile, elem_bytes: int = DEFAULT_ELEM_BYTES
) -> float:
    return max(
        model_flops(spec) / profile.peak_flops,
        model_bytes(spec, elem_bytes) / profile.mem_bandwidth,
    )


_PROFILE_KEYS = {"name", "peak_flops", "mem_bandwidth_bytes_per_s"}


def parse_profile(text: str, source: str = "<profile>") -> HardwareProfile:
    """Parse ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        key, found, value = line.partition(sep)
        key = key.strip()
        if not found or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in _PROFILE_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    missing = _PROFILE_KEYS - values.keys() - {"name"}
    if missing:
        raise ConfigError(f"{source}: missing {', '.join(sorted(missing))}")
    try:
        peak = float(values["peak_flops"])
        bw = float(values["mem_bandwidth_bytes_per_s"])
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return HardwareProfile(values.get("name", Path(source).stem), peak, bw)


def shipped_profiles() -> list[str]:
    root = resources.files("blrkernels") / "data" / "profiles"
    return sorted(p.name[:-len(".profile")] for p in root.iterdir() if p.name.endswith(".profile"))


def load_profile(name_or_path: str) -> HardwareProfile:
    """Load a profile file, or a shipped one by name (e.g. ``a40_like``)."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_profile(path.read_text(encoding="utf-8"), str(path))
    res = resources.files("blrkernels") / "data" / "profiles" / f"{name_or_path}.profile"
    if not res.is_file():
        raise ConfigError(
            f"no profile file or shipped profile named {name_or_path!r} "
            f"(shipped: {', '.join(shipped_profiles())})"
        )
    return parse_profile(res.read_text(encoding="utf-8"), res.name)
