"""Layer configuration records (JSON Lines) for the benchmark harness."""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, ShapeError
from .formats import Method, WorkloadSpec, param_count

_KEYS = ("model", "layer", "i", "o", "method", "r", "b", "count", "n", "bench")
_REQUIRED = ("model", "layer", "i", "o", "method")
DEFAULT_CONFIG = "default"


@dataclass(frozen=True)
class LayerConfig:
    model: str
    layer: str
    i: int
    o: int
    method: Method
    r: int = 1
    b: int = 1
    layer_count: int = 1
    n: int = 1
    bench: bool = True

    def spec(self, n: int | None = None) -> WorkloadSpec:
        return WorkloadSpec(self.method, self.n if n is None else n, self.i, self.o, self.r, self.b)

    def as_record(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d["count"] = d.pop("layer_count")
        return d


def _int_field(rec: dict, key: str, default: int, where: str) -> int:
    v = rec.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}: field {key!r} must be an integer, got {v!r}")
    if v < 1:
        raise ConfigError(f"{where}: field {key!r} must be >= 1, got {v}")
    return v


def _parse_record(rec, where: str) -> LayerConfig:
    if not isinstance(rec, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    unknown = sorted(set(rec) - set(_KEYS))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(repr, unknown))}")
    for key in _REQUIRED:
        if key not in rec:
            raise ConfigError(f"{where}: missing field {key!r}")
    try:
        method = Method.parse(rec["method"])
    except ValueError:
        raise ConfigError(f"{where}: field 'method' has unknown value {rec['method']!r}") from None
    bench = rec.get("bench", True)
    if not isinstance(bench, bool):
        raise ConfigError(f"{where}: field 'bench' must be true or false")
    cfg = LayerConfig(
        model=str(rec["model"]),
        layer=str(rec["layer"]),
        i=_int_field(rec, "i", 0, where),
        o=_int_field(rec, "o", 0, where),
        method=method,
        r=_int_field(rec, "r", 1, where),
        b=_int_field(rec, "b", 1, where),
        layer_count=_int_field(rec, "count", 1, where),
        n=_int_field(rec, "n", 1, where),
        bench=bench,
    )
    try:
        cfg.spec()
    except ShapeError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return cfg


def parse_layer_configs(text: str, source: str = "<config>") -> list[LayerConfig]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{where}: invalid JSON ({exc.msg})") from None
        out.append(_parse_record(rec, where))
    return out


def load_layer_configs(path: str | Path = DEFAULT_CONFIG) -> list[LayerConfig]:
    """Read a config file; ``"default"`` selects the shipped layer table."""
    if str(path) == DEFAULT_CONFIG:
        res = resources.files("blrkernels") / "data" / "layers.jsonl"
        return parse_layer_configs(res.read_text(encoding="utf-8"), "layers.jsonl")
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_layer_configs(text, str(p))


def compression_factors(configs: list[LayerConfig]) -> dict[tuple[str, str], float]:
    """Dense over structured parameter count per (model, method), weighted by layer count."""
    dense: dict[tuple[str, str], int] = defaultdict(int)
    packed: dict[tuple[str, str], int] = defaultdict(int)
    for c in configs:
        key = (c.model, c.method.value)
        dense[key] += c.layer_count * c.i * c.o
        packed[key] += c.layer_count * param_count(c.spec())
    return {k: dense[k] / packed[k] for k in dense}
