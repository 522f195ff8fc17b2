"""Named execution paths: which method each serves, its offline prep, and how to run it."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import executors as ex
from .formats import Method, pretranspose_blast_s, relayout_monarch_v

ALL_FIELDS = ("t_n", "t_r", "t_p", "t_q")


@dataclass(frozen=True)
class ExecPath:
    name: str
    method: Method
    fields: tuple[str, ...]             # tile fields the path actually uses
    run: Callable
    prepare: Callable = staticmethod(lambda f: f)
    baseline: str | None = None         # the unoptimized path of the same method
    takes_mode: bool = True

    def __call__(self, X, weights, tile, mode=ex.OutputMode.CANONICAL, elem_bytes=2):
        if self.takes_mode:
            return self.run(X, weights, mode, tile, elem_bytes=elem_bytes)
        if mode is not ex.OutputMode.CANONICAL:
            raise ValueError(f"path {self.name} only produces the canonical layout")
        return self.run(X, weights, tile, elem_bytes=elem_bytes)


PATHS: dict[str, ExecPath] = {
    p.name: p
    for p in (
        ExecPath("dense", Method.DENSE, ("t_n", "t_p", "t_q"), ex.forward_dense, takes_mode=False),
        ExecPath("lowrank", Method.LOWRANK, ALL_FIELDS, ex.forward_lowrank_baseline,
                 takes_mode=False),
        ExecPath("lowrank_fused", Method.LOWRANK, ("t_n", "t_p", "t_q"),
                 ex.forward_lowrank_fully_fused, baseline="lowrank", takes_mode=False),
        ExecPath("monarch_base", Method.MONARCH, ALL_FIELDS, ex.forward_monarch_baseline),
        ExecPath("monarch_opt", Method.MONARCH, ALL_FIELDS, ex.forward_monarch_optimized,
                 prepare=relayout_monarch_v, baseline="monarch_base"),
        ExecPath("blast_base", Method.BLAST, ALL_FIELDS, ex.forward_blast_baseline),
        ExecPath("blast_partial", Method.BLAST, ALL_FIELDS, ex.forward_blast_partial_fused,
                 baseline="blast_base"),
        ExecPath("blast_reordered", Method.BLAST, ALL_FIELDS, ex.forward_blast_reordered,
                 prepare=pretranspose_blast_s, baseline="blast_base"),
    )
}


def paths_for(method: Method) -> list[str]:
    return [name for name, p in PATHS.items() if p.method is Method.parse(method)]


def get_path(name: str) -> ExecPath:
    try:
        return PATHS[name]
    except KeyError:
        raise KeyError(f"unknown path {name!r}; choose from {', '.join(PATHS)}") from None
