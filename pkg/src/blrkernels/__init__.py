"""Block low-rank linear layers: tiled kernels, traffic counters and a roofline cost model."""
from ._backend import backend_name, use_backend
from .errors import (
    BLRError, ConfigError, FactorizationDiverged, LayoutError, RankTooLargeForScratch,
    ScratchBudgetExceeded, ShapeError, TensorFormatError, TruncatedTensorError,
)
from .executors import (
    ForwardResult, OutputMode, forward_blast_baseline, forward_blast_partial_fused,
    forward_blast_reordered, forward_dense, forward_lowrank_baseline,
    forward_lowrank_fully_fused, forward_monarch_baseline, forward_monarch_optimized,
    max_fused_rank,
)
from .factorize import factor_blast, factor_low_rank, factor_monarch
from .formats import (
    BlastFactors, LowRankFactors, Method, MonarchFactors, VLayout, WorkloadSpec,
    param_count, prepermute_downstream_weight, pretranspose_blast_s, random_factors,
    reconstruct_dense, relayout_monarch_v, restore_monarch_v,
)
from .roofline import Bound, CostReport, HardwareProfile, classify, estimate_runtime, model_bytes, model_flops
from .tensorbase import Counters, TileConfig, batched_gemm, permute, tiled_gemm

__version__ = "0.1.0"
