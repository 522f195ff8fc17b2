"""Exception types raised across the package."""


class BLRError(Exception):
    pass


class ShapeError(BLRError, ValueError):
    pass


class ScratchBudgetExceeded(BLRError, ValueError):
    """A tile task would need more scratch than the configured budget."""

    def __init__(self, op: str, needed_bytes: int, budget_bytes: int):
        self.op = op
        self.needed_bytes = needed_bytes
        self.budget_bytes = budget_bytes
        super().__init__(
            f"{op}: tile task needs {needed_bytes} B of scratch, budget is {budget_bytes} B"
        )


class RankTooLargeForScratch(ScratchBudgetExceeded):
    """Full fusion keeps the whole rank dimension resident; it did not fit."""

    def __init__(self, rank: int, max_rank: int, needed_bytes: int, budget_bytes: int):
        self.rank = rank
        self.max_rank = max_rank
        BLRError.__init__(
            self,
            f"rank {rank} needs {needed_bytes} B of scratch per task "
            f"(budget {budget_bytes} B, largest admissible rank {max_rank})",
        )
        self.op = "lowrank_fully_fused"
        self.needed_bytes = needed_bytes
        self.budget_bytes = budget_bytes


class LayoutError(BLRError, ValueError):
    pass


class FactorizationDiverged(BLRError, RuntimeError):
    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"loss became non-finite ({loss}) at step {step}")


class TensorFormatError(BLRError, ValueError):
    pass


class TruncatedTensorError(TensorFormatError):
    pass


class ConfigError(BLRError, ValueError):
    pass


class OracleMismatch(BLRError, AssertionError):
    pass
