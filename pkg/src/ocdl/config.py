"""Run-parameter types shared by both learners."""

from __future__ import annotations

from dataclasses import dataclass, field

from .csc import CscSettings

# A dense second-order state above this filter-vector length is rejected;
# larger configurations must use the frequency option.
MAX_DENSE_FILTER_VECTOR = 4096


@dataclass
class StepSchedule:
    """Fixed step size, or the diminishing rule ``a / (b + t)``."""

    kind: str = "diminishing"
    eta0: float = 0.1
    a: float = 10.0
    b: float = 5.0

    def __post_init__(self):
        if self.kind not in ("fixed", "diminishing"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.eta0 <= 0 or self.a <= 0 or self.b <= 0:
            raise ValueError("schedule parameters must be positive")


@dataclass
class StopRule:
    """Diminishing inner-solve tolerance for the dictionary update.

    ``alpha_stop=None`` selects the pure ``tau0 / t`` decay; otherwise the
    tolerance is ``tau0 / (1 + alpha_stop * t)``. Both are monotone
    nonincreasing in ``t``.
    """

    tau0: float = 0.01
    alpha_stop: float | None = None

    def __post_init__(self):
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.alpha_stop is not None and self.alpha_stop < 0:
            raise ValueError("alpha_stop must be nonnegative")

    def tolerance(self, t: int) -> float:
        if t < 1:
            raise ValueError("step index starts at 1")
        if self.alpha_stop is None:
            return self.tau0 / t
        return self.tau0 / (1.0 + self.alpha_stop * t)


@dataclass
class TrainConfig:
    """Parameters for one training run."""

    num_filters: int
    kernel_shape: tuple[int, int]
    penalty: float = 0.1
    algo: str = "sgd"
    domain: str = "spatial"
    masked: bool = False
    epochs: int = 1
    seed: int = 0
    schedule: StepSchedule = field(default_factory=StepSchedule)
    forgetting_exponent: float = 10.0
    stop: StopRule = field(default_factory=StopRule)
    max_inner: int = 200
    csc: CscSettings | None = None
    eval_every: int = 0

    def __post_init__(self):
        if self.csc is None:
            self.csc = CscSettings(penalty=self.penalty)

    def validate(self):
        if self.num_filters < 1:
            raise ValueError("need at least one filter")
        lr, lc = self.kernel_shape
        if lr < 1 or lc < 1:
            raise ValueError("kernel dimensions must be positive")
        if self.penalty < 0:
            raise ValueError("penalty must be nonnegative")
        if self.algo not in ("sgd", "surrogate"):
            raise ValueError(f"unknown learner {self.algo!r}")
        if self.domain not in ("spatial", "frequency"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.forgetting_exponent < 0:
            raise ValueError("forgetting exponent must be nonnegative")
        if self.max_inner < 1:
            raise ValueError("max_inner must be at least 1")
        if self.algo == "surrogate" and self.masked and self.domain == "frequency":
            raise ValueError(
                "masked surrogate training is supported in the spatial domain only: "
                "the masked frequency Hessian needs a DFT of every operator column, "
                "which defeats the per-bin block structure"
            )
        if (
            self.algo == "surrogate"
            and self.domain == "spatial"
            and self.num_filters * lr * lc > MAX_DENSE_FILTER_VECTOR
        ):
            raise ValueError(
                "dense second-order state too large for the spatial option; "
                "use domain='frequency'"
            )
