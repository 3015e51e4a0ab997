"""Decision variables, SE vectors, and optimization run results."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Status(str, Enum):
    CONVERGED = "converged"
    INFEASIBLE = "infeasible"
    MAX_ITERS = "max_iters"


@dataclass
class ModeAssignment:
    """Per-AP duplex mode indicators: a (DL) and b (UL), with a + b = 1."""

    a: np.ndarray  # (M,) in [0, 1]
    b: np.ndarray  # (M,) in [0, 1]

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.a == 0) | (self.a == 1))
                    and np.all((self.b == 0) | (self.b == 1)))

    def copy(self) -> "ModeAssignment":
        return ModeAssignment(self.a.copy(), self.b.copy())


@dataclass
class PowerAllocation:
    """All continuous power variables of the joint problem."""

    eta: np.ndarray             # (M, K_d) DL power coefficients
    theta: np.ndarray           # (M, K_d) with theta^2 = eta when consistent
    varsigma_tilde: np.ndarray  # (K_u,) UL UE power coefficients in [0, 1]
    varsigma: np.ndarray        # (M, K_u) effective UL coefficients
    eta_tilde: np.ndarray       # (M, M, K_d), [i, m, k] >= b_m * eta_ik

    def copy(self) -> "PowerAllocation":
        return PowerAllocation(self.eta.copy(), self.theta.copy(),
                               self.varsigma_tilde.copy(), self.varsigma.copy(),
                               self.eta_tilde.copy())


@dataclass
class DecisionPoint:
    """Full variable vector of the penalized problem (one SCA anchor)."""

    mode: ModeAssignment
    power: PowerAllocation
    q_ul: np.ndarray  # (K_u,) UL SE epigraph variables
    q_dl: np.ndarray  # (K_d,)

    def copy(self) -> "DecisionPoint":
        return DecisionPoint(self.mode.copy(), self.power.copy(),
                             self.q_ul.copy(), self.q_dl.copy())


@dataclass
class SEVector:
    """Per-UE spectral efficiencies in bit/s/Hz."""

    dl: np.ndarray  # (K_d,)
    ul: np.ndarray  # (K_u,)

    @property
    def total(self) -> float:
        return float(np.sum(self.dl) + np.sum(self.ul))


@dataclass
class IterationRecord:
    """One row of the convergence trace.

    The objective is nonincreasing within each phase ("joint" while modes
    are free, "polish" after rounding); the phase boundary re-anchors it.
    """

    iteration: int
    objective: float  # penalized objective at the new anchor
    c1: float         # scaled eta/theta coupling residual
    c2: float
    c3: float
    phase: str = "joint"


@dataclass
class RunResult:
    """Outcome of one optimization run on one network realization."""

    point: DecisionPoint | None
    se: SEVector
    trace: list[IterationRecord] = field(default_factory=list)
    residuals: tuple[float, float, float] = (np.nan, np.nan, np.nan)
    status: Status = Status.INFEASIBLE
    iterations: int = 0
    # largest |a_m - round(a_m)| over APs just before rounding, for logging
    mode_gap: float = np.nan

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED
