"""Oracle contracts consumed by the flow solvers and certification routines."""

from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Optional

from gradflow.errors import InvalidInputError

Distance = Callable[[Any, Any], float]


@dataclass(frozen=True)
class EnergyOracle:
    """
    Evaluation contract for an energy.

    Attributes:
        eval: state -> E(state), +inf outside the domain
        equilibrium: Reference state phi (may be None for open-ended runs)
        lam: Geodesic convexity modulus, None when unknown
        slope: Optional closed-form strong upper gradient
    """

    eval: Callable[[Any], float]
    equilibrium: Any = None
    lam: Optional[float] = None
    slope: Optional[Callable[[Any], float]] = None

    def equilibrium_energy(self) -> float:
        """Return E(phi); raises when no equilibrium was declared."""
        if self.equilibrium is None:
            raise InvalidInputError("Energy oracle has no declared equilibrium")
        return float(self.eval(self.equilibrium))


@dataclass(frozen=True)
class ProxOracle:
    """
    Proximal solver for the minimizing-movement functional.

    Attributes:
        solve: (tau, base, p) -> minimizer of d^p(base, .)/(p tau^(p-1)) + E(.)
        tolerance: Relative inner optimality gap the solver promises
        distance: Metric of the state space
    """

    solve: Callable[[float, Any, float], Any]
    tolerance: float
    distance: Distance


@dataclass(frozen=True)
class MMConfig:
    """
    Parameters of a minimizing-movement run.

    Attributes:
        p: Exponent of the flow (> 1)
        tau: Initial step
        horizon: Final time
        refine_levels: Number of step sizes tau, tau/2, ... in a refinement study
        record_slopes: Record upper-gradient values along the run
    """

    p: float = 2.0
    tau: float = 0.1
    horizon: float = 1.0
    refine_levels: int = 3
    record_slopes: bool = True

    def __post_init__(self) -> None:
        if not self.p > 1:
            raise InvalidInputError(f"p must exceed 1, got {self.p}")
        if not self.tau > 0:
            raise InvalidInputError(f"tau must be positive, got {self.tau}")
        if not self.horizon > 0:
            raise InvalidInputError(f"horizon must be positive, got {self.horizon}")
        if self.refine_levels < 1:
            raise InvalidInputError(f"refine_levels must be at least 1, got {self.refine_levels}")

    @property
    def steps(self) -> int:
        """Number of steps of size tau that fit into the horizon."""
        return max(1, int(round(self.horizon / self.tau)))


class SlopeEstimate(NamedTuple):
    """Lower bound for the descending slope and how it was obtained."""

    value: float
    lam_used: float
    convexity_verified: bool
