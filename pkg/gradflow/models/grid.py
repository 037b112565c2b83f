"""Grid functions and total-variation flow result types."""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from gradflow.errors import InvalidInputError
from gradflow.models.certificates import Status
from gradflow.models.serialization import json_safe
from gradflow.models.trajectory import Trajectory


class BoundaryCondition(Enum):
    """Boundary condition of a total-variation instance."""
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value: Any) -> 'BoundaryCondition':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidInputError(f"Unknown boundary condition '{value}'") from None


@dataclass(frozen=True)
class GridFunction:
    """
    Cell values on a uniform grid over an interval or rectangle.

    Dirichlet functions are understood as extended by 0 outside the domain.

    Attributes:
        values: One value per cell, 1D or 2D array
        h: Cell width (square cells in 2D)
        bc: Boundary condition
    """

    values: np.ndarray
    h: float
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim not in (1, 2):
            raise InvalidInputError(f"Grid functions are 1D or 2D, got ndim={values.ndim}")
        if not self.h > 0:
            raise InvalidInputError(f"Cell width must be positive, got {self.h}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("Grid function has non-finite values")
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'bc', BoundaryCondition.parse(self.bc))

    @property
    def dims(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dims

    @property
    def domain_volume(self) -> float:
        return self.cell_volume * self.values.size

    def with_values(self, values: np.ndarray) -> 'GridFunction':
        return replace(self, values=np.asarray(values, dtype=float).reshape(self.shape))

    def norm(self) -> float:
        """L2 norm with the cell-volume weight."""
        return float(np.sqrt(self.cell_volume * np.sum(self.values ** 2)))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def distance(self, other: 'GridFunction') -> float:
        """L2 distance to another function on the same grid."""
        if other.shape != self.shape:
            raise InvalidInputError(f"Grid shapes differ: {self.shape} vs {other.shape}")
        return float(np.sqrt(self.cell_volume * np.sum((self.values - other.values) ** 2)))

    def __repr__(self) -> str:
        return f'<GridFunction {self.shape} h={self.h:.4g} {self.bc.value}>'


def grid_distance(a: GridFunction, b: GridFunction) -> float:
    return a.distance(b)


@dataclass
class TVInstance:
    """
    Total-variation flow instance.

    Attributes:
        v0: Initial datum; its grid fixes geometry and boundary condition
        constant: Sobolev or Poincaré-Sobolev constant (already scaled to the domain)
        constant_source: Provenance of the constant
        name: Preset name
        params: Generator parameters (height, radius, ...)
    """

    v0: GridFunction
    constant: float
    constant_source: str = 'unspecified'
    name: str = 'custom'
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def bc(self) -> BoundaryCondition:
        return self.v0.bc

    @property
    def target(self) -> GridFunction:
        """0 for Dirichlet, the spatial mean of v0 for Neumann."""
        if self.bc is BoundaryCondition.DIRICHLET:
            return self.v0.with_values(np.zeros(self.v0.shape))
        return self.v0.with_values(np.full(self.v0.shape, self.v0.mean()))

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'name': self.name,
            'bc': self.bc,
            'shape': list(self.v0.shape),
            'h': self.v0.h,
            'constant': self.constant,
            'constant_source': self.constant_source,
            'params': self.params,
        })

    def __repr__(self) -> str:
        return f'<TVInstance {self.name} {self.bc.value} {self.v0.shape}>'


@dataclass
class ProxInfo:
    """Inner-solver report of one proximal step."""

    method: str
    iterations: int
    gap: float
    status: Status = Status.PASS

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'method': self.method,
            'iterations': self.iterations,
            'gap': self.gap,
            'status': self.status,
        })

    def __repr__(self) -> str:
        return f'<ProxInfo {self.method} it={self.iterations} gap={self.gap:.2e} {self.status.value}>'


@dataclass
class TVFlowResult:
    """
    Outcome of a total-variation flow run.

    Attributes:
        trajectory: Grid-function states with energies and dissipation slopes
        t_star: First time with |v(t) - target| <= epsilon, None if not reached
        epsilon: Extinction threshold used
        target: Equilibrium the flow approaches
        mean_drift: Largest per-step change of the spatial mean
        prox_warnings: Steps whose inner solver stopped above tolerance
        snapshots: (t, values) pairs kept every snapshot_every steps
    """

    trajectory: Trajectory
    t_star: Optional[float]
    epsilon: float
    target: GridFunction
    mean_drift: float = 0.0
    prox_warnings: int = 0
    snapshots: List[tuple] = field(default_factory=list)

    @property
    def reached(self) -> bool:
        return self.t_star is not None

    def distances(self) -> np.ndarray:
        return np.array([s.distance(self.target) for s in self.trajectory.states])

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            't_star': self.t_star,
            'epsilon': self.epsilon,
            'mean_drift': self.mean_drift,
            'prox_warnings': self.prox_warnings,
            'n_steps': len(self.trajectory) - 1,
        })

    def __repr__(self) -> str:
        t_star = 'not-reached' if self.t_star is None else f'{self.t_star:.6g}'
        return f'<TVFlowResult T*={t_star} steps={len(self.trajectory) - 1}>'


@dataclass
class ExtinctionAudit:
    """
    Extinction time against the re-anchored bound s + C E(v(s)).

    Attributes:
        t_star: Measured extinction time
        bound: min over sampled s of s + C E(v(s))
        constant: C used
        tolerance: Comparison tolerance
        violations: Sample times s whose own bound undercuts t_star - tolerance
        r_squared: Coefficient of determination of an affine fit of |v(t)| before t_star
        slope: Fitted slope of |v(t)|
        status: PASS iff t_star <= bound + tolerance and no violations
    """

    t_star: float
    bound: float
    constant: float
    tolerance: float
    violations: List[float]
    r_squared: float
    slope: float
    status: Status

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            't_star': self.t_star,
            'bound': self.bound,
            'slack': self.bound - self.t_star,
            'constant': self.constant,
            'tolerance': self.tolerance,
            'violations': self.violations,
            'r_squared': self.r_squared,
            'slope': self.slope,
            'status': self.status,
        })

    def __repr__(self) -> str:
        return f'<ExtinctionAudit T*={self.t_star:.6g} bound={self.bound:.6g} {self.status.value}>'
