"""Trajectory and dissipation report types."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gradflow.errors import InvalidInputError
from gradflow.models.serialization import json_safe


@dataclass
class Trajectory:
    """
    Time-stamped sequence of states produced by a flow solver.

    Attributes:
        times: Strictly increasing time stamps
        states: State handles, one per time stamp
        energies: E at each state
        slopes: Strong-upper-gradient values; NaN where not recorded
        space_id: Tag naming the state space the handles live in
        meta: Free-form solver metadata
    """

    times: List[float] = field(default_factory=list)
    states: List[Any] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    slopes: List[float] = field(default_factory=list)
    space_id: str = 'euclidean'
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = [float(t) for t in self.times]
        self.energies = [float(e) for e in self.energies]
        if not self.slopes:
            self.slopes = [math.nan] * len(self.times)
        else:
            self.slopes = [math.nan if s is None else float(s) for s in self.slopes]
        n = len(self.times)
        if not (len(self.states) == len(self.energies) == len(self.slopes) == n):
            raise InvalidInputError(
                f"Trajectory fields differ in length: times={n}, states={len(self.states)}, "
                f"energies={len(self.energies)}, slopes={len(self.slopes)}"
            )
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise InvalidInputError("Trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def append(self, t: float, state: Any, energy: float, slope: Optional[float] = None) -> None:
        """
        Append one sample.

        Args:
            t: Time stamp, larger than the last one
            state: State handle
            energy: E(state)
            slope: Optional upper-gradient value

        Raises:
            InvalidInputError: If t does not increase
        """
        if self.times and t <= self.times[-1]:
            raise InvalidInputError(f"Time {t} does not exceed the last time stamp {self.times[-1]}")
        self.times.append(float(t))
        self.states.append(state)
        self.energies.append(float(energy))
        self.slopes.append(math.nan if slope is None else float(slope))

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    @property
    def E(self) -> np.ndarray:
        return np.asarray(self.energies, dtype=float)

    @property
    def g(self) -> np.ndarray:
        return np.asarray(self.slopes, dtype=float)

    def has_slopes(self) -> bool:
        """Return True when every sample carries a finite slope."""
        return bool(len(self)) and bool(np.all(np.isfinite(self.g)))

    def energy_increases(self, tau_mono: float) -> List[int]:
        """
        Indices k with E[k+1] > E[k] + tau_mono.

        Args:
            tau_mono: Absolute monotonicity slack

        Returns:
            List of offending indices
        """
        E = self.E
        return [int(k) for k in np.flatnonzero(E[1:] > E[:-1] + tau_mono)]

    def to_rows(self, distances: Optional[Sequence[float]] = None) -> List[Tuple[Any, ...]]:
        """
        CSV rows (t, energy, slope, dist_to_equilibrium).

        Missing slopes and distances become empty cells.
        """
        if distances is not None and len(distances) != len(self):
            raise InvalidInputError("One distance per sample is required")
        rows = []
        for k in range(len(self)):
            slope = self.slopes[k]
            dist = None if distances is None else float(distances[k])
            rows.append((
                repr(self.times[k]),
                repr(self.energies[k]),
                '' if math.isnan(slope) else repr(slope),
                '' if dist is None else repr(dist),
            ))
        return rows

    def manifest(self, p: float, solver: str, params: Dict[str, Any]) -> Dict[str, Any]:
        """Sidecar manifest accompanying the CSV export."""
        return json_safe({
            'space_id': self.space_id,
            'p': p,
            'solver': solver,
            'params': params,
        })

    def __repr__(self) -> str:
        if not self.times:
            return f'<Trajectory {self.space_id} empty>'
        return (f'<Trajectory {self.space_id} n={len(self)} '
                f't=[{self.times[0]:.4g}, {self.times[-1]:.4g}] E_end={self.energies[-1]:.6g}>')


CSV_COLUMNS: Tuple[str, ...] = ('t', 'energy', 'slope', 'dist_to_equilibrium')


@dataclass
class RefinementStudy:
    """
    Minimizing-movement runs at tau, tau/2, ... with Cauchy distances.

    Attributes:
        taus: Step size per level
        levels: Trajectory per level
        distances: sup over the coarse grid of d(level_i, level_i+1)
        contracting: distances[i+1] <= distances[i] per consecutive pair
    """

    taus: List[float]
    levels: List[Trajectory]
    distances: List[float]
    contracting: List[bool]

    @property
    def ratios(self) -> List[float]:
        return [a / b if b > 0 else math.inf
                for a, b in zip(self.distances, self.distances[1:])]

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'taus': self.taus,
            'distances': self.distances,
            'contracting': self.contracting,
            'ratios': self.ratios,
        })

    def __repr__(self) -> str:
        return f'<RefinementStudy levels={len(self.levels)} contracting={all(self.contracting)}>'


@dataclass
class DissipationReport:
    """
    Energy dissipation balance on one sampling interval.

    Attributes:
        interval: (s, t)
        lhs: E(v(s)) - E(v(t))
        metric_term: (1/p) * integral of |v'|^p
        slope_term: (1/p') * integral of g^p'
        residual: lhs - metric_term - slope_term (signed)
        energy_increase: True when E rose by more than tau_mono on the interval
    """

    interval: Tuple[float, float]
    lhs: float
    metric_term: float
    slope_term: float
    residual: float
    energy_increase: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'interval': list(self.interval),
            'lhs': self.lhs,
            'metric_term': self.metric_term,
            'slope_term': self.slope_term,
            'residual': self.residual,
            'energy_increase': self.energy_increase,
        })

    def __repr__(self) -> str:
        s, t = self.interval
        return f'<DissipationReport [{s:.4g},{t:.4g}] residual={self.residual:.3e}>'
