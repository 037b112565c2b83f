"""Smooth finite-dimensional energies and the reports built on them."""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from gradflow.models.certificates import LSFit, Status
from gradflow.models.serialization import json_safe

VectorFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SmoothEnergy:
    """
    C^2 energy on R^dim.

    Attributes:
        name: Registry name
        dim: Dimension of the state space
        value: x -> E(x)
        gradient: x -> E'(x)
        hessian: Optional x -> E''(x), used at the minimizer
        lam: Convexity modulus, None when the energy is not globally convex
        minimizer: Known local minimum phi, if any
        params: Construction parameters
    """

    name: str
    dim: int
    value: Callable[[np.ndarray], float]
    gradient: VectorFn
    hessian: Optional[VectorFn] = None
    lam: Optional[float] = None
    minimizer: Optional[np.ndarray] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def slope(self, x: np.ndarray) -> float:
        """|E'(x)|, the descending slope of a C^1 energy."""
        return float(np.linalg.norm(self.gradient(np.asarray(x, dtype=float))))

    def __repr__(self) -> str:
        return f'<SmoothEnergy {self.name} dim={self.dim}>'


@dataclass
class TalwegReport:
    """
    Straight-line talweg x(r) = phi + r (v0 - phi) with its level function h.

    Attributes:
        r: Parameters on (0, delta]
        h: h(r) = E(x(r)|phi)
        monotone: h strictly increasing on the table
        ls_constant: Smallest C with 1 <= C |E'(v)| E(v|phi)^(-1/2) on the sampled ball
        inverse_h_constant: Smallest C_h with r <= C_h h(r)^(1/2) on the table
        taylor_ratios: h(delta_k)/delta_k^2 for halving delta_k
        taylor_limit: <E''(phi) e, e>/2 with e = v0 - phi, when a Hessian is known
        certificate: Łojasiewicz-Simon fit at alpha = 1/2 with c = ls_constant
    """

    r: np.ndarray
    h: np.ndarray
    monotone: bool
    ls_constant: float
    inverse_h_constant: float
    taylor_ratios: np.ndarray
    taylor_limit: Optional[float]
    certificate: LSFit
    n_ball: int = 0

    @property
    def status(self) -> Status:
        return Status.of(self.monotone)

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'monotone': self.monotone,
            'ls_constant': self.ls_constant,
            'inverse_h_constant': self.inverse_h_constant,
            'taylor_ratios': self.taylor_ratios,
            'taylor_limit': self.taylor_limit,
            'certificate': self.certificate.to_dict(),
            'n_ball': self.n_ball,
            'status': self.status,
            'table': [[r, h] for r, h in zip(self.r, self.h)],
        })

    def __repr__(self) -> str:
        return f'<TalwegReport C={self.ls_constant:.4g} C_h={self.inverse_h_constant:.4g} {self.status.value}>'


@dataclass
class StabilityReport:
    """
    Empirical Lyapunov-stability verdict at one epsilon.

    Attributes:
        eps: Tolerated excursion
        deltas: Tested starting radii
        excursions: Per delta, max over starts and times of d(v(t), phi)
        stable_delta: Largest delta whose excursions all stay below eps, or None
        local_min_gap: min over the sampled spheres of E(x) - E(phi)
    """

    eps: float
    deltas: List[float]
    excursions: List[float]
    stable_delta: Optional[float]
    local_min_gap: float
    n_starts: int

    @property
    def stable(self) -> bool:
        return self.stable_delta is not None

    @property
    def local_minimum(self) -> bool:
        return self.local_min_gap >= 0.0

    @property
    def verdict(self) -> str:
        return 'STABLE' if self.stable else 'UNSTABLE'

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'eps': self.eps,
            'deltas': self.deltas,
            'excursions': self.excursions,
            'stable_delta': self.stable_delta,
            'verdict': self.verdict,
            'local_min_gap': self.local_min_gap,
            'local_minimum': self.local_minimum,
            'n_starts': self.n_starts,
        })

    def __repr__(self) -> str:
        return f'<StabilityReport {self.verdict}({self.eps:g}) local_min={self.local_minimum}>'
