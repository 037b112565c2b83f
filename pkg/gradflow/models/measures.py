"""Quantile representations of 1D measures and free-energy specifications."""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import xlogy
from scipy.stats import norm

from gradflow.errors import InvalidInputError
from gradflow.models.certificates import Status
from gradflow.models.serialization import json_safe

ScalarFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class QuantileRepr:
    """
    Nondecreasing samples X_j = X(s_j) of a quantile function at s_j = (j - 1/2)/M.

    Every representative carries unit mass by construction.
    """

    X: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float).reshape(-1)
        if self.X.size < 2:
            raise InvalidInputError(f"Quantile representation needs M >= 2, got {self.X.size}")
        if not np.all(np.isfinite(self.X)):
            raise InvalidInputError("Quantile values must be finite")
        if np.any(np.diff(self.X) < 0):
            raise InvalidInputError("Quantile values must be nondecreasing")

    @property
    def M(self) -> int:
        return int(self.X.size)

    @property
    def s(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) / self.M

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.X)

    @property
    def width(self) -> float:
        return float(self.X[-1] - self.X[0])

    def moment(self, p: float) -> float:
        """(1/M) sum |X_j|^p."""
        return float(np.mean(np.abs(self.X) ** p))

    def mean(self) -> float:
        return float(np.mean(self.X))

    def shifted(self, c: float) -> 'QuantileRepr':
        return QuantileRepr(self.X + c, dict(self.meta))

    @classmethod
    def from_ppf(cls, ppf: ScalarFn, M: int, **meta: Any) -> 'QuantileRepr':
        s = (np.arange(M) + 0.5) / M
        return cls(np.asarray(ppf(s), dtype=float), dict(meta))

    @classmethod
    def gaussian(cls, mean: float, std: float, M: int) -> 'QuantileRepr':
        """Midpoint quantiles of N(mean, std^2)."""
        if not std > 0:
            raise InvalidInputError(f"Standard deviation must be positive, got {std}")
        return cls.from_ppf(lambda s: norm.ppf(s, loc=mean, scale=std), M,
                            kind='gaussian', mean=mean, std=std)

    def __repr__(self) -> str:
        return f'<QuantileRepr M={self.M} range=[{self.X[0]:.4g}, {self.X[-1]:.4g}]>'


@dataclass(frozen=True)
class InternalEnergy:
    """
    Internal energy density F with F(0) = 0.

    Attributes:
        name: Preset name
        F, dF, d2F: F and its first two derivatives on (0, inf)
        superlinear: F(s)/s -> inf as s -> inf
    """

    name: str
    F: ScalarFn
    dF: ScalarFn
    d2F: ScalarFn
    superlinear: bool = True
    params: Dict[str, float] = field(default_factory=dict)

    def pressure(self, rho: np.ndarray) -> np.ndarray:
        """P_F(rho) = rho F'(rho) - F(rho)."""
        rho = np.asarray(rho, dtype=float)
        return rho * self.dF(rho) - self.F(rho)

    def dpressure(self, rho: np.ndarray) -> np.ndarray:
        """P_F'(rho) = rho F''(rho)."""
        rho = np.asarray(rho, dtype=float)
        return rho * self.d2F(rho)

    @classmethod
    def entropy(cls) -> 'InternalEnergy':
        """Boltzmann entropy F(s) = s log s."""
        return cls('entropy',
                   F=lambda s: xlogy(s, s),
                   dF=lambda s: np.log(s) + 1.0,
                   d2F=lambda s: 1.0 / s)

    @classmethod
    def porous(cls, m: float) -> 'InternalEnergy':
        """F(s) = s^m/(m - 1), m > 1."""
        if not m > 1:
            raise InvalidInputError(f"Porous-medium exponent must exceed 1, got {m}")
        return cls('porous-medium',
                   F=lambda s: np.asarray(s, dtype=float) ** m / (m - 1.0),
                   dF=lambda s: m * np.asarray(s, dtype=float) ** (m - 1.0) / (m - 1.0),
                   d2F=lambda s: m * np.asarray(s, dtype=float) ** (m - 2.0),
                   params={'m': m})

    @classmethod
    def doubly_nonlinear(cls, p: float, m: float) -> 'InternalEnergy':
        """F(s) = m s^q/(q (q - 1)) with q = m + 1 - 1/(p' - 1)."""
        q = m + 1.0 - (p - 1.0)
        if not q > 1:
            raise InvalidInputError(f"Doubly nonlinear exponent q={q} must exceed 1 (p={p}, m={m})")
        scale = m / (q * (q - 1.0))
        return cls('doubly-nonlinear',
                   F=lambda s: scale * np.asarray(s, dtype=float) ** q,
                   dF=lambda s: scale * q * np.asarray(s, dtype=float) ** (q - 1.0),
                   d2F=lambda s: scale * q * (q - 1.0) * np.asarray(s, dtype=float) ** (q - 2.0),
                   params={'p': p, 'm': m, 'q': q})


@dataclass(frozen=True)
class Potential:
    """
    Confinement potential V with declared uniform lambda-p-convexity modulus.

    lam follows f(y) - f(x) >= f'(x)(y - x) + lam |y - x|^p, so V = k x^2/2
    has lam = k/2 for p = 2.
    """

    name: str
    V: ScalarFn
    dV: ScalarFn
    d2V: ScalarFn
    lam: float = 0.0
    params: Dict[str, float] = field(default_factory=dict)
    domain: Optional[Tuple[float, float]] = None

    def contains(self, x: np.ndarray) -> bool:
        if self.domain is None:
            return True
        lo, hi = self.domain
        return bool(np.all((x >= lo) & (x <= hi)))

    @classmethod
    def quadratic(cls, kappa: float = 1.0, center: float = 0.0) -> 'Potential':
        return cls('quadratic',
                   V=lambda x: 0.5 * kappa * (np.asarray(x, dtype=float) - center) ** 2,
                   dV=lambda x: kappa * (np.asarray(x, dtype=float) - center),
                   d2V=lambda x: np.full(np.shape(x), float(kappa)),
                   lam=0.5 * kappa,
                   params={'kappa': kappa, 'center': center})

    @classmethod
    def linear(cls, slope: float, domain: Optional[Tuple[float, float]] = None) -> 'Potential':
        return cls('linear',
                   V=lambda x: slope * np.asarray(x, dtype=float),
                   dV=lambda x: np.full(np.shape(x), float(slope)),
                   d2V=lambda x: np.zeros(np.shape(x)),
                   lam=0.0,
                   params={'slope': slope},
                   domain=domain)


@dataclass(frozen=True)
class Interaction:
    """Even interaction kernel W with convexity modulus lam."""

    name: str
    W: ScalarFn
    dW: ScalarFn
    d2W: ScalarFn
    lam: float = 0.0
    params: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def quadratic(cls, k: float) -> 'Interaction':
        """W(x) = k x^2/2; its modulus is recorded as 0."""
        return cls('quadratic',
                   W=lambda x: 0.5 * k * np.asarray(x, dtype=float) ** 2,
                   dW=lambda x: k * np.asarray(x, dtype=float),
                   d2W=lambda x: np.full(np.shape(x), float(k)),
                   lam=0.0,
                   params={'k': k})


@dataclass(frozen=True)
class FreeEnergySpec:
    """
    Free energy E = H_F + H_V + H_W.

    Hypotheses are declared, with cheap spot checks on F(0) and the parity of W.
    """

    F: Optional[InternalEnergy] = None
    V: Optional[Potential] = None
    W: Optional[Interaction] = None
    name: str = 'custom'

    def __post_init__(self) -> None:
        if self.F is not None:
            f0 = float(np.asarray(self.F.F(np.array([0.0])))[0])
            if abs(f0) > 1e-14:
                raise InvalidInputError(f"F(0) must vanish, got {f0}")
        if self.W is not None:
            probe = np.linspace(0.1, 3.0, 7)
            if not np.allclose(self.W.W(probe), self.W.W(-probe), rtol=1e-12, atol=1e-14):
                raise InvalidInputError(f"Interaction '{self.W.name}' is not even")

    @property
    def lam_V(self) -> Optional[float]:
        return None if self.V is None else self.V.lam

    @property
    def lam_W(self) -> float:
        return 0.0 if self.W is None else self.W.lam

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'name': self.name,
            'F': None if self.F is None else {'name': self.F.name, **self.F.params},
            'V': None if self.V is None else {'name': self.V.name, 'lam': self.V.lam, **self.V.params},
            'W': None if self.W is None else {'name': self.W.name, 'lam': self.W.lam, **self.W.params},
        })

    def __repr__(self) -> str:
        parts = [x.name for x in (self.F, self.V, self.W) if x is not None]
        return f'<FreeEnergySpec {self.name} [{", ".join(parts)}]>'


@dataclass
class FisherInfo:
    """
    Generalized Fisher information of a quantile state.

    Attributes:
        I: (1/M) sum |xi_j|^p'
        slope: I^(1/p'), the descending slope
        xi: Wasserstein velocity at each quantile
        windowed_mass: Fraction of quantiles inside the reconstructed support
    """

    I: float
    slope: float
    xi: np.ndarray
    windowed_mass: float = 1.0

    def __repr__(self) -> str:
        return f'<FisherInfo I={self.I:.4e}>'


@dataclass
class JKOInfo:
    """Inner-solver report of one quantile step."""

    iterations: int
    residual: float
    status: Status
    method: str = 'newton'

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({'iterations': self.iterations, 'residual': self.residual,
                          'status': self.status, 'method': self.method})


@dataclass
class InequalityRecord:
    """One functional inequality lhs <= rhs with slack = rhs - lhs."""

    name: str
    lhs: float
    rhs: float
    slack: float
    status: Status
    constants: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'name': self.name,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'slack': self.slack,
            'status': self.status,
            'constants': self.constants,
        })

    def __repr__(self) -> str:
        return f'<InequalityRecord {self.name} slack={self.slack:.3e} {self.status.value}>'


@dataclass
class InequalityAudit:
    """Inequality suite evaluated at one measure against one equilibrium."""

    p: float
    records: List[InequalityRecord]
    equilibrium_residual: float
    quantities: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.status is Status.PASS for r in self.records)

    def get(self, name: str) -> InequalityRecord:
        for record in self.records:
            if record.name == name:
                return record
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'p': self.p,
            'passed': self.passed,
            'equilibrium_residual': self.equilibrium_residual,
            'quantities': self.quantities,
            'records': [r.to_dict() for r in self.records],
        })

    def __repr__(self) -> str:
        return f'<InequalityAudit records={len(self.records)} passed={self.passed}>'


@dataclass
class DecayAudit:
    """
    Transport and exponential-envelope chains along a trajectory.

    Attributes:
        times: Sample times
        distance: W_p(mu(t), nu)
        transport_bound: prefactor * E(mu(t)|nu)^(1/p)
        envelope: prefactor * E(mu(t0)|nu)^(1/p) * exp(-rate (t - t0))
        prefactor: (p-1)^(1/p') / lam_V^(1/p)
        rate: p^(1/p) lam_V^(1/(p-1)) / (p - 1)
    """

    times: np.ndarray
    distance: np.ndarray
    transport_bound: np.ndarray
    envelope: np.ndarray
    prefactor: float
    rate: float
    tolerance: float

    @property
    def transport_slack(self) -> np.ndarray:
        return self.transport_bound - self.distance

    @property
    def envelope_slack(self) -> np.ndarray:
        return self.envelope - self.transport_bound

    def _ok(self, slack: np.ndarray, scale: np.ndarray) -> bool:
        return bool(np.all(slack >= -self.tolerance * np.maximum(1.0, scale)))

    @property
    def transport_status(self) -> Status:
        return Status.of(self._ok(self.transport_slack, self.transport_bound))

    @property
    def envelope_status(self) -> Status:
        return Status.of(self._ok(self.envelope_slack, self.envelope))

    @property
    def violations(self) -> Tuple[int, int]:
        tol_t = self.tolerance * np.maximum(1.0, self.transport_bound)
        tol_e = self.tolerance * np.maximum(1.0, self.envelope)
        return (int(np.sum(self.transport_slack < -tol_t)),
                int(np.sum(self.envelope_slack < -tol_e)))

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'prefactor': self.prefactor,
            'rate': self.rate,
            'tolerance': self.tolerance,
            'transport_status': self.transport_status,
            'envelope_status': self.envelope_status,
            'transport_worst_slack': float(self.transport_slack.min()) if self.times.size else math.inf,
            'envelope_worst_slack': float(self.envelope_slack.min()) if self.times.size else math.inf,
            'violations': list(self.violations),
        })

    def __repr__(self) -> str:
        return (f'<DecayAudit transport={self.transport_status.value} '
                f'envelope={self.envelope_status.value}>')
