"""Decay-rate prediction and comparison types."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from gradflow.models.certificates import Status
from gradflow.models.serialization import json_safe


class Regime(Enum):
    """Decay regime selected by comparing alpha with 1/p."""
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"
    EXTINCTION = "extinction"


@dataclass
class DecayPrediction:
    """
    Upper bound on d(v(t), phi) from a Łojasiewicz-Simon inequality.

    The bound is H(t) with H(t0) = (c/alpha) E0^alpha, integrated from
    H' <= -K H^gamma, gamma = (1 - alpha)/(alpha (p - 1)).

    Attributes:
        regime: Polynomial, exponential or extinction
        p, alpha, c, t0, E0: Inputs of the prediction
        K: Rate constant of the differential inequality
        H0: Bound at t0
        kappa: 1 - gamma (extinction exponent, positive only for extinction)
        c_tilde: Extinction prefactor, None outside the extinction regime
        t_hat: Extinction deadline consistent with the integrated inequality
        t_hat_stated: Closed-form deadline in its displayed form
        rate: Exponential rate 1/(p c^p'), None outside the exponential regime
    """

    regime: Regime
    p: float
    alpha: float
    c: float
    t0: float
    E0: float
    K: float
    H0: float
    kappa: float
    c_tilde: Optional[float] = None
    t_hat: Optional[float] = None
    t_hat_stated: Optional[float] = None
    rate: Optional[float] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def bound(self, t: Any) -> np.ndarray:
        """
        Evaluate the distance bound; times before t0 get the value at t0.

        Args:
            t: Scalar or array of times

        Returns:
            Nonnegative, non-increasing bound values
        """
        t = np.asarray(t, dtype=float)
        dt = np.maximum(t - self.t0, 0.0)
        if self.H0 == 0.0:
            return np.zeros_like(dt)
        if self.regime is Regime.EXTINCTION:
            base = np.maximum(self.H0 ** self.kappa - self.K * self.kappa * dt, 0.0)
            return base ** (1.0 / self.kappa)
        if self.regime is Regime.EXPONENTIAL:
            return self.H0 * np.exp(-self.rate * dt)
        beta = -self.kappa
        return (self.K * beta * dt + self.H0 ** (-beta)) ** (-1.0 / beta)

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'regime': self.regime,
            'p': self.p,
            'alpha': self.alpha,
            'c': self.c,
            't0': self.t0,
            'E0': self.E0,
            't_hat': self.t_hat,
            't_hat_stated': self.t_hat_stated,
            'c_tilde': self.c_tilde,
            'rate': self.rate,
            'K': self.K,
            'H0': self.H0,
            'meta': self.meta,
        })

    def __repr__(self) -> str:
        extra = ''
        if self.t_hat is not None:
            extra = f' t_hat={self.t_hat:.6g}'
        elif self.rate is not None:
            extra = f' rate={self.rate:.6g}'
        return f'<DecayPrediction {self.regime.value} p={self.p:g} alpha={self.alpha:g}{extra}>'


@dataclass
class DecayComparison:
    """
    Measured distances against a prediction.

    Attributes:
        times: Sample times checked
        bound: Predicted bound at each time
        measured: Measured d(v(t), phi)
        slack: bound - measured
        tolerance: Comparison tolerance tol_cmp
        status: PASS iff every slack >= -tolerance (and the deadline holds)
        t_star: Measured extinction time (extinction regime only)
        deadline_ok: t_star <= t_hat + tolerance, None when not applicable
    """

    times: np.ndarray
    bound: np.ndarray
    measured: np.ndarray
    slack: np.ndarray
    tolerance: float
    status: Status
    t_star: Optional[float] = None
    t_hat: Optional[float] = None
    deadline_ok: Optional[bool] = None

    @property
    def worst_slack(self) -> float:
        return float(self.slack.min()) if self.slack.size else math.inf

    @property
    def violations(self) -> int:
        return int(np.sum(self.slack < -self.tolerance))

    def rows(self) -> List[Tuple[str, str, str, str]]:
        """CSV rows (t, bound, measured, slack)."""
        return [(repr(float(t)), repr(float(b)), repr(float(m)), repr(float(s)))
                for t, b, m, s in zip(self.times, self.bound, self.measured, self.slack)]

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'status': self.status,
            'worst_slack': self.worst_slack,
            'violations': self.violations,
            'tolerance': self.tolerance,
            't_star': self.t_star,
            't_hat': self.t_hat,
            'deadline_ok': self.deadline_ok,
            'n_samples': int(self.times.size),
        })

    def __repr__(self) -> str:
        return f'<DecayComparison {self.status.value} worst_slack={self.worst_slack:.3e}>'
