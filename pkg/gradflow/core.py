"""Metric-space primitives: metric derivative, length, slopes, energy dissipation."""

import logging
import math
from typing import Any, List, Optional, Sequence

import numpy as np

from gradflow.config import Config
from gradflow.errors import InvalidInputError
from gradflow.models.oracles import Distance, EnergyOracle, SlopeEstimate
from gradflow.models.trajectory import DissipationReport, Trajectory

logger = logging.getLogger(__name__)


def euclidean_distance(a: Any, b: Any) -> float:
    """Euclidean distance between two array-like states."""
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def _finite_distance(distance: Distance, a: Any, b: Any) -> float:
    d = float(distance(a, b))
    if not math.isfinite(d) or d < 0:
        raise InvalidInputError(f"Distance evaluated to {d}")
    return d


def metric_derivative(traj: Trajectory, distance: Distance, k: int) -> float:
    """
    Finite-difference metric speed |v'|(t_k).

    Central difference inside the trajectory, one-sided at both ends.

    Args:
        traj: Sampled curve
        distance: Metric of the state space
        k: Sample index

    Returns:
        Nonnegative speed estimate

    Raises:
        InvalidInputError: If k is out of range, the trajectory has fewer than
            two samples, or the distance is not finite
    """
    n = len(traj)
    if n < 2:
        raise InvalidInputError("Metric derivative needs at least two samples")
    if not 0 <= k < n:
        raise InvalidInputError(f"Index {k} out of range for a trajectory of {n} samples")
    lo, hi = (k - 1, k + 1) if 0 < k < n - 1 else ((0, 1) if k == 0 else (n - 2, n - 1))
    d = _finite_distance(distance, traj.states[lo], traj.states[hi])
    return d / (traj.times[hi] - traj.times[lo])


def arc_length(traj: Trajectory, distance: Distance) -> float:
    """
    Polygonal length sum_k d(v(t_k), v(t_k+1)).

    This is a lower bound for the length of the underlying curve and does not
    depend on the time stamps.
    """
    if len(traj) < 2:
        raise InvalidInputError("Arc length needs at least two samples")
    return float(sum(
        _finite_distance(distance, a, b) for a, b in zip(traj.states, traj.states[1:])
    ))


def default_probes(v: Any, radius: Optional[float] = None) -> List[np.ndarray]:
    """
    Coordinate probes around an array state.

    2*dim directions at radii r, r/2, r/4 with r = SLOPE_PROBE_REL * max(1, |v|).
    """
    x = np.asarray(v, dtype=float)
    if radius is None:
        radius = Config.SLOPE_PROBE_REL * max(1.0, float(np.linalg.norm(x)))
    probes = []
    for r in (radius, radius / 2, radius / 4):
        for i in range(x.size):
            for sign in (1.0, -1.0):
                u = x.copy().reshape(-1)
                u[i] += sign * r
                probes.append(u.reshape(x.shape))
    return probes


def slope_estimate(oracle: EnergyOracle, v: Any, probes: Optional[Sequence[Any]] = None,
                   distance: Distance = euclidean_distance) -> SlopeEstimate:
    """
    Lower bound for the descending slope from the sup representation.

    value = max over probes u of [(E(v) - E(u))/d(v,u) + (lam/2) d(v,u)]^+,
    which never exceeds |D^-E|(v) for lam-geodesically convex E.

    Args:
        oracle: Energy oracle; lam = 0 is used when oracle.lam is None
        v: State at which the slope is estimated
        probes: Comparison states; coordinate probes are built for arrays when None
        distance: Metric of the state space

    Returns:
        SlopeEstimate with the value and whether the convexity modulus was declared

    Raises:
        InvalidInputError: If every probe sits at distance 0 or energies are not finite
    """
    if probes is None:
        probes = default_probes(v)
    lam = 0.0 if oracle.lam is None else float(oracle.lam)
    if oracle.lam is None:
        logger.debug("Slope estimate with lam=0 (convexity-unverified)")
    Ev = float(oracle.eval(v))
    if not math.isfinite(Ev):
        raise InvalidInputError("Energy at the base state is not finite")
    best = 0.0
    used = 0
    for u in probes:
        d = _finite_distance(distance, v, u)
        if d == 0.0:
            continue
        Eu = float(oracle.eval(u))
        if math.isnan(Eu) or Eu == -math.inf:
            raise InvalidInputError("Probe energy is not a valid extended real")
        used += 1
        if Eu == math.inf:
            continue
        best = max(best, (Ev - Eu) / d + 0.5 * lam * d)
    if used == 0:
        raise InvalidInputError("All slope probes are at distance 0 from the state")
    return SlopeEstimate(value=best, lam_used=lam, convexity_verified=oracle.lam is not None)


def check_dissipation(traj: Trajectory, p: float, distance: Distance,
                      tau_mono: Optional[float] = None) -> List[DissipationReport]:
    """
    Energy dissipation balance on every sampling interval.

    On [t_k, t_k+1] the metric term is (1/p) (d_k/dt)^p dt with the interval
    speed d_k/dt, and the slope term is the trapezoid rule for (1/p') g^p'.

    Args:
        traj: Trajectory with slopes at every sample
        p: Flow exponent (> 1)
        distance: Metric of the state space
        tau_mono: Absolute monotonicity slack; defaults to TAU_MONO_REL * max(1, |E(v0)|)

    Returns:
        One report per interval

    Raises:
        InvalidInputError: On missing slopes or p <= 1
    """
    if not p > 1:
        raise InvalidInputError(f"p must exceed 1, got {p}")
    if len(traj) < 2:
        raise InvalidInputError("Dissipation check needs at least two samples")
    if not traj.has_slopes():
        raise InvalidInputError("Dissipation check needs slopes at every sample")
    q = p / (p - 1.0)
    if tau_mono is None:
        tau_mono = Config.TAU_MONO_REL * max(1.0, abs(traj.energies[0]))
    reports = []
    for k in range(len(traj) - 1):
        s, t = traj.times[k], traj.times[k + 1]
        dt = t - s
        d = _finite_distance(distance, traj.states[k], traj.states[k + 1])
        lhs = traj.energies[k] - traj.energies[k + 1]
        metric_term = (d / dt) ** p * dt / p
        slope_term = 0.5 * dt * (traj.slopes[k] ** q + traj.slopes[k + 1] ** q) / q
        reports.append(DissipationReport(
            interval=(s, t),
            lhs=lhs,
            metric_term=metric_term,
            slope_term=slope_term,
            residual=lhs - metric_term - slope_term,
            energy_increase=bool(-lhs > tau_mono),
        ))
    return reports


def total_residual(reports: Sequence[DissipationReport]) -> float:
    """Signed sum of interval residuals."""
    return float(sum(r.residual for r in reports))


def relative_entropy(oracle: EnergyOracle, v: Any) -> float:
    """
    E(v | phi) = E(v) - E(phi).

    Raises:
        InvalidInputError: If E(v) or E(phi) is not finite
    """
    Ev = float(oracle.eval(v))
    if not math.isfinite(Ev):
        raise InvalidInputError("Energy is infinite at the given state")
    Ephi = oracle.equilibrium_energy()
    if not math.isfinite(Ephi):
        raise InvalidInputError("Energy is infinite at the equilibrium")
    return Ev - Ephi
