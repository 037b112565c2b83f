"""Closed-form decay and extinction predictions from a Łojasiewicz-Simon inequality."""

import itertools
import logging
import math
from typing import Iterable, List, Optional, Sequence

import numpy as np

from gradflow.errors import InvalidInputError
from gradflow.models.certificates import Status
from gradflow.models.decay import DecayComparison, DecayPrediction, Regime
from gradflow.models.trajectory import Trajectory

logger = logging.getLogger(__name__)


def classify(p: float, alpha: float) -> Regime:
    """Regime from alpha against 1/p; alpha p == 1 (to rounding) is exponential."""
    if math.isclose(alpha * p, 1.0, rel_tol=1e-12, abs_tol=1e-12):
        return Regime.EXPONENTIAL
    return Regime.POLYNOMIAL if alpha * p < 1.0 else Regime.EXTINCTION


def _validate(p: float, alpha: float, c: float, E0: float) -> None:
    if not p > 1:
        raise InvalidInputError(f"p must exceed 1, got {p}")
    if not 0 < alpha <= 1:
        raise InvalidInputError(f"alpha must lie in (0, 1], got {alpha}")
    if not c > 0:
        raise InvalidInputError(f"c must be positive, got {c}")
    if not E0 >= 0 or not math.isfinite(E0):
        raise InvalidInputError(f"E0 must be finite and nonnegative, got {E0}")


def stated_deadline(p: float, alpha: float, c: float, t0: float, E0: float) -> float:
    """
    Extinction deadline in its displayed closed form.

    t0 + alpha^((alpha-1)/(alpha(p-1))) c^(1/(alpha(p-1))) alpha(p-1)/(p alpha - 1)
    * E0^((p alpha - 1)/(alpha(p-1))). Only meaningful for p alpha > 1.
    """
    a_p = alpha * (p - 1.0)
    return (t0
            + alpha ** ((alpha - 1.0) / a_p)
            * c ** (1.0 / a_p)
            * a_p / (p * alpha - 1.0)
            * E0 ** ((p * alpha - 1.0) / a_p))


def predict(p: float, alpha: float, c: float, t0: float, E0: float) -> DecayPrediction:
    """
    Decay prediction for a flow satisfying E(v|phi)^(1-alpha) <= c g(v) after t0.

    The distance to phi is bounded by H(t) = (c/alpha) E(v(t)|phi)^alpha, which obeys
    H' <= -K H^gamma with K = [1/(alpha^(alpha-1) c)]^((p'-1)/alpha) and
    gamma = (1-alpha)/(alpha(p-1)). Integrating gives:

    * extinction (p alpha > 1): H(t) <= c_tilde (t_hat - t)^(1/kappa), kappa = 1 - gamma
    * exponential (p alpha = 1): H(t) <= H0 exp(-(t - t0)/(p c^p'))
    * polynomial (p alpha < 1): H(t) <= [K beta (t - t0) + H0^(-beta)]^(-1/beta), beta = gamma - 1

    Args:
        p: Flow exponent (> 1)
        alpha: Łojasiewicz exponent in (0, 1]
        c: Łojasiewicz constant (> 0)
        t0: Entry time into the region where the inequality holds
        E0: E(v(t0)|phi) >= 0

    Returns:
        DecayPrediction with bound(t0) = (c/alpha) E0^alpha

    Raises:
        InvalidInputError: On parameters outside their ranges
    """
    _validate(p, alpha, c, E0)
    q = p / (p - 1.0)
    regime = classify(p, alpha)
    K = (1.0 / (alpha ** (alpha - 1.0) * c)) ** ((q - 1.0) / alpha)
    H0 = (c / alpha) * E0 ** alpha
    kappa = (p * alpha - 1.0) / (alpha * (p - 1.0))
    pred = DecayPrediction(regime=regime, p=p, alpha=alpha, c=c, t0=t0, E0=E0, K=K, H0=H0, kappa=kappa)
    if regime is Regime.EXTINCTION:
        pred.t_hat = t0 + H0 ** kappa / (K * kappa)
        pred.c_tilde = (K * kappa) ** (1.0 / kappa)
        pred.t_hat_stated = stated_deadline(p, alpha, c, t0, E0)
    elif regime is Regime.EXPONENTIAL:
        pred.rate = 1.0 / (p * c ** q)
    else:
        pred.meta['anchoring'] = 'bound(t0) = (c/alpha) E0^alpha; envelope integrated exactly'
        pred.meta['decay_exponent'] = alpha * (p - 1.0) / (1.0 - p * alpha)
    logger.debug("Prediction %r", pred)
    return pred


def et_envelope(alpha: float, c: float, E: float) -> float:
    """Entropy-transport envelope |v - phi| <= (c/alpha) E^alpha."""
    return (c / alpha) * max(E, 0.0) ** alpha


def predict_hilbert(alpha: float, c: float, t0: float, E0: float) -> DecayPrediction:
    """
    Hilbert-space specialisation p = 2.

    The returned prediction records the entropy-transport envelope at t0 in
    its metadata.
    """
    pred = predict(2.0, alpha, c, t0, E0)
    pred.meta['space'] = 'hilbert'
    pred.meta['et_envelope_t0'] = et_envelope(alpha, c, E0)
    return pred


def compare(pred: DecayPrediction, traj: Trajectory, distance_to_phi: Sequence[float],
            tol: float = 0.0, t_star: Optional[float] = None) -> DecayComparison:
    """
    Per-sample slack bound(t_k) - d(v(t_k), phi) for samples with t_k >= t0.

    Args:
        pred: Prediction to test
        traj: Trajectory whose time stamps index the distances
        distance_to_phi: Measured distances, one per sample
        tol: Comparison tolerance (a couple of grid or step resolutions)
        t_star: Measured extinction time; checked against t_hat in the extinction regime

    Returns:
        DecayComparison, PASS iff every slack >= -tol and the deadline holds

    Raises:
        InvalidInputError: On a length mismatch or when the trajectory ends before t0
    """
    measured = np.asarray(distance_to_phi, dtype=float)
    if measured.size != len(traj):
        raise InvalidInputError(f"Expected {len(traj)} distances, got {measured.size}")
    times = traj.t
    if not times.size or times[-1] < pred.t0:
        raise InvalidInputError(f"Trajectory ends before the prediction starts at t0={pred.t0}")
    keep = times >= pred.t0 - 1e-15
    times, measured = times[keep], measured[keep]
    bound = pred.bound(times)
    slack = bound - measured
    ok = bool(np.all(slack >= -tol))
    deadline_ok = None
    if pred.regime is Regime.EXTINCTION and t_star is not None:
        deadline_ok = bool(t_star <= pred.t_hat + tol)
        ok = ok and deadline_ok
    return DecayComparison(times=times, bound=bound, measured=measured, slack=slack, tolerance=tol,
                           status=Status.of(ok), t_star=t_star, t_hat=pred.t_hat, deadline_ok=deadline_ok)


def extinction_profile(traj: Trajectory, C: float, equilibrium_energy: float = 0.0) -> np.ndarray:
    """s + C E(v(s)|phi) at every sample s."""
    if not C > 0:
        raise InvalidInputError(f"Constant must be positive, got {C}")
    if len(traj) == 0:
        raise InvalidInputError("Empty trajectory")
    return traj.t + C * (traj.E - equilibrium_energy)


def extinction_bound_inf(traj: Trajectory, C: float, equilibrium_energy: float = 0.0) -> float:
    """
    min over sampled s of s + C E(v(s)|phi).

    Args:
        traj: Trajectory with energies
        C: Sobolev or Poincaré-Sobolev constant of the instance
        equilibrium_energy: E(phi)

    Returns:
        Upper bound for the extinction time restricted to the sample grid
    """
    return float(extinction_profile(traj, C, equilibrium_energy).min())


def prediction_table(ps: Iterable[float], alphas: Iterable[float], cs: Iterable[float],
                     E0s: Iterable[float], t0: float = 0.0) -> List[DecayPrediction]:
    """Predictions over the Cartesian product of parameter lists."""
    return [predict(p, a, c, t0, e)
            for p, a, c, e in itertools.product(list(ps), list(alphas), list(cs), list(E0s))]
