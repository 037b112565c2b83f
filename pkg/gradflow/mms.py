"""Minimizing-movement engine over a proximal oracle."""

import logging
import math
from dataclasses import replace
from typing import Any, Callable, Optional

import numpy as np

from gradflow import core
from gradflow.errors import FlowAbortedError, GradflowError, InvalidInputError, ProxToleranceError
from gradflow.models.oracles import Distance, EnergyOracle, MMConfig, ProxOracle
from gradflow.models.trajectory import RefinementStudy, Trajectory

logger = logging.getLogger(__name__)


def step_functional(oracle: EnergyOracle, distance: Distance, tau: float, base: Any,
                    w: Any, p: float) -> float:
    """Phi_p(tau, base; w) = d(base, w)^p / (p tau^(p-1)) + E(w)."""
    return float(oracle.eval(w)) + float(distance(base, w)) ** p / (p * tau ** (p - 1.0))


def mm_step(prox: ProxOracle, oracle: EnergyOracle, tau: float, v: Any, p: float) -> Any:
    """
    One implicit step v -> argmin Phi_p(tau, v; .).

    The returned state is accepted only if it is not worse than staying put:
    Phi_p(tau, v; v+) <= E(v) + tolerance, tolerance = prox.tolerance * max(1, |E(v)|).

    Args:
        prox: Proximal solver
        oracle: Energy oracle
        tau: Step size
        v: Current state
        p: Flow exponent

    Returns:
        The next state

    Raises:
        InvalidInputError: If tau <= 0 or E(v) is not finite
        ProxToleranceError: If the proximal point misses the tolerance
    """
    if not tau > 0:
        raise InvalidInputError(f"Step size must be positive, got {tau}")
    Ev = float(oracle.eval(v))
    if not math.isfinite(Ev):
        raise InvalidInputError("Energy of the base state is not finite")
    v_next = prox.solve(tau, v, p)
    value = step_functional(oracle, prox.distance, tau, v, v_next, p)
    tolerance = prox.tolerance * max(1.0, abs(Ev))
    gap = value - Ev
    if not gap <= tolerance:
        raise ProxToleranceError(
            f"Proximal step is worse than staying put by {gap:.3e} (tolerance {tolerance:.3e})",
            gap=gap, tolerance=tolerance,
        )
    return v_next


def _slope_at(oracle: EnergyOracle, state: Any, slope_fn: Optional[Callable[[Any], float]]) -> Optional[float]:
    if slope_fn is not None:
        return float(slope_fn(state))
    if oracle.slope is not None:
        return float(oracle.slope(state))
    if isinstance(state, (np.ndarray, float, int, list, tuple)):
        return core.slope_estimate(oracle, state).value
    return None


def evolve(prox: ProxOracle, oracle: EnergyOracle, v0: Any, cfg: MMConfig,
           slope_fn: Optional[Callable[[Any], float]] = None, space_id: str = 'euclidean') -> Trajectory:
    """
    Run minimizing movements on the uniform partition k * tau up to the horizon.

    Args:
        prox: Proximal solver
        oracle: Energy oracle
        v0: Initial state
        cfg: Step, horizon and slope recording settings
        slope_fn: Upper gradient to record; defaults to oracle.slope, then to
            the probe-based slope estimate for array states
        space_id: Tag stored on the trajectory

    Returns:
        Piecewise-constant trajectory with samples at k * tau

    Raises:
        InvalidInputError: If E(v0) is not finite
        FlowAbortedError: If a step fails; the samples so far are attached
    """
    E0 = float(oracle.eval(v0))
    if not math.isfinite(E0):
        raise InvalidInputError("Energy of the initial state is not finite")

    def slope(state):
        return _slope_at(oracle, state, slope_fn) if cfg.record_slopes else None

    traj = Trajectory(space_id=space_id, meta={'p': cfg.p, 'tau': cfg.tau, 'solver': 'minimizing-movement'})
    traj.append(0.0, v0, E0, slope(v0))
    logger.info("Minimizing movements: p=%g tau=%g steps=%d", cfg.p, cfg.tau, cfg.steps)
    v = v0
    for k in range(1, cfg.steps + 1):
        try:
            v = mm_step(prox, oracle, cfg.tau, v, cfg.p)
            E = float(oracle.eval(v))
            traj.append(k * cfg.tau, v, E, slope(v))
        except GradflowError as exc:
            logger.warning("Minimizing movements aborted at step %d: %s", k, exc)
            raise FlowAbortedError(f"Step {k} failed: {exc}", partial=traj, cause=exc) from exc
        logger.debug("step %d t=%g E=%.12g", k, k * cfg.tau, E)
    logger.info("Minimizing movements finished: E(T)=%.10g", traj.energies[-1])
    return traj


def discrete_dissipation(traj: Trajectory, p: float, distance: Distance) -> float:
    """Sum over steps of d(v_k, v_k+1)^p / (p tau_k^(p-1))."""
    total = 0.0
    for k in range(len(traj) - 1):
        tau = traj.times[k + 1] - traj.times[k]
        total += float(distance(traj.states[k], traj.states[k + 1])) ** p / (p * tau ** (p - 1.0))
    return total


def refine_study(prox: ProxOracle, oracle: EnergyOracle, v0: Any, cfg: MMConfig,
                 slope_fn: Optional[Callable[[Any], float]] = None) -> RefinementStudy:
    """
    Cauchy study over step sizes tau, tau/2, ..., tau/2^(levels-1).

    Consecutive levels are compared on the coarser grid, where level i+1
    sample 2k sits at the same time as level i sample k. Every level runs
    to the horizon of the coarsest one, steps * tau, so level i takes
    exactly steps * 2^i steps.

    Raises:
        InvalidInputError: If fewer than two levels are requested
        FlowAbortedError: Propagated from evolve
    """
    if cfg.refine_levels < 2:
        raise InvalidInputError(f"A refinement study needs at least 2 levels, got {cfg.refine_levels}")
    horizon = cfg.steps * cfg.tau
    taus, levels = [], []
    for level in range(cfg.refine_levels):
        level_cfg = replace(cfg, tau=cfg.tau / 2 ** level, horizon=horizon)
        taus.append(level_cfg.tau)
        levels.append(evolve(prox, oracle, v0, level_cfg, slope_fn=slope_fn))
    distances = []
    for coarse, fine in zip(levels, levels[1:]):
        distances.append(max(
            float(prox.distance(coarse.states[k], fine.states[2 * k])) for k in range(len(coarse))
        ))
    contracting = [b <= a + 1e-14 for a, b in zip(distances, distances[1:])]
    if not all(contracting):
        logger.warning("Refinement study is not contracting: %s", distances)
    return RefinementStudy(taus=taus, levels=levels, distances=distances, contracting=contracting)
