"""
Smooth energies on R^n: a small registry, the straight-line talweg and an
empirical Lyapunov-stability probe.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize

from gradflow import core, mms
from gradflow.config import get_config
from gradflow.errors import InvalidInputError
from gradflow.klcert import ball_points
from gradflow.models.certificates import LSFit
from gradflow.models.oracles import EnergyOracle, MMConfig, ProxOracle
from gradflow.models.smooth import SmoothEnergy, StabilityReport, TalwegReport

logger = logging.getLogger(__name__)


def _vec(x: Any) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(-1)


# Registry

def quadratic(Q: Optional[Sequence[Sequence[float]]] = None, b: Optional[Sequence[float]] = None,
              dim: int = 2) -> SmoothEnergy:
    """E(x) = x^T Q x / 2 - b^T x with symmetric Q (identity by default; a vector means diag(Q))."""
    Q = np.eye(dim) if Q is None else np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q = np.diag(Q)
    if Q.shape[0] != Q.shape[1] or not np.allclose(Q, Q.T):
        raise InvalidInputError(f"Q must be a symmetric square matrix, got shape {Q.shape}")
    dim = Q.shape[0]
    b = np.zeros(dim) if b is None else _vec(b)
    if b.size != dim:
        raise InvalidInputError(f"b has length {b.size}, expected {dim}")
    lam = float(np.linalg.eigvalsh(Q).min())
    minimizer = np.linalg.solve(Q, b) if lam > 0 else None
    return SmoothEnergy('quadratic', dim,
                        value=lambda x: float(0.5 * _vec(x) @ Q @ _vec(x) - b @ _vec(x)),
                        gradient=lambda x: Q @ _vec(x) - b,
                        hessian=lambda x: Q,
                        lam=lam, minimizer=minimizer,
                        params={'Q': Q.tolist(), 'b': b.tolist()})


def quartic(dim: int = 2, scale: float = 0.25) -> SmoothEnergy:
    """E(x) = scale |x|^4; degenerate minimum at 0."""
    return SmoothEnergy('quartic', dim,
                        value=lambda x: float(scale * np.sum(_vec(x) ** 2) ** 2),
                        gradient=lambda x: 4.0 * scale * np.sum(_vec(x) ** 2) * _vec(x),
                        hessian=lambda x: 4.0 * scale * (np.sum(_vec(x) ** 2) * np.eye(dim)
                                                          + 2.0 * np.outer(_vec(x), _vec(x))),
                        lam=0.0, minimizer=np.zeros(dim),
                        params={'scale': scale})


def coscup(dim: int = 2) -> SmoothEnergy:
    """E(x) = 1 - cos|x|: a nonconvex cup whose basin is |x| < pi."""
    def gradient(x):
        x = _vec(x)
        return np.sinc(np.linalg.norm(x) / np.pi) * x

    def hessian(x):
        x = _vec(x)
        r = float(np.linalg.norm(x))
        if r < 1e-8:
            return np.eye(dim)
        s = math.sin(r) / r
        return s * np.eye(dim) + (math.cos(r) - s) / r ** 2 * np.outer(x, x)

    return SmoothEnergy('coscup', dim,
                        value=lambda x: float(1.0 - math.cos(np.linalg.norm(_vec(x)))),
                        gradient=gradient, hessian=hessian,
                        lam=None, minimizer=np.zeros(dim))


def saddle() -> SmoothEnergy:
    """E(x, y) = x^2 - y^2; the origin is critical but not a minimum."""
    H = np.diag([2.0, -2.0])
    return SmoothEnergy('saddle', 2,
                        value=lambda x: float(_vec(x)[0] ** 2 - _vec(x)[1] ** 2),
                        gradient=lambda x: H @ _vec(x),
                        hessian=lambda x: H,
                        lam=None, minimizer=None)


def polynomial(coeffs: Sequence[float], dim: int = 2,
               minimizer: Optional[Sequence[float]] = None) -> SmoothEnergy:
    """Separable E(x) = sum_i P(x_i) with P given by increasing-degree coefficients."""
    P = Polynomial(np.asarray(coeffs, dtype=float))
    dP, d2P = P.deriv(1), P.deriv(2)
    return SmoothEnergy('polynomial', dim,
                        value=lambda x: float(np.sum(P(_vec(x)))),
                        gradient=lambda x: dP(_vec(x)),
                        hessian=lambda x: np.diag(d2P(_vec(x))),
                        lam=None,
                        minimizer=None if minimizer is None else _vec(minimizer),
                        params={'coeffs': list(map(float, coeffs))})


REGISTRY: Dict[str, Callable[..., SmoothEnergy]] = {
    'quadratic': quadratic,
    'quartic': quartic,
    'coscup': coscup,
    'saddle': saddle,
    'polynomial': polynomial,
}


def gradient_error(E: SmoothEnergy, rng: np.random.Generator, n_probes: int = 8,
                   radius: float = 1.0) -> float:
    """Worst relative error between E' and central differences of E on random probes."""
    worst = 0.0
    for _ in range(n_probes):
        x = radius * rng.standard_normal(E.dim)
        g = E.gradient(x)
        fd = np.empty(E.dim)
        for i in range(E.dim):
            h = 1e-6 * (1.0 + abs(x[i]))
            e = np.zeros(E.dim)
            e[i] = h
            fd[i] = (E.value(x + e) - E.value(x - e)) / (2.0 * h)
        worst = max(worst, float(np.linalg.norm(g - fd) / max(1.0, float(np.linalg.norm(g)))))
    return worst


def smooth_energy(name: str, seed: int = 0, **params: Any) -> SmoothEnergy:
    """
    Build a registered energy and check its gradient against finite differences.

    Raises:
        InvalidInputError: Unknown name, or a gradient off by more than 1e-5 relative
    """
    try:
        builder = REGISTRY[name]
    except KeyError:
        raise InvalidInputError(
            f"Unknown smooth energy '{name}'. Must be one of: {', '.join(sorted(REGISTRY))}"
        ) from None
    E = builder(**params)
    err = gradient_error(E, np.random.default_rng(seed))
    if err > 1e-5:
        raise InvalidInputError(f"Gradient of '{name}' disagrees with finite differences (relative error {err:.2e})")
    logger.debug("Loaded %r, gradient check %.2e", E, err)
    return E


def oracle(E: SmoothEnergy, phi: Optional[Sequence[float]] = None) -> EnergyOracle:
    eq = E.minimizer if phi is None else _vec(phi)
    return EnergyOracle(eval=E.value, equilibrium=eq, lam=E.lam, slope=E.slope)


def euclidean_prox(E: SmoothEnergy, profile: Optional[str] = None) -> ProxOracle:
    """Minimizing-movement step in R^n by BFGS on |x - v|^p/(p tau^(p-1)) + E(x)."""
    cfg = get_config(profile)

    def solve(tau: float, v: np.ndarray, p: float) -> np.ndarray:
        v = _vec(v)

        def phi(x):
            return E.value(x) + float(np.linalg.norm(x - v)) ** p / (p * tau ** (p - 1.0))

        def dphi(x):
            d = x - v
            n = float(np.linalg.norm(d))
            scale = n ** (p - 2.0) / tau ** (p - 1.0) if n > 0 else (1.0 / tau if p == 2 else 0.0)
            return E.gradient(x) + scale * d

        res = minimize(phi, v.copy(), jac=dphi, method='BFGS', options={'gtol': 1e-12, 'maxiter': 500})
        return res.x if res.fun <= phi(v) else v

    return ProxOracle(solve=solve, tolerance=cfg.PROX_GAP_REL, distance=core.euclidean_distance)


# Straight-line talweg

def smooth_line_talweg(E: SmoothEnergy, phi: Sequence[float], v0: Sequence[float], delta: float = 1.0,
                       n: int = 64, n_ball: int = 512, seed: int = 0) -> TalwegReport:
    """
    Tabulate h(r) = E(phi + r (v0 - phi) | phi) on (0, delta] and fit the
    Łojasiewicz-Simon constant at alpha = 1/2.

    The constant C is the smallest value with 1 <= C |E'(v)| E(v|phi)^(-1/2)
    over the line and a seeded ball B(phi, delta |v0 - phi|). C_h is the
    smallest value with r <= C_h h(r)^(1/2) along the table; h^(-1) is then a
    desingularizing function.

    Args:
        E: Smooth energy
        phi: Local minimum
        v0: Point fixing the direction of the line
        delta: Largest line parameter
        n: Table size
        n_ball: Number of ball samples
        seed: Ball sampling seed

    Returns:
        TalwegReport; status FAIL when h is not strictly increasing

    Raises:
        InvalidInputError: If v0 == phi, delta <= 0 or the declared Hessian at phi is singular
    """
    phi, v0 = _vec(phi), _vec(v0)
    e = v0 - phi
    length = float(np.linalg.norm(e))
    if length == 0:
        raise InvalidInputError("Degenerate direction: v0 equals phi")
    if not delta > 0:
        raise InvalidInputError(f"delta must be positive, got {delta}")
    taylor_limit = None
    if E.hessian is not None:
        H = np.atleast_2d(E.hessian(phi))
        if np.linalg.matrix_rank(H) < E.dim:
            raise InvalidInputError(f"Hessian of '{E.name}' at phi is singular")
        taylor_limit = 0.5 * float(e @ H @ e)

    E_phi = E.value(phi)
    r = delta * np.arange(1, n + 1) / n
    line = phi + r[:, None] * e
    h = np.array([E.value(x) - E_phi for x in line])
    monotone = bool(h[0] > 0 and np.all(np.diff(h) > 0))
    if not monotone:
        logger.warning("h(r) is not strictly increasing on (0, %g] for %r", delta, E)

    pts = np.vstack([line, ball_points(phi, delta * length, n_ball, np.random.default_rng(seed))])
    rel = np.array([E.value(x) - E_phi for x in pts])
    slopes = np.array([E.slope(x) for x in pts])
    use = (rel > 0) & (slopes > 0)
    ls_constant = float(np.max(np.sqrt(rel[use]) / slopes[use])) if use.any() else math.inf
    pos = h > 0
    inverse_h = float(np.max(r[pos] / np.sqrt(h[pos]))) if pos.any() else math.inf

    deltas = delta / 2.0 ** np.arange(10)
    ratios = np.array([(E.value(phi + d * e) - E_phi) / d ** 2 for d in deltas])
    cert = LSFit(alpha=0.5, c=ls_constant, worst_ratio=ls_constant, n_samples=int(use.sum()))
    report = TalwegReport(r=r, h=h, monotone=monotone, ls_constant=ls_constant, inverse_h_constant=inverse_h,
                          taylor_ratios=ratios, taylor_limit=taylor_limit, certificate=cert,
                          n_ball=int(n_ball))
    logger.info("Line talweg for %s: %r", E.name, report)
    return report


# Stability

def stability_probe(E: SmoothEnergy, phi: Sequence[float], eps: float,
                    deltas: Optional[Sequence[float]] = None, tau: float = 0.05, horizon: float = 2.0,
                    p: float = 2.0, seed: int = 0, profile: Optional[str] = None) -> StabilityReport:
    """
    Run minimizing movements from 16 * dim seeded points on each sphere
    |v - phi| = delta and record the largest excursion from phi.

    The verdict is STABLE(eps) when some delta keeps every excursion below eps.
    The local-minimum probe compares E on the sampled spheres with E(phi).

    Raises:
        InvalidInputError: If eps or a delta is not positive
        FlowAbortedError: Propagated from a failing flow
    """
    if not eps > 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")
    phi = _vec(phi)
    deltas = sorted([eps / 2.0, eps / 4.0, eps / 8.0] if deltas is None else [float(d) for d in deltas],
                    reverse=True)
    if any(d <= 0 for d in deltas):
        raise InvalidInputError(f"Starting radii must be positive, got {deltas}")
    rng = np.random.default_rng(seed)
    n_starts = 16 * E.dim
    directions = rng.standard_normal((n_starts, E.dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    prox, orc = euclidean_prox(E, profile), oracle(E, phi)
    cfg = MMConfig(p=p, tau=tau, horizon=horizon, refine_levels=1, record_slopes=False)
    E_phi = E.value(phi)

    excursions: List[float] = []
    gap = math.inf
    for delta in deltas:
        worst = 0.0
        for start in phi + delta * directions:
            gap = min(gap, E.value(start) - E_phi)
            traj = mms.evolve(prox, orc, start, cfg)
            worst = max(worst, max(float(np.linalg.norm(v - phi)) for v in traj.states))
        excursions.append(worst)
        logger.debug("delta=%g max excursion=%.4g", delta, worst)
    stable = [d for d, x in zip(deltas, excursions) if x < eps]
    report = StabilityReport(eps=eps, deltas=deltas, excursions=excursions,
                             stable_delta=max(stable) if stable else None,
                             local_min_gap=gap, n_starts=n_starts)
    logger.info("Stability probe %s at %s: %r", E.name, phi.tolist(), report)
    return report
