"""
One-dimensional p-Wasserstein gradient flows in quantile coordinates.

A measure is stored as midpoint samples X_j = X((j - 1/2)/M) of its quantile
function. W_p is then an explicit average, the free energy is a sum over gap
densities rho_{j+1/2} = 1/(M (X_{j+1} - X_j)), and its gradient gives the
Wasserstein velocity xi exactly. Implicit steps are solved by damped Newton on
the tridiagonal Hessian; without an internal energy the cone constraint is
handled by isotonic projection.
"""

import functools
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solveh_banded
from scipy.optimize import isotonic_regression
from scipy.special import beta as beta_fn
from scipy.special import betaincinv
from scipy.stats import norm

from gradflow import mms
from gradflow.config import Config, get_config
from gradflow.errors import ConvexityError, DensityError, EquilibriumError, InvalidInputError
from gradflow.models.certificates import Status
from gradflow.models.measures import (
    DecayAudit, FisherInfo, FreeEnergySpec, InequalityAudit, InequalityRecord, Interaction,
    InternalEnergy, JKOInfo, Potential, QuantileRepr,
)
from gradflow.models.oracles import EnergyOracle, MMConfig, ProxOracle
from gradflow.models.trajectory import Trajectory

logger = logging.getLogger(__name__)

_ARMIJO = 1e-4
_MAX_BACKTRACK = 60


def _as_array(X: Any) -> np.ndarray:
    if isinstance(X, QuantileRepr):
        return X.X
    return np.asarray(X, dtype=float).reshape(-1)


def conjugate(p: float) -> float:
    """Hölder conjugate p' = p/(p - 1)."""
    if not p > 1:
        raise InvalidInputError(f"p must exceed 1, got {p}")
    return p / (p - 1.0)


def gap_min(X: Any, cfg: Optional[type] = None) -> float:
    """Smallest admissible gap, GAP_MIN_REL * (support width) / M."""
    x = _as_array(X)
    cfg = cfg or Config
    return cfg.GAP_MIN_REL * max(float(x[-1] - x[0]), 1e-300) / x.size


def wasserstein_p(X1: Any, X2: Any, p: float = 2.0) -> float:
    """
    W_p between two quantile representatives: ((1/M) sum |X1_j - X2_j|^p)^(1/p).

    Raises:
        InvalidInputError: On different sample counts or p < 1
    """
    a, b = _as_array(X1), _as_array(X2)
    if a.size != b.size:
        raise InvalidInputError(f"Quantile sample counts differ: {a.size} != {b.size}")
    if not p >= 1:
        raise InvalidInputError(f"p must be at least 1, got {p}")
    return float(np.mean(np.abs(a - b) ** p) ** (1.0 / p))


# Energy and its derivatives in quantile coordinates

def _gap_densities(x: np.ndarray) -> np.ndarray:
    return 1.0 / (x.size * np.diff(x))


def _internal(F: InternalEnergy, x: np.ndarray, gmin: float) -> float:
    gaps = np.diff(x)
    if np.any(gaps < gmin):
        if F.superlinear:
            return math.inf
        raise DensityError(f"Quantile gap {gaps.min():.3e} below gap_min {gmin:.3e}")
    rho = 1.0 / (x.size * gaps)
    return float(np.sum(gaps * F.F(rho)))


def _interaction(W: Interaction, x: np.ndarray) -> float:
    diff = x[:, None] - x[None, :]
    return float(np.sum(W.W(diff)) / (2.0 * x.size ** 2))


def free_energy(spec: FreeEnergySpec, X: Any) -> float:
    """
    E = H_F + H_V + H_W of a quantile representative.

    H_F = sum_j Delta_j F(rho_{j+1/2}), H_V = (1/M) sum V(X_j) and
    H_W = (1/(2M^2)) sum_jk W(X_j - X_k).

    Returns:
        The energy; +inf when a sample leaves the domain of V, or when a gap
        falls below gap_min and F is superlinear

    Raises:
        DensityError: Gap below gap_min for an F without superlinear growth
    """
    x = _as_array(X)
    total = 0.0
    if spec.V is not None:
        if not spec.V.contains(x):
            return math.inf
        total += float(np.mean(spec.V.V(x)))
    if spec.F is not None:
        total += _internal(spec.F, x, gap_min(x))
        if math.isinf(total):
            return total
    if spec.W is not None:
        total += _interaction(spec.W, x)
    return total


def _velocity(spec: FreeEnergySpec, x: np.ndarray) -> np.ndarray:
    """xi_j = M (P(rho_{j+1/2}) - P(rho_{j-1/2})) + V'(X_j) + (1/M) sum_k W'(X_j - X_k)."""
    M = x.size
    xi = np.zeros(M)
    if spec.F is not None:
        P = spec.F.pressure(_gap_densities(x))
        padded = np.concatenate([[0.0], P, [0.0]])
        xi += M * np.diff(padded)
    if spec.V is not None:
        xi += spec.V.dV(x)
    if spec.W is not None:
        xi += np.sum(spec.W.dW(x[:, None] - x[None, :]), axis=1) / M
    return xi


def fisher_information(spec: FreeEnergySpec, X: Any, p_prime: float = 2.0, window: int = 0) -> FisherInfo:
    """
    Generalized Fisher information I_p' = (1/M) sum |xi_j|^p' and the slope I^(1/p').

    Args:
        spec: Free energy
        X: Quantile representative
        p_prime: Conjugate exponent of the flow
        window: Number of quantiles dropped at each end of the support. The
            end quantiles see the pressure jump at the support edge.

    Returns:
        FisherInfo with the kept fraction of the mass in windowed_mass

    Raises:
        DensityError: If a gap is below gap_min while F is present
        InvalidInputError: On p' <= 1 or a window that swallows every sample
    """
    x = _as_array(X)
    if not p_prime > 1:
        raise InvalidInputError(f"p' must exceed 1, got {p_prime}")
    if window < 0 or 2 * window >= x.size:
        raise InvalidInputError(f"Window {window} leaves no quantiles out of {x.size}")
    if spec.F is not None:
        gmin = gap_min(x)
        if np.any(np.diff(x) < gmin):
            raise DensityError(f"Cannot reconstruct the density: gap {np.diff(x).min():.3e} < {gmin:.3e}")
    xi = _velocity(spec, x)
    kept = xi[window:x.size - window]
    I = float(np.sum(np.abs(kept) ** p_prime) / x.size)
    return FisherInfo(I=I, slope=I ** (1.0 / p_prime), xi=xi, windowed_mass=kept.size / x.size)


def descending_slope(spec: FreeEnergySpec, X: Any, p: float = 2.0) -> float:
    return fisher_information(spec, X, conjugate(p)).slope


# Implicit step

class _StepProblem:
    """Phi(Y) = (1/(p tau^(p-1))) (1/M) sum |Y_j - X_j|^p + E(Y), with M-scaled derivatives."""

    def __init__(self, spec: FreeEnergySpec, x: np.ndarray, tau: float, p: float):
        self.spec = spec
        self.x = x
        self.tau = tau
        self.p = p
        self.M = x.size
        self.gmin = gap_min(x)
        self.reg = 1e-8 * (1.0 + float(np.max(np.abs(x))))

    def value(self, y: np.ndarray) -> float:
        E = self.energy(y)
        if math.isinf(self.tau) or math.isinf(E):
            return E
        return E + float(np.mean(np.abs(y - self.x) ** self.p)) / (self.p * self.tau ** (self.p - 1.0))

    def energy(self, y: np.ndarray) -> float:
        spec = self.spec
        total = 0.0
        if spec.V is not None:
            if not spec.V.contains(y):
                return math.inf
            total += float(np.mean(spec.V.V(y)))
        if spec.F is not None:
            if np.any(np.diff(y) < self.gmin):
                return math.inf
            total += _internal(spec.F, y, 0.0)
        if spec.W is not None:
            total += _interaction(spec.W, y)
        return total

    def gradient(self, y: np.ndarray) -> np.ndarray:
        g = _velocity(self.spec, y)
        if not math.isinf(self.tau):
            d = y - self.x
            if self.p == 2:
                g = g + d / self.tau
            else:
                g = g + np.sign(d) * np.abs(d) ** (self.p - 1.0) / self.tau ** (self.p - 1.0)
        return g

    def _transport_diag(self, y: np.ndarray) -> np.ndarray:
        if math.isinf(self.tau):
            return np.zeros(self.M)
        if self.p == 2:
            return np.full(self.M, 1.0 / self.tau)
        return (self.p - 1.0) * np.maximum(np.abs(y - self.x), self.reg) ** (self.p - 2.0) / self.tau ** (self.p - 1.0)

    def banded(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Diagonal and superdiagonal of the transport, F and V Hessian blocks."""
        diag = self._transport_diag(y)
        off = np.zeros(self.M - 1)
        if self.spec.V is not None:
            diag = diag + self.spec.V.d2V(y)
        if self.spec.F is not None:
            rho = _gap_densities(y)
            w = self.M ** 2 * rho ** 3 * self.spec.F.d2F(rho)
            diag[:-1] += w
            diag[1:] += w
            off -= w
        return diag, off

    def interaction_hessian(self, y: np.ndarray) -> Optional[np.ndarray]:
        if self.spec.W is None:
            return None
        K = -self.spec.W.d2W(y[:, None] - y[None, :]) / self.M
        np.fill_diagonal(K, 0.0)
        np.fill_diagonal(K, -K.sum(axis=1))
        return K

    def diag_hessian(self, y: np.ndarray) -> np.ndarray:
        diag, _ = self.banded(y)
        K = self.interaction_hessian(y)
        if K is not None:
            diag = diag + np.diag(K)
        return diag

    def max_step(self, y: np.ndarray, d: np.ndarray) -> float:
        """Largest fraction of d keeping gaps >= gap_min and samples inside the domain of V."""
        alpha = 1.0
        if self.spec.F is not None:
            dd = np.diff(d)
            shrinking = dd < 0
            if np.any(shrinking):
                room = (np.diff(y)[shrinking] - self.gmin) / -dd[shrinking]
                alpha = min(alpha, 0.99 * float(room.min()))
        if self.spec.V is not None and self.spec.V.domain is not None:
            lo, hi = self.spec.V.domain
            if np.any(d < 0):
                alpha = min(alpha, float(((y - lo)[d < 0] / -d[d < 0]).min()))
            if np.any(d > 0):
                alpha = min(alpha, float(((hi - y)[d > 0] / d[d > 0]).min()))
        return max(alpha, 0.0)


def _newton_direction(problem: _StepProblem, y: np.ndarray, g: np.ndarray) -> np.ndarray:
    diag, off = problem.banded(y)
    K = problem.interaction_hessian(y)
    shift = 0.0
    for _ in range(12):
        try:
            if K is None:
                ab = np.zeros((2, problem.M))
                ab[0, 1:] = off
                ab[1] = diag + shift
                d = solveh_banded(ab, -g)
            else:
                H = K + np.diag(diag + shift) + np.diag(off, 1) + np.diag(off, -1)
                d = cho_solve(cho_factor(H), -g)
            if np.all(np.isfinite(d)) and float(g @ d) < 0:
                return d
        except LinAlgError:
            pass
        shift = max(10.0 * shift, 1e-10 * (1.0 + float(np.max(np.abs(diag)))))
    return -g / np.maximum(np.abs(diag), 1e-12)


def _solve_newton(problem: _StepProblem, tol: float, max_iter: int) -> Tuple[np.ndarray, JKOInfo]:
    y = problem.x.copy()
    f = problem.value(y)
    residual = math.inf
    for it in range(max_iter + 1):
        g = problem.gradient(y)
        residual = float(np.max(np.abs(g)))
        if residual <= tol * (1.0 + abs(f)):
            return y, JKOInfo(iterations=it, residual=residual, status=Status.PASS, method='newton')
        if it == max_iter:
            break
        d = _newton_direction(problem, y, g)
        alpha = problem.max_step(y, d)
        if alpha <= 0:
            break
        slope = float(g @ d) / problem.M
        for _ in range(_MAX_BACKTRACK):
            trial = y + alpha * d
            f_trial = problem.value(trial)
            if f_trial <= f + _ARMIJO * alpha * slope:
                break
            alpha *= 0.5
        else:
            break
        if not np.all(np.diff(trial) >= 0):
            break
        y, f = trial, f_trial
    return y, JKOInfo(iterations=it, residual=residual, status=Status.WARN, method='newton')


def _project(v: np.ndarray, weights: np.ndarray, domain: Optional[Tuple[float, float]]) -> np.ndarray:
    y = isotonic_regression(v, weights=weights).x
    if domain is not None:
        y = np.clip(y, domain[0], domain[1])
    return y


def _solve_projected(problem: _StepProblem, tol: float, max_iter: int) -> Tuple[np.ndarray, JKOInfo]:
    domain = None if problem.spec.V is None else problem.spec.V.domain
    y = problem.x.copy()
    if domain is not None:
        y = np.clip(y, domain[0], domain[1])
    f = problem.value(y)
    residual = math.inf
    for it in range(max_iter + 1):
        g = problem.gradient(y)
        h = problem.diag_hessian(y)
        h = np.maximum(h, 1e-12 * max(1.0, float(np.max(h))))
        full = _project(y - g / h, h, domain)
        residual = float(np.max(np.abs(h * (y - full))))
        if residual <= tol * (1.0 + abs(f)):
            return y, JKOInfo(iterations=it, residual=residual, status=Status.PASS, method='projected-newton')
        if it == max_iter:
            break
        alpha = 1.0
        for _ in range(_MAX_BACKTRACK):
            trial = full if alpha == 1.0 else _project(y - alpha * g / h, h, domain)
            f_trial = problem.value(trial)
            if f_trial <= f + _ARMIJO * float(g @ (trial - y)) / problem.M:
                break
            alpha *= 0.5
        else:
            break
        y, f = trial, f_trial
    return y, JKOInfo(iterations=it, residual=residual, status=Status.WARN, method='projected-newton')


def _step(spec: FreeEnergySpec, x: np.ndarray, tau: float, p: float, tol: float,
          max_iter: int) -> Tuple[np.ndarray, JKOInfo]:
    problem = _StepProblem(spec, x, tau, p)
    if spec.F is None:
        y, info = _solve_projected(problem, tol, max_iter)
    else:
        y, info = _solve_newton(problem, tol, max_iter)
    if not math.isinf(tau) and problem.value(y) > problem.energy(x):
        return x.copy(), JKOInfo(iterations=info.iterations, residual=info.residual,
                                 status=Status.WARN, method=info.method + '+fallback')
    return y, info


def jko_step_info(spec: FreeEnergySpec, X: QuantileRepr, tau: float, p: float = 2.0,
                  profile: Optional[str] = None) -> Tuple[QuantileRepr, JKOInfo]:
    """jko_step returning the inner-solver report as well."""
    if not tau > 0:
        raise InvalidInputError(f"Step size must be positive, got {tau}")
    conjugate(p)
    cfg = get_config(profile)
    x = _as_array(X)
    E = free_energy(spec, x)
    if not math.isfinite(E):
        raise InvalidInputError(f"Free energy of the base state is not finite ({E})")
    y, info = _step(spec, x, tau, p, cfg.JKO_RESIDUAL, cfg.JKO_MAX_ITER)
    if info.status is Status.WARN:
        logger.warning("JKO inner solver stagnated after %d iterations (residual %.3e)",
                       info.iterations, info.residual)
    else:
        logger.debug("JKO step: %d iterations, residual %.3e", info.iterations, info.residual)
    return QuantileRepr(y), info


def jko_step(spec: FreeEnergySpec, X: QuantileRepr, tau: float, p: float = 2.0,
             profile: Optional[str] = None) -> QuantileRepr:
    """
    One minimizing-movement step in P_p(R).

    Minimizes (1/(p tau^(p-1))) (1/M) sum |Y_j - X_j|^p + E(Y) over nondecreasing Y.
    With an internal energy the cone constraint never binds (gaps stay above
    gap_min) and the problem is solved by damped Newton on the tridiagonal
    Hessian. Without one, steps are projected onto the cone by weighted isotonic
    regression and clipped to the domain of V.

    Args:
        spec: Free energy
        X: Base state
        tau: Step size
        p: Flow exponent
        profile: Tolerance profile name

    Returns:
        The minimizer; X itself if no iterate beats staying put

    Raises:
        InvalidInputError: If tau <= 0, p <= 1 or E(X) is not finite
    """
    return jko_step_info(spec, X, tau, p, profile)[0]


# Equilibria

def _power_law(F: InternalEnergy) -> Optional[Tuple[float, float]]:
    """(a, q) with F(s) = a s^q for the power-law presets."""
    if F.name == 'porous-medium':
        m = F.params['m']
        return 1.0 / (m - 1.0), m
    if F.name == 'doubly-nonlinear':
        q, m = F.params['q'], F.params['m']
        return m / (q * (q - 1.0)), q
    return None


def _gibbs_quantiles(V: Potential, M: int) -> QuantileRepr:
    """Quantiles of rho proportional to exp(-V) from a tabulated CDF."""
    if V.domain is not None:
        lo, hi = V.domain
    else:
        center = V.params.get('center', 0.0)
        half = 8.0
        while half < 1e4:
            edge = np.array([center - half, center + half])
            grid = np.linspace(edge[0], edge[1], 2001)
            if np.all(V.V(edge) - np.min(V.V(grid)) >= 60.0):
                break
            half *= 2.0
        lo, hi = center - half, center + half
    x = np.linspace(lo, hi, 200001)
    v = V.V(x)
    dens = np.exp(-(v - v.min()))
    cdf = cumulative_trapezoid(dens, x, initial=0.0)
    cdf /= cdf[-1]
    s = (np.arange(M) + 0.5) / M
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return QuantileRepr(np.interp(s, cdf[keep], x[keep]), {'kind': 'gibbs', 'grid': x.size})


def _power_quantiles(F: InternalEnergy, V: Potential, M: int) -> QuantileRepr:
    """
    Compactly supported profile rho = ((C - V)/(a q))_+^(1/(q-1)) for quadratic V.

    With V = kappa (x - c)^2/2 and support c +- L, L = sqrt(2C/kappa), unit mass
    fixes C in closed form through B(1/2, b+1), b = 1/(q-1); quantiles come from
    the inverse regularized incomplete beta function.
    """
    a, q = _power_law(F)
    kappa, center = V.params['kappa'], V.params.get('center', 0.0)
    b = 1.0 / (q - 1.0)
    B = beta_fn(0.5, b + 1.0)
    C = ((a * q) ** b / (B * math.sqrt(2.0 / kappa))) ** (1.0 / (b + 0.5))
    L = math.sqrt(2.0 * C / kappa)
    s = (np.arange(M) + 0.5) / M
    u2 = betaincinv(0.5, b + 1.0, np.abs(2.0 * s - 1.0))
    u = np.sign(s - 0.5) * np.sqrt(u2)
    return QuantileRepr(center + L * u, {'kind': 'power-law', 'C': C, 'support': [center - L, center + L]})


def _closed_form(spec: FreeEnergySpec, M: int) -> Optional[QuantileRepr]:
    if spec.W is not None or spec.V is None or spec.F is None:
        return None
    if spec.F.name == 'entropy':
        if spec.V.name == 'quadratic':
            kappa, center = spec.V.params['kappa'], spec.V.params.get('center', 0.0)
            X = QuantileRepr.from_ppf(lambda s: norm.ppf(s, loc=center, scale=1.0 / math.sqrt(kappa)), M)
            X.meta['kind'] = 'gaussian'
            return X
        return _gibbs_quantiles(spec.V, M)
    if _power_law(spec.F) is not None and spec.V.name == 'quadratic':
        return _power_quantiles(spec.F, spec.V, M)
    return None


def _polish(spec: FreeEnergySpec, x: np.ndarray, target: Callable[[np.ndarray], bool],
            cfg: type) -> Tuple[np.ndarray, int]:
    """Long-run JKO with a growing step until the target holds, then an unconstrained Newton finish."""
    tau = 1.0
    for step in range(1, cfg.EQUILIBRIUM_MAX_STEPS + 1):
        x, info = _step(spec, x, tau, 2.0, cfg.JKO_RESIDUAL, cfg.JKO_MAX_ITER)
        logger.debug("polish step %d tau=%.3g residual=%.3e", step, tau, info.residual)
        if target(x):
            finished, _ = _step(spec, x, math.inf, 2.0, 1e-13, cfg.JKO_MAX_ITER)
            if free_energy(spec, finished) <= free_energy(spec, x):
                x = finished
            return x, step
        tau = min(4.0 * tau, 1e12)
    raise EquilibriumError(f"Equilibrium not reached within {cfg.EQUILIBRIUM_MAX_STEPS} steps",
                           residual=fisher_information(spec, x).I)


def equilibrium_solve(spec: FreeEnergySpec, M: int = 1024, p: float = 2.0, polish: bool = True,
                      profile: Optional[str] = None) -> QuantileRepr:
    """
    Unique minimizer nu of the free energy.

    Closed forms are used when available: the Gibbs profile exp(-V) for the
    entropy without interaction, and the compactly supported power-law profile
    for porous-medium and doubly nonlinear energies in a quadratic well. Other
    energies start from a Gaussian. The start is then polished by long-run JKO
    with a growing step so that the discrete residual meets
    I_p'(nu) <= EQUILIBRIUM_ACCEPT (1 + |E(nu)|).

    Args:
        spec: Free energy with lam_V > 0
        M: Number of quantiles
        p: Flow exponent, used for the residual I_p'
        polish: False returns the closed form itself
        profile: Tolerance profile name

    Returns:
        QuantileRepr whose meta records the residual, energy and provenance

    Raises:
        ConvexityError: If lam_V is not declared positive
        EquilibriumError: If the residual cannot be met within the step budget
        InvalidInputError: If polish=False and no closed form exists
    """
    lam = spec.lam_V
    if lam is None or not lam > 0:
        raise ConvexityError(f"Equilibrium solve needs lam_V > 0, got {lam}")
    if M < 2:
        raise InvalidInputError(f"M must be at least 2, got {M}")
    cfg = get_config(profile)
    q = conjugate(p)
    start = _closed_form(spec, M)
    closed = start is not None
    if not closed:
        if not polish:
            raise InvalidInputError(f"No closed-form equilibrium for {spec!r}")
        center = 0.0 if spec.V is None else spec.V.params.get('center', 0.0)
        start = QuantileRepr.gaussian(center, 1.0, M)
    meta: Dict[str, Any] = dict(start.meta)
    meta['closed_form'] = closed
    x = start.X
    if polish:
        def accepted(y: np.ndarray) -> bool:
            return fisher_information(spec, y, q).I <= cfg.EQUILIBRIUM_ACCEPT * (1.0 + abs(free_energy(spec, y)))

        x, steps = _polish(spec, x, accepted, cfg)
        meta['polish_steps'] = steps
    info = fisher_information(spec, x, q)
    energy = free_energy(spec, x)
    meta.update({'residual': info.I, 'energy': energy, 'polished': polish, 'p': p})
    logger.info("Equilibrium %s: M=%d E=%.12g residual=%.3e (lam_V=%g)", spec.name, M, energy, info.I, lam)
    return QuantileRepr(x, meta)


# Flows

def wflow_oracle(spec: FreeEnergySpec, equilibrium: Optional[QuantileRepr] = None,
                 p: float = 2.0) -> EnergyOracle:
    return EnergyOracle(eval=functools.partial(free_energy, spec), equilibrium=equilibrium,
                        lam=spec.lam_V, slope=functools.partial(descending_slope, spec, p=p))


def jko_prox(spec: FreeEnergySpec, p: float = 2.0, profile: Optional[str] = None) -> ProxOracle:
    cfg = get_config(profile)
    return ProxOracle(solve=lambda tau, X, q: jko_step(spec, X, tau, q, profile),
                      tolerance=cfg.PROX_GAP_REL,
                      distance=functools.partial(wasserstein_p, p=p))


def run_wflow(spec: FreeEnergySpec, X0: QuantileRepr, p: float = 2.0, tau: float = 0.01,
              horizon: float = 1.0, equilibrium: Optional[QuantileRepr] = None,
              profile: Optional[str] = None) -> Trajectory:
    """
    JKO trajectory of the p-Wasserstein flow from X0.

    Args:
        spec: Free energy
        X0: Initial quantile state with finite energy
        p: Flow exponent
        tau: Step size
        horizon: Final time
        equilibrium: Optional reference state stored on the energy oracle
        profile: Tolerance profile name

    Returns:
        Trajectory of QuantileRepr states with slopes I_p'^(1/p')

    Raises:
        InvalidInputError: If E(X0) is not finite
        FlowAbortedError: If a step fails
    """
    if spec.lam_V is None:
        logger.warning("Free energy %s declares no convexity modulus: convexity-unverified", spec.name)
    cfg = MMConfig(p=p, tau=tau, horizon=horizon, refine_levels=1, record_slopes=True)
    traj = mms.evolve(jko_prox(spec, p, profile), wflow_oracle(spec, equilibrium, p), X0, cfg,
                      space_id=f'W{p:g}-quantile')
    traj.meta.update({'spec': spec.to_dict(), 'M': X0.M, 'solver': 'jko-quantile'})
    return traj


def quantile_snapshots(traj: Trajectory, every: int) -> List[Tuple[float, np.ndarray]]:
    """Every k-th state of a quantile trajectory as (t, X)."""
    if every < 1:
        raise InvalidInputError(f"Snapshot stride must be positive, got {every}")
    return [(traj.times[k], _as_array(traj.states[k])) for k in range(0, len(traj), every)]


def distances_to(traj: Trajectory, nu: QuantileRepr, p: float = 2.0) -> np.ndarray:
    return np.array([wasserstein_p(state, nu, p) for state in traj.states])


# Functional inequalities

def _check_equilibrium(spec: FreeEnergySpec, nu: QuantileRepr, p: float, cfg: type) -> Tuple[float, float]:
    E_nu = free_energy(spec, nu)
    residual = fisher_information(spec, nu, conjugate(p)).I
    threshold = cfg.EQUILIBRIUM_ACCEPT * (1.0 + abs(E_nu))
    if not residual <= threshold:
        raise EquilibriumError(
            f"Reference state is not an equilibrium: residual {residual:.3e} > {threshold:.3e}",
            residual=residual,
        )
    return E_nu, residual


def _record(name: str, lhs: float, rhs: float, tol: float, **constants: float) -> InequalityRecord:
    slack = rhs - lhs
    ok = slack >= -tol * max(1.0, abs(lhs), abs(rhs))
    return InequalityRecord(name=name, lhs=lhs, rhs=rhs, slack=slack, status=Status.of(ok), constants=constants)


def decay_constants(p: float, lam: float) -> Tuple[float, float]:
    """(prefactor, rate) = ((p-1)^(1/p') / lam^(1/p), p^(1/p) lam^(1/(p-1)) / (p-1))."""
    q = conjugate(p)
    return (p - 1.0) ** (1.0 / q) / lam ** (1.0 / p), p ** (1.0 / p) * lam ** (1.0 / (p - 1.0)) / (p - 1.0)


def audit_inequalities(spec: FreeEnergySpec, mu: QuantileRepr, nu: QuantileRepr, p: float = 2.0,
                       lam_hats: Optional[Sequence[float]] = None, tol: Optional[float] = None,
                       profile: Optional[str] = None) -> InequalityAudit:
    """
    Evaluate the entropy-transport family at mu against the equilibrium nu.

    With E = E(mu|nu), W = W_p(mu, nu), I = I_p'(mu) and c_p = (p-1)/p^p':

    * entropy-transport: lam_V W^p <= E
    * talagrand: W <= lam_V^(-1/p) E^(1/p)
    * generalized-lojasiewicz[l]: E + (lam_V - l) W^p <= c_p l^(-1/(p-1)) I, for each l
    * log-sobolev: E <= c_p lam_V^(-1/(p-1)) I
    * hwi: E + lam_V W^p <= I^(1/p') W
    * decay-transport: W <= (p-1)^(1/p') lam_V^(-1/p) E^(1/p)

    and, with l_hat = lam_V^(-1/p), the equivalence chain lojasiewicz-simon
    (E^(1-1/p) <= l_hat I^(1/p')), log-sobolev-power (E <= l_hat^p' I) and
    et-from-log-sobolev (W <= l_hat p E^(1/p)).

    Args:
        spec: Free energy with lam_V > 0
        mu: Measure under test
        nu: Discrete equilibrium
        p: Flow exponent
        lam_hats: Grid for the generalized inequality; lam_V is always included
        tol: Relative tolerance, TOL_INEQ by default
        profile: Tolerance profile name

    Returns:
        InequalityAudit with one record per inequality

    Raises:
        ConvexityError: If lam_V is not declared positive, or lam_W is not zero
        EquilibriumError: If nu's residual exceeds EQUILIBRIUM_ACCEPT (1 + |E(nu)|)
    """
    cfg = get_config(profile)
    lam = spec.lam_V
    if lam is None or not lam > 0:
        raise ConvexityError(f"Inequality audit needs lam_V > 0, got {lam}")
    if spec.lam_W != 0.0:
        raise ConvexityError(f"Inequality audit assumes lam_W = 0, got {spec.lam_W}")
    tol = cfg.TOL_INEQ if tol is None else tol
    q = conjugate(p)
    E_nu, residual = _check_equilibrium(spec, nu, p, cfg)
    E = free_energy(spec, mu) - E_nu
    W = wasserstein_p(mu, nu, p)
    I = fisher_information(spec, mu, q).I
    Wp = W ** p
    c_p = (p - 1.0) / p ** q
    Epos = max(E, 0.0)

    records = [
        _record('entropy-transport', lam * Wp, E, tol, lam_V=lam),
        _record('talagrand', W, lam ** (-1.0 / p) * Epos ** (1.0 / p), tol, lam_V=lam),
    ]
    grid = sorted(set([float(lam)] + [float(x) for x in (lam_hats or [lam / 4, lam / 2, 2 * lam, 4 * lam])]))
    for lh in grid:
        if not lh > 0:
            raise InvalidInputError(f"Generalized inequality needs positive parameters, got {lh}")
        records.append(_record(f'generalized-lojasiewicz[{lh:g}]', E + (lam - lh) * Wp,
                               c_p * lh ** (-1.0 / (p - 1.0)) * I, tol, lam_V=lam, lam_hat=lh, c_p=c_p))
    records.append(_record('log-sobolev', E, c_p * lam ** (-1.0 / (p - 1.0)) * I, tol, lam_V=lam, c_p=c_p))
    records.append(_record('hwi', E + lam * Wp, I ** (1.0 / q) * W, tol, lam_V=lam))
    prefactor, rate = decay_constants(p, lam)
    records.append(_record('decay-transport', W, prefactor * Epos ** (1.0 / p), tol, prefactor=prefactor))
    l_hat = lam ** (-1.0 / p)
    records.append(_record('lojasiewicz-simon', Epos ** (1.0 - 1.0 / p), l_hat * I ** (1.0 / q), tol, lam_hat=l_hat))
    records.append(_record('log-sobolev-power', E, l_hat ** q * I, tol, lam_hat=l_hat))
    records.append(_record('et-from-log-sobolev', W, l_hat * p * Epos ** (1.0 / p), tol, lam_hat=l_hat))

    audit = InequalityAudit(p=p, records=records, equilibrium_residual=residual,
                            quantities={'relative_entropy': E, 'W_p': W, 'fisher': I, 'lam_V': lam,
                                        'E_nu': E_nu, 'decay_rate': rate})
    logger.debug("Inequality audit %r", audit)
    return audit


def decay_audit(spec: FreeEnergySpec, traj: Trajectory, nu: QuantileRepr, p: float = 2.0,
                lam: Optional[float] = None, tol: Optional[float] = None,
                profile: Optional[str] = None) -> DecayAudit:
    """
    Check W_p(mu(t), nu) <= A E(mu(t)|nu)^(1/p) <= A E(mu(t0)|nu)^(1/p) exp(-r (t - t0)) along a run.

    A = (p-1)^(1/p') / lam^(1/p) and r = p^(1/p) lam^(1/(p-1)) / (p-1).

    Args:
        spec: Free energy
        traj: Quantile trajectory
        nu: Discrete equilibrium
        p: Flow exponent
        lam: Modulus to use instead of the declared lam_V (negative controls)
        tol: Relative tolerance, TOL_INEQ by default
        profile: Tolerance profile name

    Raises:
        ConvexityError: If the modulus is not positive
        EquilibriumError: If nu's residual is too large
        InvalidInputError: On an empty trajectory
    """
    cfg = get_config(profile)
    lam = spec.lam_V if lam is None else lam
    if lam is None or not lam > 0:
        raise ConvexityError(f"Decay audit needs a positive modulus, got {lam}")
    if len(traj) == 0:
        raise InvalidInputError("Empty trajectory")
    E_nu, _ = _check_equilibrium(spec, nu, p, cfg)
    prefactor, rate = decay_constants(p, lam)
    times = traj.t
    rel = np.maximum(traj.E - E_nu, 0.0)
    distance = distances_to(traj, nu, p)
    transport_bound = prefactor * rel ** (1.0 / p)
    envelope = prefactor * rel[0] ** (1.0 / p) * np.exp(-rate * (times - times[0]))
    audit = DecayAudit(times=times, distance=distance, transport_bound=transport_bound, envelope=envelope,
                       prefactor=prefactor, rate=rate, tolerance=cfg.TOL_INEQ if tol is None else tol)
    logger.info("Decay audit (lam=%g, rate=%.4g): %r", lam, rate, audit)
    return audit


# Presets

def fokker_planck(kappa: float = 1.0, center: float = 0.0) -> FreeEnergySpec:
    return FreeEnergySpec(F=InternalEnergy.entropy(), V=Potential.quadratic(kappa, center), name='fokker-planck')


def porous_medium(m: float = 2.0, kappa: float = 1.0) -> FreeEnergySpec:
    return FreeEnergySpec(F=InternalEnergy.porous(m), V=Potential.quadratic(kappa), name='porous-medium')


def doubly_nonlinear(p: float = 2.0, m: float = 2.0, kappa: float = 1.0) -> FreeEnergySpec:
    return FreeEnergySpec(F=InternalEnergy.doubly_nonlinear(p, m), V=Potential.quadratic(kappa),
                          name='doubly-nonlinear')


def drift_interaction(kappa: float = 1.0, k: float = 0.5) -> FreeEnergySpec:
    """Entropy, quadratic confinement and quadratic attraction; equilibrium N(0, 1/(kappa + k))."""
    return FreeEnergySpec(F=InternalEnergy.entropy(), V=Potential.quadratic(kappa),
                          W=Interaction.quadratic(k), name='drift-interaction')


PRESETS: Dict[str, Callable[..., FreeEnergySpec]] = {
    'fokker-planck': fokker_planck,
    'porous-medium': porous_medium,
    'doubly-nonlinear': doubly_nonlinear,
    'drift-interaction': drift_interaction,
}


def preset(name: str, **params: float) -> FreeEnergySpec:
    """Build a named free energy."""
    try:
        builder = PRESETS[name]
    except KeyError:
        raise InvalidInputError(
            f"Unknown free-energy preset '{name}'. Must be one of: {', '.join(sorted(PRESETS))}"
        ) from None
    return builder(**params)
