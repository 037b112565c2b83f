"""
Kurdyka-Łojasiewicz and Łojasiewicz-Simon certification on sample clouds.

Pipeline: level_profile -> discrete_talweg / build_theta -> verify_kl, and
fit_ls -> et_ls_equivalence for power-law desingularizers.
"""

import logging
from typing import Any, Callable, Optional, Sequence

import numpy as np

from gradflow.config import Config
from gradflow.core import euclidean_distance
from gradflow.errors import (
    CertificationError, ConvexityError, InvalidInputError, SardViolationError,
)
from gradflow.models.certificates import (
    EquivalenceAudit, ETProfileReport, KLCertificate, KLVerification, LevelProfile,
    LSFit, LSFitReport, SampleCloud, Status, TalwegChain,
)
from gradflow.models.oracles import Distance

logger = logging.getLogger(__name__)


def sample_cloud(points: np.ndarray, energy: Callable[[np.ndarray], float],
                 slope: Callable[[np.ndarray], float], equilibrium: np.ndarray,
                 source: str = 'random') -> SampleCloud:
    """
    Evaluate relative entropy, slope and distance on Euclidean points.

    Args:
        points: (n, dim) array of states
        energy: E
        slope: Upper gradient, typically |grad E|
        equilibrium: phi
        source: Provenance tag

    Returns:
        SampleCloud over the given points
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    phi = np.asarray(equilibrium, dtype=float).reshape(-1)
    E_phi = float(energy(phi))
    r = np.array([float(energy(x)) - E_phi for x in pts])
    g = np.array([float(slope(x)) for x in pts])
    dist = np.linalg.norm(pts - phi, axis=1)
    return SampleCloud(points=pts, r=r, g=g, dist=dist, source=source)


def ball_points(center: Sequence[float], radius: float, n: int,
                rng: np.random.Generator) -> np.ndarray:
    """n points uniformly distributed in the Euclidean ball B(center, radius)."""
    center = np.asarray(center, dtype=float).reshape(-1)
    dim = center.size
    directions = rng.standard_normal((n, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(n) ** (1.0 / dim)
    return center + directions * radii[:, None]


def level_profile(cloud: SampleCloud, n_bins: Optional[int] = None,
                  R: Optional[float] = None) -> LevelProfile:
    """
    Minimal slope per geometric entropy bin.

    Edges are 0, r_min (R/r_min)^(i/n) for i = 1..n, with r_min the smallest
    positive entropy at or below R. Bins are right-closed; ties go to the lowest
    sample index.

    Args:
        cloud: Sample cloud
        n_bins: Number of bins, defaults to KL_BINS
        R: Top of the entropy band, defaults to the largest positive entropy

    Returns:
        LevelProfile with NaN / -1 marking empty bins

    Raises:
        InvalidInputError: If no sample has 0 < r <= R or n_bins < 1
    """
    n_bins = Config.KL_BINS if n_bins is None else int(n_bins)
    if n_bins < 1:
        raise InvalidInputError(f"n_bins must be at least 1, got {n_bins}")
    positive = cloud.positive
    if R is None:
        if not positive.any():
            raise InvalidInputError("Sample cloud has no positive-entropy samples")
        R = float(cloud.r[positive].max())
    mask = positive & (cloud.r <= R)
    if not mask.any():
        raise InvalidInputError(f"No sample has relative entropy in (0, {R}]")
    r_min = float(cloud.r[mask].min())
    if r_min >= R:
        edges = np.array([0.0, R])
    else:
        ratios = np.arange(1, n_bins + 1) / n_bins
        edges = np.concatenate([[0.0], r_min * (R / r_min) ** ratios])
        edges[-1] = R
    n = edges.size - 1
    s_vals = np.full(n, np.nan)
    witness = np.full(n, -1, dtype=int)
    idx_all = np.flatnonzero(mask)
    bins = np.searchsorted(edges, cloud.r[idx_all], side='left') - 1
    for b in range(n):
        members = idx_all[bins == b]
        if members.size:
            j = members[np.argmin(cloud.g[members])]
            s_vals[b] = cloud.g[j]
            witness[b] = j
    logger.debug("Level profile: %d bins, %d nonempty, R=%g", n, int((witness >= 0).sum()), R)
    return LevelProfile(bin_edges=edges, s_vals=s_vals, witness=witness, R=float(R), r_min=r_min)


def discrete_talweg(cloud: SampleCloud, profile: LevelProfile, C: Optional[float] = None,
                    follow: bool = True, distance: Distance = euclidean_distance) -> TalwegChain:
    """
    Chain of C-valley points ordered by decreasing entropy.

    The chain starts at the witness of the highest nonempty bin. With follow=True
    each further bin contributes its valley member (g <= C s_D) closest to the
    previous chain point; follow=False returns the raw witnesses.

    Raises:
        InvalidInputError: If C <= 1 or the profile has no nonempty bin
    """
    C = Config.KL_VALLEY_C if C is None else float(C)
    if not C > 1:
        raise InvalidInputError(f"Valley constant must exceed 1, got {C}")
    bins = [b for b in range(profile.n_bins - 1, -1, -1) if profile.witness[b] >= 0]
    if not bins:
        raise InvalidInputError("Level profile has no nonempty bin")
    member_bins = profile.bin_of(cloud.r)
    chain = [int(profile.witness[bins[0]])]
    edges = profile.bin_edges
    bands = [(float(edges[b]), float(edges[b + 1])) for b in bins]
    for b in bins[1:]:
        if not follow:
            chain.append(int(profile.witness[b]))
            continue
        members = np.flatnonzero((member_bins == b) & cloud.positive & (cloud.g <= C * profile.s_vals[b]))
        prev = cloud.points[chain[-1]]
        dists = [float(distance(prev, cloud.points[j])) for j in members]
        chain.append(int(members[int(np.argmin(dists))]))
    r = [float(cloud.r[j]) for j in chain]
    length = float(sum(distance(cloud.points[a], cloud.points[b]) for a, b in zip(chain, chain[1:])))
    monotone = all(b < a for a, b in zip(r, r[1:]))
    if not monotone:
        logger.warning("Talweg chain is not strictly decreasing in entropy")
    return TalwegChain(indices=chain, r=r, length=length, monotone=monotone, C=C, bands=bands)


def _fill_empty(values: np.ndarray) -> np.ndarray:
    """Replace NaN entries by the nearest finite entry (larger value on ties)."""
    filled = values.copy()
    finite = np.flatnonzero(np.isfinite(values))
    for i in np.flatnonzero(~np.isfinite(values)):
        d = np.abs(finite - i)
        nearest = finite[d == d.min()]
        filled[i] = values[nearest].max()
    return filled


def build_theta(profile: LevelProfile, C: Optional[float] = None, cloud: Optional[SampleCloud] = None,
                eps: Optional[float] = None, center_id: str = 'phi') -> KLCertificate:
    """
    Synthesize theta(s) = integral_0^s C / s_D(bin(r)) dr as piecewise-linear knots.

    Args:
        profile: Level profile of a cloud satisfying the Sard condition
        C: Valley constant, defaults to KL_VALLEY_C
        cloud: Generating cloud; when given the margin is computed on it
        eps: Radius of the certified ball around the equilibrium
        center_id: Label of the equilibrium

    Returns:
        KLCertificate over the region {eps, R, r_floor}

    Raises:
        SardViolationError: If a nonempty bin has s_D = 0
    """
    C = Config.KL_VALLEY_C if C is None else float(C)
    if not C > 0:
        raise InvalidInputError(f"Constant must be positive, got {C}")
    nonempty = profile.nonempty
    if not nonempty.any():
        raise InvalidInputError("Level profile has no nonempty bin")
    zero = np.flatnonzero(nonempty & (profile.s_vals <= 0))
    if zero.size:
        raise SardViolationError(
            f"Bin {int(zero[0])} has zero minimal slope; no certificate exists",
            bin_index=int(zero[0]),
        )
    u = np.where(nonempty, C / np.where(nonempty, profile.s_vals, 1.0), np.nan)
    u = _fill_empty(u)
    edges = profile.bin_edges
    theta = np.concatenate([[0.0], np.cumsum(u * np.diff(edges))])
    cert = KLCertificate(
        theta_knots=np.column_stack([edges, theta]),
        tail_slope=float(u[-1]),
        region={'center_id': center_id, 'eps': eps, 'R': profile.R, 'r_floor': profile.r_min},
        C=C,
    )
    if cloud is not None:
        report = verify_kl(cert, cloud, strict=False)
        cert.margin, cert.status = report.margin, report.status
    logger.info("KL certificate: %d knots, margin=%s", len(theta), cert.margin)
    return cert


def verify_kl(cert: KLCertificate, cloud: SampleCloud, strict: bool = True) -> KLVerification:
    """
    Recompute min theta'(r) g - 1 over the cloud.

    Samples with r = 0 carry no constraint. PASS iff margin >= -KL_VERIFY_TOL.

    Args:
        cert: Certificate to check
        cloud: Samples to check against
        strict: Raise on samples outside the region instead of skipping them

    Raises:
        CertificationError: In strict mode, for a sample outside [r_floor, R] or the ball
        InvalidInputError: If no sample remains to check
    """
    region = cert.region
    r_floor = float(region.get('r_floor') or 0.0)
    R = float(region['R'])
    eps = region.get('eps')
    candidates = cloud.r > 0
    inside = candidates & (cloud.r >= r_floor) & (cloud.r <= R)
    if eps is not None:
        inside &= cloud.dist <= float(eps)
    outside = candidates & ~inside
    if outside.any() and strict:
        j = int(np.flatnonzero(outside)[0])
        raise CertificationError(
            f"Sample {j} (r={cloud.r[j]:.6g}, dist={cloud.dist[j]:.6g}) lies outside the certified region"
        )
    idx = np.flatnonzero(inside)
    if not idx.size:
        raise InvalidInputError("No sample lies inside the certified region")
    values = cert.theta_prime(cloud.r[idx]) * cloud.g[idx] - 1.0
    worst = int(np.argmin(values))
    margin = float(values[worst])
    return KLVerification(margin=margin, status=Status.of(margin >= -Config.KL_VERIFY_TOL),
                          n_checked=int(idx.size), n_skipped=int(outside.sum()),
                          worst_index=int(idx[worst]))


def _annulus_maxima(r: np.ndarray, g: np.ndarray, dist: np.ndarray, alpha: float,
                    n_annuli: int) -> np.ndarray:
    ratio = r ** (1.0 - alpha) / g
    lo, hi = dist.min(), dist.max()
    if not lo > 0 or hi <= lo:
        return np.array([ratio.max()])
    edges = lo * (hi / lo) ** (np.arange(n_annuli + 1) / n_annuli)
    which = np.clip(np.searchsorted(edges, dist, side='right') - 1, 0, n_annuli - 1)
    return np.array([ratio[which == k].max() for k in range(n_annuli) if np.any(which == k)])


def fit_ls(cloud: SampleCloud, alphas: Optional[Sequence[float]] = None,
           n_annuli: int = 6) -> LSFitReport:
    """
    Tight Łojasiewicz-Simon constants c(alpha) = max r^(1-alpha)/g.

    The recommended alpha is the largest alpha whose worst annulus constant,
    over a geometric sweep in distance, stays below LS_STABILITY_FACTOR times
    the median annulus constant. The log-log regression slope of g against r
    is reported as alpha_regression together with 1 - slope.

    Raises:
        InvalidInputError: If no sample has r > 0 and g > 0
    """
    alphas = sorted(Config.LS_ALPHAS if alphas is None else alphas)
    use = (cloud.r > 0) & (cloud.g > 0)
    if not use.any():
        raise InvalidInputError("No sample with positive entropy and positive slope")
    r, g, dist = cloud.r[use], cloud.g[use], cloud.dist[use]
    fits, annulus_c = [], {}
    recommended = alphas[0]
    for alpha in alphas:
        ratios = r ** (1.0 - alpha) / g
        c = float(ratios.max())
        fits.append(LSFit(alpha=float(alpha), c=c, worst_ratio=c, n_samples=int(r.size)))
        maxima = _annulus_maxima(r, g, dist, alpha, n_annuli)
        annulus_c[float(alpha)] = maxima.tolist()
        if maxima.max() <= Config.LS_STABILITY_FACTOR * np.median(maxima):
            recommended = alpha
    if r.size >= 2 and np.ptp(np.log(r)) > 0:
        slope = float(np.polyfit(np.log(r), np.log(g), 1)[0])
    else:
        slope = float('nan')
    report = LSFitReport(fits=fits, recommended_alpha=float(recommended), alpha_regression=slope,
                         ls_exponent_from_regression=1.0 - slope, annulus_c=annulus_c)
    logger.info("Łojasiewicz fit: recommended alpha=%g, regression slope=%.4f", recommended, slope)
    return report


def et_ls_equivalence(cloud: SampleCloud, fit: LSFit, equilibria: Sequence[Any],
                      lam: Optional[float], c_hat: Optional[float] = None,
                      distance: Distance = euclidean_distance) -> EquivalenceAudit:
    """
    Audit both directions between the power-law KL and entropy-transport inequalities.

    Direction 1: inf over equilibria of d(v, phi) <= (c/alpha) r^alpha.
    Direction 2: r^(1-alpha) <= (c_hat/alpha) g, with c_hat defaulting to fit.c.

    Args:
        cloud: Samples of a lambda-convex instance
        fit: Łojasiewicz-Simon fit supplying (alpha, c)
        equilibria: Nonempty list of equilibrium states
        lam: Convexity modulus of the instance
        c_hat: Entropy-transport constant for direction 2
        distance: Metric

    Raises:
        ConvexityError: If lam is None or negative
        InvalidInputError: If no equilibrium is given
    """
    if lam is None or lam < 0:
        raise ConvexityError(f"Equivalence audit needs a declared modulus lam >= 0, got {lam}")
    if not len(equilibria):
        raise InvalidInputError("At least one equilibrium is required")
    alpha, c = fit.alpha, fit.c
    c_hat = c if c_hat is None else float(c_hat)
    d = np.array([min(float(distance(x, e)) for e in equilibria) for x in cloud.points])
    r = np.maximum(cloud.r, 0.0)
    et_rhs = (c / alpha) * r ** alpha
    et_slack = et_rhs - d
    ls_lhs = np.where(r > 0, r ** (1.0 - alpha), 0.0)
    ls_rhs = (c_hat / alpha) * cloud.g
    ls_slack = ls_rhs - ls_lhs
    tol = Config.KL_VERIFY_TOL
    et_ok = bool(np.all(et_slack >= -tol * np.maximum(1.0, et_rhs)))
    ls_ok = bool(np.all(ls_slack >= -tol * np.maximum(1.0, ls_rhs)))
    return EquivalenceAudit(alpha=alpha, c=c, c_hat=c_hat,
                            et_slack=float(et_slack.min()), ls_slack=float(ls_slack.min()),
                            et_status=Status.of(et_ok), ls_status=Status.of(ls_ok),
                            n_samples=len(cloud))


def et_profile(cloud: SampleCloud, psi_knots: Sequence[Sequence[float]],
               eps: Optional[float] = None) -> ETProfileReport:
    """
    Entropy-transport check dist(v) <= Psi(E(v|phi)) with Psi given by knots.

    With eps the check is local (samples with dist <= eps), otherwise global.
    Psi is piecewise linear, extended affinely beyond its last knot.

    Raises:
        InvalidInputError: If the knots are not strictly increasing from (0, 0)
    """
    knots = np.asarray(psi_knots, dtype=float)
    if knots.ndim != 2 or knots.shape[1] != 2 or knots.shape[0] < 2:
        raise InvalidInputError("Psi knots must be an (k, 2) array with k >= 2")
    s, psi = knots[:, 0], knots[:, 1]
    if s[0] != 0.0 or psi[0] != 0.0 or np.any(np.diff(s) <= 0) or np.any(np.diff(psi) <= 0):
        raise InvalidInputError("Psi must start at (0, 0) and increase strictly")
    mask = cloud.r >= 0
    if eps is not None:
        mask &= cloud.dist <= eps
    r = cloud.r[mask]
    tail = (psi[-1] - psi[-2]) / (s[-1] - s[-2])
    values = np.where(r > s[-1], psi[-1] + tail * (r - s[-1]), np.interp(r, s, psi))
    slacks = values - cloud.dist[mask]
    worst = float(slacks.min()) if slacks.size else float('inf')
    return ETProfileReport(slacks=slacks, worst=worst, status=Status.of(worst >= -Config.KL_VERIFY_TOL),
                           local=eps is not None, eps=eps, n_checked=int(slacks.size))
