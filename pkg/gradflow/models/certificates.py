"""Result types for KL / Łojasiewicz-Simon certification."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gradflow.errors import InvalidInputError
from gradflow.models.serialization import json_safe


class Status(Enum):
    """Verdict attached to every audit record."""
    PASS = "PASS"
    FAIL = "FAIL"
    WARN = "WARN"

    @classmethod
    def of(cls, ok: bool) -> 'Status':
        return cls.PASS if ok else cls.FAIL


@dataclass
class SampleCloud:
    """
    States with cached relative entropy, slope and distance to the equilibrium.

    Attributes:
        points: State handles (array rows for Euclidean clouds)
        r: Relative entropies E(v|phi)
        g: Slopes g(v)
        dist: Distances d(v, phi)
        source: How the cloud was generated (grid, trajectory, random, csv)
    """

    points: Any
    r: np.ndarray
    g: np.ndarray
    dist: np.ndarray
    source: str = 'random'

    def __post_init__(self) -> None:
        self.r = np.asarray(self.r, dtype=float).reshape(-1)
        self.g = np.asarray(self.g, dtype=float).reshape(-1)
        self.dist = np.asarray(self.dist, dtype=float).reshape(-1)
        n = self.r.size
        if self.g.size != n or self.dist.size != n or len(self.points) != n:
            raise InvalidInputError(
                f"Sample cloud fields differ in length: r={n}, g={self.g.size}, "
                f"dist={self.dist.size}, points={len(self.points)}"
            )
        if not np.all(np.isfinite(self.r)):
            raise InvalidInputError("Sample cloud has non-finite relative entropies")
        if np.any(self.g < 0) or not np.all(np.isfinite(self.g)):
            raise InvalidInputError("Sample cloud slopes must be finite and nonnegative")

    def __len__(self) -> int:
        return int(self.r.size)

    @property
    def positive(self) -> np.ndarray:
        """Mask of the samples with r > 0, the part used for certification."""
        return self.r > 0

    def __repr__(self) -> str:
        return f'<SampleCloud {self.source} n={len(self)} positive={int(self.positive.sum())}>'


@dataclass
class LevelProfile:
    """
    Per-bin minimal slope s_D over a geometric binning of (0, R].

    Bin i covers (bin_edges[i], bin_edges[i+1]]. Empty bins carry NaN and
    witness -1.
    """

    bin_edges: np.ndarray
    s_vals: np.ndarray
    witness: np.ndarray
    R: float
    r_min: float = 0.0

    @property
    def n_bins(self) -> int:
        return int(self.s_vals.size)

    @property
    def nonempty(self) -> np.ndarray:
        return self.witness >= 0

    def bin_of(self, r: Any) -> np.ndarray:
        """Bin index of each entropy value (-1 at or below 0, n_bins above R)."""
        idx = np.searchsorted(self.bin_edges, np.asarray(r, dtype=float), side='left') - 1
        return np.where(np.asarray(r) > self.R, self.n_bins, idx)

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'bin_edges': self.bin_edges,
            's_vals': self.s_vals,
            'witness': self.witness,
            'R': self.R,
            'r_min': self.r_min,
        })

    def __repr__(self) -> str:
        return f'<LevelProfile bins={self.n_bins} nonempty={int(self.nonempty.sum())} R={self.R:.4g}>'


@dataclass
class TalwegChain:
    """Witness chain through the C-valley, ordered by decreasing entropy."""

    indices: List[int]
    r: List[float]
    length: float
    monotone: bool
    C: float
    bands: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'indices': self.indices,
            'r': self.r,
            'bands': self.bands,
            'length': self.length,
            'monotone': self.monotone,
            'C': self.C,
        })

    def __repr__(self) -> str:
        return f'<TalwegChain n={len(self.indices)} length={self.length:.4g}>'


@dataclass
class KLCertificate:
    """
    Piecewise-linear desingularizing function with its certified region.

    Attributes:
        theta_knots: (k, 2) array of (s, theta(s)) with theta(0) = 0, strictly increasing
        tail_slope: Slope of theta beyond the last knot
        region: {'center_id', 'eps', 'R', 'r_floor'}
        C: Valley constant used to build the certificate
        margin: min over the generating cloud of theta'(r) g - 1
        status: PASS when margin >= -KL_VERIFY_TOL
    """

    theta_knots: np.ndarray
    tail_slope: float
    region: Dict[str, Any]
    C: float
    margin: float = float('nan')
    status: Status = Status.FAIL

    @property
    def slopes(self) -> np.ndarray:
        s, th = self.theta_knots[:, 0], self.theta_knots[:, 1]
        return np.diff(th) / np.diff(s)

    def theta(self, s: Any) -> np.ndarray:
        """Evaluate theta with the affine tail above the last knot."""
        s = np.asarray(s, dtype=float)
        knots_s, knots_th = self.theta_knots[:, 0], self.theta_knots[:, 1]
        inside = np.interp(s, knots_s, knots_th)
        tail = knots_th[-1] + self.tail_slope * (s - knots_s[-1])
        return np.where(s > knots_s[-1], tail, inside)

    def theta_prime(self, s: Any) -> np.ndarray:
        """Piecewise slope of theta; the segment (s_i, s_i+1] owns its right endpoint."""
        s = np.asarray(s, dtype=float)
        slopes = self.slopes
        idx = np.searchsorted(self.theta_knots[:, 0], s, side='left') - 1
        idx = np.clip(idx, 0, slopes.size - 1)
        return np.where(s > self.theta_knots[-1, 0], self.tail_slope, slopes[idx])

    def scaled(self, factor: float) -> 'KLCertificate':
        """Copy with theta multiplied by factor (margin left for re-verification)."""
        knots = self.theta_knots.copy()
        knots[:, 1] *= factor
        return KLCertificate(theta_knots=knots, tail_slope=self.tail_slope * factor,
                             region=dict(self.region), C=self.C)

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'theta_knots': self.theta_knots,
            'tail_slope': self.tail_slope,
            'region': self.region,
            'C': self.C,
            'margin': self.margin,
            'status': self.status,
        })

    def __repr__(self) -> str:
        return f'<KLCertificate knots={len(self.theta_knots)} margin={self.margin:.3e} {self.status.value}>'


@dataclass
class KLVerification:
    margin: float
    status: Status
    n_checked: int
    n_skipped: int = 0
    worst_index: int = -1

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'margin': self.margin,
            'status': self.status,
            'n_checked': self.n_checked,
            'n_skipped': self.n_skipped,
            'worst_index': self.worst_index,
        })

    def __repr__(self) -> str:
        return f'<KLVerification margin={self.margin:.3e} {self.status.value}>'


@dataclass
class LSFit:
    """
    Łojasiewicz-Simon fit r^(1-alpha) <= c g at one exponent.

    The fit is tight: c equals the worst observed ratio.
    """

    alpha: float
    c: float
    worst_ratio: float
    n_samples: int

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise InvalidInputError(f"alpha must lie in (0, 1], got {self.alpha}")

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'alpha': self.alpha,
            'c': self.c,
            'worst_ratio': self.worst_ratio,
            'n_samples': self.n_samples,
        })

    def __repr__(self) -> str:
        return f'<LSFit alpha={self.alpha:.3g} c={self.c:.4g}>'


@dataclass
class LSFitReport:
    """All per-exponent fits plus the regression estimate."""

    fits: List[LSFit]
    recommended_alpha: float
    alpha_regression: float
    ls_exponent_from_regression: float
    annulus_c: Dict[float, List[float]] = field(default_factory=dict)

    def fit_for(self, alpha: float) -> LSFit:
        for fit in self.fits:
            if np.isclose(fit.alpha, alpha):
                return fit
        raise InvalidInputError(f"No fit computed for alpha={alpha}")

    @property
    def recommended(self) -> LSFit:
        return self.fit_for(self.recommended_alpha)

    def to_dict(self) -> Dict[str, Any]:
        rec = self.recommended
        return json_safe({
            'alpha': rec.alpha,
            'c': rec.c,
            'worst_ratio': rec.worst_ratio,
            'alpha_regression': self.alpha_regression,
            'ls_exponent_from_regression': self.ls_exponent_from_regression,
            'fits': [f.to_dict() for f in self.fits],
        })

    def __repr__(self) -> str:
        return (f'<LSFitReport recommended={self.recommended_alpha:.3g} '
                f'regression={self.alpha_regression:.4g}>')


@dataclass
class EquivalenceAudit:
    """
    Two-sided entropy-transport / Łojasiewicz-Simon audit.

    Slacks are worst cases over the cloud: rhs - lhs, so negative means FAIL.
    """

    alpha: float
    c: float
    c_hat: float
    et_slack: float
    ls_slack: float
    et_status: Status
    ls_status: Status
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.et_status is Status.PASS and self.ls_status is Status.PASS

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'alpha': self.alpha,
            'c': self.c,
            'c_hat': self.c_hat,
            'et_slack': self.et_slack,
            'ls_slack': self.ls_slack,
            'et_status': self.et_status,
            'ls_status': self.ls_status,
            'n_samples': self.n_samples,
        })

    def __repr__(self) -> str:
        return f'<EquivalenceAudit ET={self.et_status.value} LS={self.ls_status.value}>'


@dataclass
class ETProfileReport:
    """Per-sample slack Psi(E(v|phi)) - dist(v, equilibria)."""

    slacks: np.ndarray
    worst: float
    status: Status
    local: bool
    eps: Optional[float]
    n_checked: int

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'worst': self.worst,
            'status': self.status,
            'local': self.local,
            'eps': self.eps,
            'n_checked': self.n_checked,
        })

    def __repr__(self) -> str:
        kind = 'local' if self.local else 'global'
        return f'<ETProfileReport {kind} worst={self.worst:.3e} {self.status.value}>'


def min_or_inf(values: Sequence[float]) -> float:
    arr = np.asarray(values, dtype=float)
    return float(arr.min()) if arr.size else float('inf')
