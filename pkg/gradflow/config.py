"""Tolerance profiles for the gradflow solvers and audits."""

import os
from typing import Optional, Tuple, Type


class Config:
    """Base profile shared by every solver and audit."""

    # Monotonicity slack for solver trajectories, relative to max(1, |E(v0)|)
    TAU_MONO_REL: float = float(os.environ.get('GRADFLOW_TAU_MONO') or 1e-10)

    # Inner optimality gap of a proximal step, relative to max(1, |E(v)|)
    PROX_GAP_REL: float = float(os.environ.get('GRADFLOW_PROX_GAP') or 1e-9)

    # Slope probing
    SLOPE_PROBE_REL: float = 1e-3

    # KL certification
    KL_VALLEY_C: float = 2.0
    KL_BINS: int = 24
    KL_VERIFY_TOL: float = 1e-12
    LS_ALPHAS: Tuple[float, ...] = (0.1, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.9, 1.0)
    LS_STABILITY_FACTOR: float = 10.0

    # Total variation flows
    EXTINCTION_REL: float = 1e-3
    TV1D_SUBGRADIENT_TOL: float = 1e-10
    TV2D_MAX_ITER: int = 4000
    TV2D_TOL: float = 1e-9

    # Quantile flows
    GAP_MIN_REL: float = 1e-8
    JKO_RESIDUAL: float = 1e-8
    JKO_MAX_ITER: int = 100
    EQUILIBRIUM_ACCEPT: float = 1e-6
    EQUILIBRIUM_MAX_STEPS: int = 200

    # Audits
    TOL_INEQ: float = 1e-8


class StandardConfig(Config):
    """Default profile."""


class FastConfig(Config):
    """Smaller iteration caps for quick runs and tests."""

    TV2D_MAX_ITER: int = 1500
    TV2D_TOL: float = 1e-8
    JKO_MAX_ITER: int = 60
    EQUILIBRIUM_MAX_STEPS: int = 80


class PreciseConfig(Config):
    """Tighter inner tolerances for reference runs."""

    PROX_GAP_REL: float = 1e-11
    TV2D_MAX_ITER: int = 20000
    TV2D_TOL: float = 1e-11
    JKO_RESIDUAL: float = 1e-10
    JKO_MAX_ITER: int = 200


config: dict[str, Type[Config]] = {
    'standard': StandardConfig,
    'fast': FastConfig,
    'precise': PreciseConfig,
    'default': StandardConfig
}


def get_config(name: Optional[str] = None) -> Type[Config]:
    """
    Resolve a tolerance profile by name.

    Args:
        name: Profile key; falls back to GRADFLOW_PROFILE, then 'default'

    Returns:
        The profile class

    Raises:
        ValueError: If the name is not a known profile
    """
    key = name or os.environ.get('GRADFLOW_PROFILE') or 'default'
    try:
        return config[key]
    except KeyError:
        raise ValueError(
            f"Unknown profile '{key}'. Must be one of: {', '.join(sorted(config))}"
        ) from None
