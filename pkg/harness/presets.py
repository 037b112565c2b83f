"""Named instances used by experiment configs and the CLI."""

from typing import Any, Callable, Dict, FrozenSet, Mapping

from gradflow import smooth, tvflow, wflow1d
from gradflow.errors import ConfigError
from gradflow.models.grid import BoundaryCondition, TVInstance
from gradflow.models.measures import FreeEnergySpec, QuantileRepr
from gradflow.models.smooth import SmoothEnergy


def _disc(params: Mapping[str, Any], bc: BoundaryCondition) -> TVInstance:
    n, a, R = int(params.get('n', 128)), float(params.get('a', 1.0)), float(params.get('r', 0.25))
    center = tuple(params.get('center', (0.5, 0.5)))
    v0 = tvflow.disc_datum(n, a=a, R=R, center=center, bc=bc)
    return tvflow.make_instance(v0, name='disc', params={'n': n, 'a': a, 'R': R})


def _box(params: Mapping[str, Any], bc: BoundaryCondition) -> TVInstance:
    n = int(params.get('n', 64))
    start, stop = int(params.get('start', n // 4)), int(params.get('stop', 3 * n // 4))
    v0 = tvflow.box_datum(n, start, stop, a=float(params.get('a', 1.0)), bc=bc)
    return tvflow.make_instance(v0, name='box', params={'n': n, 'start': start, 'stop': stop})


def _half(params: Mapping[str, Any], bc: BoundaryCondition) -> TVInstance:
    n = int(params.get('n', 256))
    v0 = tvflow.box_datum(n, 0, n // 2, a=float(params.get('a', 1.0)), bc=bc)
    return tvflow.make_instance(v0, name='half', params={'n': n})


TV_PRESETS: Dict[str, Callable[[Mapping[str, Any], BoundaryCondition], TVInstance]] = {
    'disc': _disc,
    'box': _box,
    'half': _half,
}

_NON_PARAMS = frozenset({'preset', 'm_quantiles', 'init_mean', 'init_std', 'phi', 'v0', 'radius',
                         'n_samples', 'delta', 'cloud', 'psi'})


def known_presets(kind: str) -> FrozenSet[str]:
    if kind in ('tv-dirichlet', 'tv-neumann'):
        return frozenset(TV_PRESETS)
    if kind == 'wflow':
        return frozenset(wflow1d.PRESETS)
    if kind in ('smooth-ls', 'stability'):
        return frozenset(smooth.REGISTRY)
    return frozenset()


def tv_instance(name: str, params: Mapping[str, Any], bc: BoundaryCondition) -> TVInstance:
    try:
        builder = TV_PRESETS[name]
    except KeyError:
        raise ConfigError(f"Unknown TV preset '{name}'. Must be one of: {', '.join(sorted(TV_PRESETS))}") from None
    return builder(params, bc)


def _builder_params(params: Mapping[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in params.items() if k not in _NON_PARAMS}


def _build(builder: Callable[..., Any], name: str, params: Dict[str, Any], **extra: Any) -> Any:
    try:
        return builder(name, **extra, **params)
    except TypeError as exc:
        raise ConfigError(f"Bad parameters {sorted(params)} for preset '{name}': {exc}") from None


def free_energy(name: str, params: Mapping[str, Any]) -> FreeEnergySpec:
    """Free energy preset built from the instance keys that are not flow settings."""
    return _build(wflow1d.preset, name, _builder_params(params))


def initial_quantiles(params: Mapping[str, Any]) -> QuantileRepr:
    """Gaussian start N(init_mean, init_std^2) on m_quantiles samples."""
    return QuantileRepr.gaussian(float(params.get('init_mean', 2.0)), float(params.get('init_std', 1.0)),
                                 int(params.get('m_quantiles', 512)))


def smooth_energy(name: str, params: Mapping[str, Any], seed: int = 0) -> SmoothEnergy:
    return _build(smooth.smooth_energy, name, _builder_params(params), seed=seed)
