"""Command-line entry point for running experiments and one-off computations."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from gradflow import rates
from gradflow.errors import GradflowError
from gradflow.models.serialization import json_safe
from harness import __version__
from harness.config import ExperimentConfig, HarnessConfig, load_experiments
from harness.experiments import ExperimentResult, ExperimentRunner, run_batch
from harness.storage import ArtifactStore

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_ERROR = 0, 1, 2


def _print_results(results: Sequence[ExperimentResult]) -> int:
    code = EXIT_OK
    for result in results:
        if result.error:
            print(f"❌ {result.name} ({result.kind}): {result.error}")
            code = EXIT_ERROR
            continue
        if result.passed:
            print(f"✅ {result.name} ({result.kind}): PASS -> {result.path}")
        else:
            failed = [c['name'] for c in result.checks if c['status'] != 'PASS']
            print(f"❌ {result.name} ({result.kind}): FAIL [{', '.join(failed)}] -> {result.path}")
            code = max(code, EXIT_FAILED)
        for c in result.checks:
            marker = '✅' if c['status'] == 'PASS' else '❌'
            print(f"   {marker} {c['name']}: slack={c['slack']}")
    return code


def _runner(args: argparse.Namespace) -> ExperimentRunner:
    root = Path(args.output_dir) if args.output_dir else HarnessConfig.get_output_dir()
    return ExperimentRunner(ArtifactStore(root), profile=args.profile or HarnessConfig.get_profile())


def _run_configs(configs: List[ExperimentConfig], args: argparse.Namespace) -> int:
    results = run_batch(configs, _runner(args), workers=getattr(args, 'workers', None))
    return _print_results(results)


def cmd_run(args: argparse.Namespace) -> int:
    """Run every experiment of an INI file."""
    return _run_configs(load_experiments(args.config), args)


def cmd_rates(args: argparse.Namespace) -> int:
    """Print the decay prediction for one parameter set."""
    pred = rates.predict(args.p, args.alpha, args.c, args.t0, args.e0)
    print(f"✅ {pred.regime.value} regime")
    if pred.t_hat is not None:
        print(f"   t_hat        = {pred.t_hat:.12g}")
        print(f"   t_hat_stated = {pred.t_hat_stated:.12g}")
        print(f"   c_tilde      = {pred.c_tilde:.12g}")
    elif pred.rate is not None:
        print(f"   rate         = {pred.rate:.12g}")
    else:
        print(f"   decay exponent = {pred.meta['decay_exponent']:.12g}")
    if args.json:
        print(json.dumps(json_safe(pred.to_dict()), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_certify_kl(args: argparse.Namespace) -> int:
    """Certify a KL inequality on a cloud CSV."""
    solver = {k: v for k, v in (('C', args.C), ('bins', args.bins), ('eps', args.eps)) if v is not None}
    cfg = ExperimentConfig(name=f'certify-{Path(args.cloud).stem}', kind='certify-kl', seed=0,
                           instance={'cloud': args.cloud}, solver=solver)
    return _run_configs([cfg], args)


def _preset_or_config(target: str, kind: str, instance: dict, solver: dict) -> List[ExperimentConfig]:
    path = Path(target)
    if path.suffix == '.ini' or path.is_file():
        configs = [c for c in load_experiments(path) if c.kind == kind]
        if not configs:
            raise ValueError(f"{path} defines no '{kind}' experiment")
        return configs
    return [ExperimentConfig(name=f'{kind}-{target}', kind=kind, instance={'preset': target, **instance},
                             solver=solver)]


def cmd_tv(args: argparse.Namespace) -> int:
    """Run a TV flow from a preset name or the matching sections of a config."""
    solver = {'horizon': args.horizon}
    if args.tau is not None:
        solver['tau'] = args.tau
    instance = {'n': args.n} if args.n is not None else {}
    return _run_configs(_preset_or_config(args.target, f'tv-{args.bc}', instance, solver), args)


def cmd_wflow(args: argparse.Namespace) -> int:
    """Run a Wasserstein flow from a preset name or the matching sections of a config."""
    solver = {'tau': args.tau, 'horizon': args.horizon, 'p': args.p}
    instance = {'m_quantiles': args.m}
    return _run_configs(_preset_or_config(args.target, 'wflow', instance, solver), args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='gradflow',
        description="Gradient-flow experiments: decay rates, extinction and functional inequalities",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  gradflow run harness/configs/disc.ini
  gradflow rates --p 2 --alpha 1 --c 1 --e0 0.5
  gradflow certify-kl cloud.csv --C 2 --bins 40
  gradflow tv dirichlet disc
  gradflow wflow fokker-planck --tau 0.01 --horizon 3
        """
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument('--output-dir', help='Artifact root (default: $GRADFLOW_OUTPUT_DIR or artifacts)')
        sub.add_argument('--profile', help='Tolerance profile (standard, fast, precise)')
        sub.add_argument('--workers', type=int, help='Concurrent experiments (default: $GRADFLOW_WORKERS)')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    run_parser = subparsers.add_parser('run', help='Run the experiments of an INI config')
    run_parser.add_argument('config', help='Path to the INI file')
    common(run_parser)

    rates_parser = subparsers.add_parser('rates', help='Decay prediction for one parameter set')
    rates_parser.add_argument('--p', type=float, required=True)
    rates_parser.add_argument('--alpha', type=float, required=True)
    rates_parser.add_argument('--c', type=float, required=True)
    rates_parser.add_argument('--e0', type=float, required=True)
    rates_parser.add_argument('--t0', type=float, default=0.0)
    rates_parser.add_argument('--json', action='store_true', help='Also print the prediction as JSON')

    kl_parser = subparsers.add_parser('certify-kl', help='Build and verify a KL certificate from a cloud CSV')
    kl_parser.add_argument('cloud', help='CSV with columns r, g, dist (and optional x0, x1, ...)')
    kl_parser.add_argument('--C', type=float, help='Valley constant (> 1)')
    kl_parser.add_argument('--bins', type=int, help='Number of entropy bins')
    kl_parser.add_argument('--eps', type=float, help='Radius of the certified ball')
    common(kl_parser)

    tv_parser = subparsers.add_parser('tv', help='Total-variation flow')
    tv_parser.add_argument('bc', choices=('dirichlet', 'neumann'))
    tv_parser.add_argument('target', help='Preset name (disc, box, half) or INI file')
    tv_parser.add_argument('--horizon', type=float, default=0.5)
    tv_parser.add_argument('--tau', type=float)
    tv_parser.add_argument('--n', type=int, help='Grid cells per side')
    common(tv_parser)

    wflow_parser = subparsers.add_parser('wflow', help='Wasserstein flow on quantile functions')
    wflow_parser.add_argument('target', help='Preset name or INI file')
    wflow_parser.add_argument('--tau', type=float, default=0.01)
    wflow_parser.add_argument('--horizon', type=float, default=1.0)
    wflow_parser.add_argument('--p', type=float, default=2.0)
    wflow_parser.add_argument('--m', type=int, default=512, help='Number of quantiles')
    common(wflow_parser)
    return parser


COMMANDS = {
    'run': cmd_run,
    'rates': cmd_rates,
    'certify-kl': cmd_certify_kl,
    'tv': cmd_tv,
    'wflow': cmd_wflow,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and dispatch.

    Returns:
        0 when every check passed, 1 when a check failed, 2 on errors
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    if not args.command:
        parser.print_help()
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (GradflowError, ValueError) as exc:
        print(f"❌ {exc}")
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
