"""Experiment orchestration: one handler per experiment kind, run concurrently in batches."""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import anyio
import numpy as np
from scipy.stats import linregress

from gradflow import klcert, rates, tvflow, wflow1d
from gradflow import smooth as smooth_mod
from gradflow.config import get_config
from gradflow.errors import GradflowError
from gradflow.models.certificates import Status
from gradflow.models.decay import Regime
from gradflow.models.grid import BoundaryCondition
from gradflow.models.measures import QuantileRepr
from gradflow.models.serialization import json_safe
from harness import plots, presets
from harness.config import ExperimentConfig, HarnessConfig
from harness.storage import ArtifactStore, ExperimentWriter, load_cloud_csv, write_cloud_csv

logger = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    """Outcome of one experiment."""

    name: str
    kind: str
    passed: bool
    checks: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    path: Optional[Path] = None
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            'name': self.name,
            'kind': self.kind,
            'passed': self.passed,
            'checks': self.checks,
            'summary': self.summary,
            'error': self.error,
        })

    def __repr__(self) -> str:
        state = 'ERROR' if self.error else ('PASS' if self.passed else 'FAIL')
        return f'<ExperimentResult {self.name} {self.kind} {state}>'


def check(name: str, ok: bool, slack: float, **values: Any) -> Dict[str, Any]:
    """A named verdict with the slack that decides it (negative means violated)."""
    return json_safe({'name': name, 'status': Status.of(bool(ok)), 'slack': slack, **values})


def _pair(value: Any, key: str) -> Sequence[float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ValueError(f"{key} must be a two-element list, got {value!r}")
    return float(value[0]), float(value[1])


def _as_list(value: Any) -> List[float]:
    return [float(v) for v in value] if isinstance(value, list) else [float(value)]


def ou_distance(t: np.ndarray, mean0: float, std0: float, kappa: float = 1.0, center: float = 0.0) -> np.ndarray:
    """W_2 between the Ornstein-Uhlenbeck law at time t and its Gaussian equilibrium N(center, 1/kappa)."""
    t = np.asarray(t, dtype=float)
    m = (mean0 - center) * np.exp(-kappa * t)
    var = 1.0 / kappa + (std0 ** 2 - 1.0 / kappa) * np.exp(-2.0 * kappa * t)
    return np.sqrt(m ** 2 + (np.sqrt(var) - 1.0 / math.sqrt(kappa)) ** 2)


def fitted_rate(t: np.ndarray, distance: np.ndarray, floor: float = 1e-12) -> float:
    """Slope of a least-squares fit of log distance against t."""
    keep = distance > floor
    if keep.sum() < 3:
        return math.nan
    return float(linregress(t[keep], np.log(distance[keep])).slope)


def extinction_scaling_residual(preds: Sequence[Any], stated: bool = False) -> float:
    """
    Largest relative spread of (t_hat - t0) / E0^e within each (p, alpha, c, t0)
    group of extinction predictions.

    The integrated deadline t_hat scales with e = (p alpha - 1)/(p - 1). With
    stated=True the displayed closed form t_hat_stated is checked against
    e = (p alpha - 1)/(alpha(p - 1)).
    """
    groups: Dict[tuple, List[float]] = {}
    for pred in preds:
        if pred.regime is not Regime.EXTINCTION or not pred.E0 > 0:
            continue
        if stated:
            t_hat, exponent = pred.t_hat_stated, (pred.p * pred.alpha - 1.0) / (pred.alpha * (pred.p - 1.0))
        else:
            t_hat, exponent = pred.t_hat, (pred.p * pred.alpha - 1.0) / (pred.p - 1.0)
        groups.setdefault((pred.p, pred.alpha, pred.c, pred.t0), []).append(
            (t_hat - pred.t0) / pred.E0 ** exponent)
    worst = 0.0
    for values in groups.values():
        ref = values[0]
        worst = max(worst, max(abs(v - ref) / abs(ref) for v in values))
    return worst


class ExperimentRunner:
    """Executes validated experiment configs and writes their artifacts."""

    def __init__(self, store: Optional[ArtifactStore] = None, profile: Optional[str] = None):
        self.store = store or ArtifactStore(HarnessConfig.get_output_dir())
        self.profile = profile
        self.handlers: Dict[str, Callable[[ExperimentConfig, ExperimentWriter, str], Dict[str, Any]]] = {
            'tv-dirichlet': self._run_tv,
            'tv-neumann': self._run_tv,
            'wflow': self._run_wflow,
            'smooth-ls': self._run_smooth_ls,
            'certify-kl': self._run_certify_kl,
            'rates-table': self._run_rates_table,
            'stability': self._run_stability,
        }

    def run(self, cfg: ExperimentConfig) -> ExperimentResult:
        """
        Run one experiment and write its artifact directory.

        Args:
            cfg: Validated experiment

        Returns:
            ExperimentResult; passed iff every recorded check passed

        Raises:
            GradflowError: Module errors, with the experiment named in the log
        """
        store = ArtifactStore(cfg.output_dir) if cfg.output_dir else self.store
        profile = cfg.profile or self.profile
        logger.info("Experiment %s (%s) starting", cfg.name, cfg.kind)
        with store.experiment(cfg.name) as writer:
            outcome = self.handlers[cfg.kind](cfg, writer, profile)
            checks = outcome.pop('checks')
            passed = all(c['status'] == Status.PASS.value for c in checks)
            result = ExperimentResult(name=cfg.name, kind=cfg.kind, passed=passed, checks=checks,
                                      summary=outcome, path=store.path(cfg.name))
            writer.write_json('summary.json', {**result.to_dict(), 'config': cfg.model_dump(),
                                               'files': sorted(writer.files + ['summary.json'])})
        logger.info("Experiment %s finished: %s", cfg.name, 'PASS' if passed else 'FAIL')
        return result

    def run_safe(self, cfg: ExperimentConfig) -> ExperimentResult:
        """run() with module and validation errors turned into an errored result."""
        try:
            return self.run(cfg)
        except (GradflowError, ValueError) as exc:
            logger.error("Experiment %s failed: %s", cfg.name, exc)
            return ExperimentResult(name=cfg.name, kind=cfg.kind, passed=False, error=str(exc))

    # Total variation

    def _run_tv(self, cfg: ExperimentConfig, writer: ExperimentWriter, profile: Optional[str]) -> Dict[str, Any]:
        bc = BoundaryCondition.DIRICHLET if cfg.kind == 'tv-dirichlet' else BoundaryCondition.NEUMANN
        inst = presets.tv_instance(cfg.get('instance.preset'), cfg.instance, bc)
        tau = float(cfg.get('solver.tau') or tvflow.default_tau(inst))
        horizon = float(cfg.get('solver.horizon'))
        snapshot_every = int(cfg.get('solver.snapshot_every', 0))
        result = tvflow.run_tv_flow(inst, tau, horizon, epsilon=cfg.get('solver.epsilon'),
                                    snapshot_every=snapshot_every, max_iter=cfg.get('solver.max_iter'),
                                    tol=cfg.get('solver.tol'), profile=profile)
        traj = result.trajectory
        distances = result.distances()
        writer.write_trajectory(traj, distances, 2.0, 'tv-minimizing-movement',
                                {**cfg.instance, **cfg.solver, 'tau': tau})
        if result.snapshots:
            writer.write_snapshots('snapshots.csv', result.snapshots)
        checks: List[Dict[str, Any]] = []
        summary: Dict[str, Any] = {'instance': inst.to_dict(), 'flow': result.to_dict(), 'tau': tau}

        bound_curve = None
        if not result.reached:
            checks.append(check('extinction-reached', False, -math.inf, horizon=horizon))
        else:
            t_star = result.t_star
            audit = tvflow.extinction_audit(inst, result, tol=cfg.get('checks.tol'),
                                            min_r_squared=cfg.get('checks.min_r_squared'))
            writer.write_json('extinction.json', audit.to_dict())
            summary['extinction'] = audit.to_dict()
            checks.append(check('extinction-bound', audit.status is Status.PASS, audit.bound - t_star,
                                violations=len(audit.violations), r_squared=audit.r_squared))
            if cfg.get('checks.t_star_range') is not None:
                lo, hi = _pair(cfg.get('checks.t_star_range'), 'checks.t_star_range')
                checks.append(check('t-star-range', lo <= t_star <= hi, min(t_star - lo, hi - t_star),
                                    t_star=t_star, low=lo, high=hi))
            pred = rates.predict(2.0, 1.0, inst.constant, 0.0, float(traj.E[0]))
            comparison = rates.compare(pred, traj, distances, tol=audit.tolerance, t_star=t_star)
            bound_curve = comparison.bound
            writer.write_json('prediction.json', {'prediction': pred.to_dict(), 'comparison': comparison.to_dict()})
            writer.write_rows('decay.csv', ('t', 'bound', 'measured', 'slack'), comparison.rows())
            summary['prediction'] = pred.to_dict()
            checks.append(check('deadline', comparison.status is Status.PASS, pred.t_hat - t_star,
                                t_hat=pred.t_hat, worst_slack=comparison.worst_slack))
            checks.append(check('deadline-stated', t_star <= pred.t_hat_stated + audit.tolerance,
                                pred.t_hat_stated - t_star, t_hat_stated=pred.t_hat_stated))

        if bc is BoundaryCondition.NEUMANN:
            mean = inst.v0.mean()
            final_gap = float(np.abs(traj.states[-1].values - mean).max())
            if cfg.get('checks.final_tol') is not None:
                tol = float(cfg.get('checks.final_tol'))
                checks.append(check('final-mean', final_gap <= tol, tol - final_gap, mean=mean))
            if cfg.get('checks.mean_drift') is not None:
                tol = float(cfg.get('checks.mean_drift'))
                checks.append(check('mean-conservation', result.mean_drift <= tol, tol - result.mean_drift,
                                    drift=result.mean_drift))

        plots.energy_plot(writer.file('energy.svg'), traj.t, traj.E, title=f'{cfg.name}: TV energy')
        plots.distance_plot(writer.file('distance.svg'), traj.t, distances, bound=bound_curve,
                            title=f'{cfg.name}: distance to equilibrium')
        return {**summary, 'checks': checks}

    # Wasserstein flows

    def _random_gaussians(self, rng: np.random.Generator, n: int, M: int) -> List[QuantileRepr]:
        return [QuantileRepr.gaussian(float(rng.uniform(-3.0, 3.0)), float(rng.uniform(0.3, 2.5)), M)
                for _ in range(n)]

    def _run_wflow(self, cfg: ExperimentConfig, writer: ExperimentWriter, profile: Optional[str]) -> Dict[str, Any]:
        name = cfg.get('instance.preset')
        spec = presets.free_energy(name, cfg.instance)
        p = float(cfg.get('solver.p', 2.0))
        tau, horizon = float(cfg.get('solver.tau')), float(cfg.get('solver.horizon'))
        X0 = presets.initial_quantiles(cfg.instance)
        nu = wflow1d.equilibrium_solve(spec, X0.M, p, polish=bool(cfg.get('solver.polish', True)), profile=profile)
        traj = wflow1d.run_wflow(spec, X0, p, tau, horizon, equilibrium=nu, profile=profile)
        distances = wflow1d.distances_to(traj, nu, p)
        writer.write_trajectory(traj, distances, p, 'jko-quantile', {**cfg.instance, **cfg.solver})
        snapshot_every = int(cfg.get('solver.snapshot_every', 0))
        if snapshot_every > 0:
            writer.write_snapshots('quantiles.csv', wflow1d.quantile_snapshots(traj, snapshot_every))
        checks: List[Dict[str, Any]] = []
        summary: Dict[str, Any] = {'spec': spec.to_dict(), 'equilibrium': nu.meta}

        lam = cfg.get('checks.lam')
        decay = wflow1d.decay_audit(spec, traj, nu, p, lam=lam, profile=profile)
        writer.write_json('decay.json', decay.to_dict())
        n_transport, n_envelope = decay.violations
        checks.append(check('decay-transport-chain', decay.transport_status is Status.PASS,
                            float(decay.transport_slack.min()), violations=n_transport))
        checks.append(check('decay-envelope-chain', decay.envelope_status is Status.PASS,
                            float(decay.envelope_slack.min()), violations=n_envelope))

        tol_ineq = cfg.get('checks.tol_ineq')
        lam_hats = cfg.get('checks.lam_hats')
        measures = [traj.states[-1]]
        n_random = int(cfg.get('checks.n_random', 0))
        measures += self._random_gaussians(np.random.default_rng(cfg.seed), n_random, X0.M)
        audits = [wflow1d.audit_inequalities(spec, mu, nu, p, lam_hats=_as_list(lam_hats) if lam_hats else None,
                                             tol=tol_ineq, profile=profile) for mu in measures]
        writer.write_json('inequalities.json', {'final_state': audits[0].to_dict(),
                                                'random': [a.to_dict() for a in audits[1:]]})
        worst: Dict[str, float] = {}
        failed: Dict[str, int] = {}
        for audit in audits:
            for record in audit.records:
                worst[record.name] = min(worst.get(record.name, math.inf), record.slack)
                failed[record.name] = failed.get(record.name, 0) + (record.status is not Status.PASS)
        for record_name in worst:
            checks.append(check(f'inequality:{record_name}', failed[record_name] == 0, worst[record_name],
                                failures=failed[record_name], n_measures=len(audits)))
        lam_V = spec.lam_V
        gaps = []
        for audit in audits:
            gen = audit.get(f'generalized-lojasiewicz[{float(lam_V):g}]')
            ls = audit.get('log-sobolev')
            gaps.append(abs(gen.rhs - ls.rhs) / max(1.0, abs(ls.rhs)))
        checks.append(check('generalized-matches-log-sobolev', max(gaps) <= 1e-12, 1e-12 - max(gaps)))

        t = traj.t
        if name == 'fokker-planck' and cfg.get('checks.ou_tol') is not None:
            ou_tol = float(cfg.get('checks.ou_tol'))
            kappa = float(cfg.instance.get('kappa', 1.0))
            center = float(cfg.instance.get('center', 0.0))
            std0 = float(cfg.instance.get('init_std', 1.0))
            exact = ou_distance(t, float(cfg.instance.get('init_mean', 2.0)), std0, kappa, center)
            rel = np.abs(distances - exact) / np.maximum(exact, 1e-12)
            writer.write_rows('ou_comparison.csv', ('t', 'measured', 'closed_form', 'relative_error'),
                              [(repr(float(a)), repr(float(b)), repr(float(c)), repr(float(d)))
                               for a, b, c, d in zip(t, distances, exact, rel)])
            checks.append(check('ornstein-uhlenbeck', float(rel.max()) <= ou_tol, ou_tol - float(rel.max()),
                                max_relative_error=float(rel.max())))
        rate = fitted_rate(t, distances)
        summary['fitted_rate'] = rate
        if cfg.get('checks.rate_max') is not None:
            rate_max = float(cfg.get('checks.rate_max'))
            checks.append(check('decay-rate', rate <= rate_max, rate_max - rate, fitted_rate=rate))

        plots.energy_plot(writer.file('energy.svg'), t, traj.E, title=f'{cfg.name}: free energy')
        plots.distance_plot(writer.file('distance.svg'), t, distances, bound=decay.envelope,
                            title=f'{cfg.name}: W_p to equilibrium')
        return {**summary, 'checks': checks}

    # Smooth energies and certificates

    def _certify(self, cloud, writer: ExperimentWriter, C: Optional[float], bins: Optional[int],
                 eps: Optional[float], R: Optional[float] = None) -> Dict[str, Any]:
        level = klcert.level_profile(cloud, n_bins=bins, R=R)
        chain = klcert.discrete_talweg(cloud, level, C=C)
        cert = klcert.build_theta(level, C=C, cloud=cloud, eps=eps)
        verification = klcert.verify_kl(cert, cloud, strict=False)
        writer.write_json('certificate.json', {'profile': level.to_dict(), 'talweg': chain.to_dict(),
                                               'certificate': cert.to_dict(),
                                               'verification': verification.to_dict()})
        return {'verification': verification, 'chain': chain}

    def _run_smooth_ls(self, cfg: ExperimentConfig, writer: ExperimentWriter,
                       profile: Optional[str]) -> Dict[str, Any]:
        E = presets.smooth_energy(cfg.get('instance.preset'), cfg.instance, cfg.seed)
        phi = cfg.get('instance.phi')
        phi = E.minimizer if phi is None else np.asarray(_as_list(phi))
        if phi is None:
            raise ValueError(f"Energy '{E.name}' has no declared minimizer; set instance.phi")
        radius = float(cfg.get('instance.radius', 0.1))
        n = int(cfg.get('instance.n_samples', 10000))
        pts = klcert.ball_points(phi, radius, n, np.random.default_rng(cfg.seed))
        cloud = klcert.sample_cloud(pts, E.value, E.slope, phi, source='ball')
        write_cloud_csv(writer.file('cloud.csv'), cloud)
        alphas = cfg.get('solver.alphas')
        report = klcert.fit_ls(cloud, alphas=_as_list(alphas) if alphas is not None else None)
        writer.write_json('ls_fit.json', report.to_dict())
        checks: List[Dict[str, Any]] = []
        summary: Dict[str, Any] = {'energy': E.name, 'fit': report.to_dict()}
        if cfg.get('checks.alpha_range') is not None:
            lo, hi = _pair(cfg.get('checks.alpha_range'), 'checks.alpha_range')
            a = report.alpha_regression
            checks.append(check('alpha-regression', lo <= a <= hi, min(a - lo, hi - a), alpha=a))

        cert = self._certify(cloud, writer, cfg.get('solver.C'), cfg.get('solver.bins'), radius)
        margin = cert['verification'].margin
        checks.append(check('kl-certificate', margin >= 0.0, margin, n_checked=cert['verification'].n_checked))

        if cfg.get('checks.equivalence'):
            fit = report.fit_for(float(cfg.get('checks.equivalence_alpha', report.recommended_alpha)))
            equivalence = klcert.et_ls_equivalence(cloud, fit, [phi], E.lam)
            writer.write_json('equivalence.json', equivalence.to_dict())
            checks.append(check('et-from-ls', equivalence.et_status is Status.PASS, equivalence.et_slack))
            checks.append(check('ls-from-et', equivalence.ls_status is Status.PASS, equivalence.ls_slack))

        v0 = cfg.get('instance.v0')
        if v0 is not None:
            talweg = smooth_mod.smooth_line_talweg(E, phi, _as_list(v0), delta=float(cfg.get('instance.delta', 1.0)),
                                                   seed=cfg.seed)
            writer.write_json('talweg.json', talweg.to_dict())
            writer.write_rows('talweg.csv', ('r', 'h'),
                              [(repr(float(a)), repr(float(b))) for a, b in zip(talweg.r, talweg.h)])
            checks.append(check('talweg-monotone', talweg.monotone, float(np.diff(talweg.h).min()),
                                ls_constant=talweg.ls_constant))

        plots.slope_scatter(writer.file('slope_scatter.svg'), cloud.r, cloud.g, report.alpha_regression,
                            title=f'{cfg.name}: {E.name}')
        return {**summary, 'checks': checks}

    def _run_certify_kl(self, cfg: ExperimentConfig, writer: ExperimentWriter,
                        profile: Optional[str]) -> Dict[str, Any]:
        cloud = load_cloud_csv(cfg.get('instance.cloud'))
        eps = cfg.get('solver.eps')
        cert = self._certify(cloud, writer, cfg.get('solver.C'), cfg.get('solver.bins'), eps, cfg.get('solver.R'))
        verification = cert['verification']
        tol = get_config(profile).KL_VERIFY_TOL
        checks = [check('kl-certificate', verification.status is Status.PASS, verification.margin + tol,
                        margin=verification.margin, n_checked=verification.n_checked)]
        summary: Dict[str, Any] = {'cloud': repr(cloud), 'talweg_monotone': cert['chain'].monotone}
        psi = cfg.get('instance.psi')
        if psi is not None:
            knots = np.asarray(_as_list(psi)).reshape(-1, 2)
            et = klcert.et_profile(cloud, knots, eps=eps)
            writer.write_json('et_profile.json', et.to_dict())
            checks.append(check('et-profile', et.status is Status.PASS, et.worst, local=et.local))
        if int((cloud.r > 0).sum()) >= 2:
            report = klcert.fit_ls(cloud)
            writer.write_json('ls_fit.json', report.to_dict())
            summary['fit'] = report.to_dict()
            plots.slope_scatter(writer.file('slope_scatter.svg'), cloud.r, cloud.g, report.alpha_regression,
                                title=cfg.name)
        return {**summary, 'checks': checks}

    def _run_rates_table(self, cfg: ExperimentConfig, writer: ExperimentWriter,
                         profile: Optional[str]) -> Dict[str, Any]:
        preds = rates.prediction_table(_as_list(cfg.get('instance.p')), _as_list(cfg.get('instance.alpha')),
                                       _as_list(cfg.get('instance.c')), _as_list(cfg.get('instance.e0')),
                                       t0=float(cfg.get('instance.t0', 0.0)))
        writer.write_json('rates.json', [p.to_dict() for p in preds])
        writer.write_rows('rates.csv', ('p', 'alpha', 'c', 'E0', 'regime', 't_hat', 't_hat_stated', 'rate'),
                          [(repr(p.p), repr(p.alpha), repr(p.c), repr(p.E0), p.regime.value,
                            '' if p.t_hat is None else repr(p.t_hat),
                            '' if p.t_hat_stated is None else repr(p.t_hat_stated),
                            '' if p.rate is None else repr(p.rate)) for p in preds])
        checks: List[Dict[str, Any]] = []
        if cfg.get('checks.t_hat') is not None:
            expected = float(cfg.get('checks.t_hat'))
            got = preds[0].t_hat
            err = math.inf if got is None else abs(got - expected)
            checks.append(check('t-hat', err <= 1e-12, 1e-12 - err, t_hat=got, expected=expected))
        if cfg.get('checks.scaling'):
            for name, stated in (('extinction-scaling', False), ('extinction-scaling-stated', True)):
                residual = extinction_scaling_residual(preds, stated=stated)
                checks.append(check(name, residual <= 1e-12, 1e-12 - residual))
        regimes = {r.value: sum(p.regime is r for p in preds) for r in Regime}
        return {'n_predictions': len(preds), 'regimes': regimes, 'checks': checks}

    def _run_stability(self, cfg: ExperimentConfig, writer: ExperimentWriter,
                       profile: Optional[str]) -> Dict[str, Any]:
        E = presets.smooth_energy(cfg.get('instance.preset'), cfg.instance, cfg.seed)
        phi = cfg.get('instance.phi')
        phi = E.minimizer if phi is None else np.asarray(_as_list(phi))
        if phi is None:
            raise ValueError(f"Energy '{E.name}' has no declared minimizer; set instance.phi")
        deltas = cfg.get('solver.deltas')
        report = smooth_mod.stability_probe(E, phi, float(cfg.get('solver.eps')),
                                            deltas=_as_list(deltas) if deltas is not None else None,
                                            tau=float(cfg.get('solver.tau', 0.05)),
                                            horizon=float(cfg.get('solver.horizon', 2.0)),
                                            p=float(cfg.get('solver.p', 2.0)), seed=cfg.seed, profile=profile)
        writer.write_json('stability.json', report.to_dict())
        checks: List[Dict[str, Any]] = []
        margin = report.eps - min(report.excursions)
        expect = cfg.get('checks.expect')
        if expect is not None:
            if expect not in ('stable', 'unstable'):
                raise ValueError(f"checks.expect must be 'stable' or 'unstable', got {expect!r}")
            ok = report.stable == (expect == 'stable')
            checks.append(check('stability-verdict', ok, margin if expect == 'stable' else -margin,
                                verdict=report.verdict))
        if cfg.get('checks.local_minimum') is not None:
            expected = bool(cfg.get('checks.local_minimum'))
            ok = report.local_minimum == expected
            checks.append(check('local-minimum', ok, report.local_min_gap if expected else -report.local_min_gap))
        return {'verdict': report.verdict, 'checks': checks}


async def _run_all(runner: ExperimentRunner, configs: Sequence[ExperimentConfig],
                   workers: int) -> List[ExperimentResult]:
    limiter = anyio.CapacityLimiter(workers)
    results: List[Optional[ExperimentResult]] = [None] * len(configs)

    async def run_one(index: int, cfg: ExperimentConfig) -> None:
        results[index] = await anyio.to_thread.run_sync(runner.run_safe, cfg, limiter=limiter)

    async with anyio.create_task_group() as tg:
        for index, cfg in enumerate(configs):
            tg.start_soon(run_one, index, cfg)
    return results


def run_batch(configs: Sequence[ExperimentConfig], runner: Optional[ExperimentRunner] = None,
              workers: Optional[int] = None) -> List[ExperimentResult]:
    """
    Run experiments concurrently, at most `workers` at a time.

    Results come back in config order; a failing experiment is reported in
    its result and does not cancel the others.
    """
    runner = runner or ExperimentRunner()
    workers = HarnessConfig.get_workers() if workers is None else workers
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    logger.info("Running %d experiment(s) with %d worker(s)", len(configs), workers)
    return anyio.run(_run_all, runner, configs, workers)
