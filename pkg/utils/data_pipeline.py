"""
Study Pipeline

Batch comparison of geometry against simulation: for every (quantity, n,
seed) cell a cloud is sampled, the quantity is estimated and compared with
its value from the gauge, and cells are aggregated into pass/fail verdicts.

Study kinds:
- coherence: estimates vs gauge values, z-scores and tolerances
- tau_agreement: censored Hill vs fixed-threshold regression for tau
- hw_eta_sweep: eta of mixture gauges vs the piecewise formula (no sampling)
- hausdorff_trend: median distance of scaled clouds to the limit set over n
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from utils.estimation import (
    EstimatorConfig,
    hausdorff,
    hill_eta,
    lambda_hat,
    tau_hat,
    tau_hat_fixed_threshold,
)
from utils.gauge import from_descriptor
from utils.measures import conditional_exponents, eta, lambda_omega, tau
from utils.mixtures import eta_hw_formula, hw_mix_gauge
from utils.sampling import ModelSpec, model_gauge, sample, scale_cloud


logger = logging.getLogger(__name__)


STUDY_KINDS = ('coherence', 'tau_agreement', 'hw_eta_sweep', 'hausdorff_trend')

# Aggregation
PASS_FRACTION = 0.9
AGREEMENT_SES = 2.0
HW_ETA_TOL = 1e-4
HW_ALPHA_TOL = 1e-6


@dataclass(frozen=True)
class StudyConfig:
    """One study: what to simulate, which cells to run and how to judge them."""

    name: str
    kind: str
    model: dict = None
    quantities: tuple = ()
    n: tuple = (10_000,)
    seeds: tuple = (0,)
    pass_fraction: float = PASS_FRACTION
    estimator: dict = field(default_factory=dict)
    gauges_v: tuple = ()
    gamma_grid: tuple = ()

    def __post_init__(self):
        if self.kind not in STUDY_KINDS:
            raise ValueError(f"unknown study kind {self.kind!r}; known: {STUDY_KINDS}")
        if self.kind != 'hw_eta_sweep' and self.model is None:
            raise ValueError(f"a {self.kind} study needs a model")

    @classmethod
    def from_dict(cls, data):
        n = data.get('n', [10_000])
        return cls(
            name=data['name'],
            kind=data['kind'],
            model=data.get('model'),
            quantities=tuple(data.get('quantities', ())),
            n=tuple(n) if isinstance(n, list) else (int(n),),
            seeds=tuple(data.get('seeds', [0])),
            pass_fraction=float(data.get('pass_fraction', PASS_FRACTION)),
            estimator=dict(data.get('estimator', {})),
            gauges_v=tuple(data.get('gauges_v', ())),
            gamma_grid=tuple(data.get('gamma_grid', ())),
        )


def _estimator_config(study, seed):
    return EstimatorConfig(seed=seed, **study.estimator)


def truth_value(g, spec):
    """
    Value of a quantity computed from the gauge.

    Args:
        g: Gauge
        spec: {'quantity': 'eta'|'tau'|'lambda', 'C'|'omega', 'delta'}

    Returns:
        float
    """
    quantity = spec['quantity']
    if quantity == 'eta':
        return eta(g, spec['C'])
    if quantity == 'tau':
        return tau(g, spec['C'], spec['delta'])
    if quantity == 'lambda':
        return lambda_omega(g, spec['omega'])
    raise ValueError(f"unknown quantity {quantity!r}")


def estimate_value(cloud, spec, config):
    """Estimate a quantity from a cloud; returns an estimation.Estimate."""
    quantity = spec['quantity']
    if quantity == 'eta':
        return hill_eta(cloud, spec['C'], config)
    if quantity == 'tau':
        return tau_hat(cloud, spec['C'], spec['delta'], config)
    if quantity == 'lambda':
        return lambda_hat(cloud, spec['omega'], config=config)
    raise ValueError(f"unknown quantity {quantity!r}")


def z_score(estimate, truth, se):
    if not se or not math.isfinite(se):
        return math.nan
    return (estimate - truth) / se


def _index(spec):
    return {k: v for k, v in spec.items() if k not in ('quantity', 'tolerance', 'relative')}


def _within(spec, estimate, truth):
    tolerance = float(spec.get('tolerance', 0.05))
    if spec.get('relative'):
        tolerance *= abs(truth)
    return abs(estimate - truth) <= tolerance


def _run_cells(tasks, func, workers):
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, tasks))
    return [func(task) for task in tasks]


def _coherence(study, workers):
    model = ModelSpec.from_descriptor(study.model)
    g = model_gauge(model)
    truths = {i: truth_value(g, spec) for i, spec in enumerate(study.quantities)}
    tasks = [(n, seed) for n in study.n for seed in study.seeds]

    def run(task):
        n, seed = task
        cloud = sample(model, n, seed=seed)
        cells = []
        for i, spec in enumerate(study.quantities):
            cell = {'cell_id': f"{spec['quantity']}{i}-n{n}-s{seed}", 'quantity': spec['quantity'],
                    'index': _index(spec), 'n': n, 'seed': seed, 'truth': truths[i]}
            try:
                est = estimate_value(cloud, spec, _estimator_config(study, seed))
            except ValueError as exc:
                cell['error'] = str(exc)
                cells.append(cell)
                continue
            cell.update({'estimate': est.value, 'se': est.se, 'k': est.k, 'n_eff': est.n_eff,
                         'z': z_score(est.value, truths[i], est.se),
                         'within': bool(_within(spec, est.value, truths[i]))})
            cells.append(cell)
        return cells

    return [cell for cells in _run_cells(tasks, run, workers) for cell in cells]


def _tau_agreement(study, workers):
    model = ModelSpec.from_descriptor(study.model)
    tasks = [(n, seed) for n in study.n for seed in study.seeds]

    def run(task):
        n, seed = task
        cloud = sample(model, n, seed=seed)
        config = _estimator_config(study, seed)
        cells = []
        for spec in study.quantities:
            cell = {'cell_id': f"tau{spec['C']}-{spec['delta']}-n{n}-s{seed}", 'quantity': 'tau_agreement',
                    'index': _index(spec), 'n': n, 'seed': seed}
            try:
                hill_based = tau_hat(cloud, spec['C'], spec['delta'], config)
                regression = tau_hat_fixed_threshold(cloud, spec['C'], spec['delta'], config=config)
            except ValueError as exc:
                cell['error'] = str(exc)
                cells.append(cell)
                continue
            combined = math.hypot(hill_based.se, regression.se)
            cell.update({'estimate': hill_based.value, 'se': hill_based.se,
                         'fixed_threshold': regression.value, 'fixed_threshold_se': regression.se,
                         'z': z_score(hill_based.value, regression.value, combined),
                         'within': bool(abs(hill_based.value - regression.value) <= AGREEMENT_SES * combined)})
            cells.append(cell)
        return cells

    return [cell for cells in _run_cells(tasks, run, workers) for cell in cells]


def eta_hw_sweep(g_v, gamma_grid):
    """
    eta and alpha of mixture gauges over a gamma grid next to their truths.

    Args:
        g_v: Bivariate gauge of V
        gamma_grid: Values in (0, 1)

    Returns:
        list: One cell per gamma
    """
    eta_v = eta(g_v)
    alpha_v = conditional_exponents(g_v).alpha
    cells = []
    for gamma in gamma_grid:
        g_x = hw_mix_gauge(g_v, gamma)
        eta_x = eta(g_x)
        truth = eta_hw_formula(eta_v, gamma)
        alpha_x = conditional_exponents(g_x).alpha
        cells.append({
            'cell_id': f"{g_v.family}-gamma{gamma}", 'quantity': 'eta_hw', 'index': {'gamma': gamma},
            'family': g_v.family, 'estimate': eta_x, 'truth': truth,
            'alpha_v': alpha_v, 'alpha_x': alpha_x,
            'within': bool(abs(eta_x - truth) <= HW_ETA_TOL and abs(alpha_x - alpha_v) <= HW_ALPHA_TOL),
        })
    return cells


def _hw_eta_sweep(study, workers):
    gauges = [from_descriptor(d) for d in study.gauges_v]
    results = _run_cells(gauges, lambda g: eta_hw_sweep(g, study.gamma_grid), workers)
    return [cell for cells in results for cell in cells]


def hausdorff_trend(model, n_values, seeds, workers=1):
    """
    Hausdorff distance of scaled clouds to the limit set per (n, seed).

    Returns:
        list: Cells with the distance in 'estimate'
    """
    model = model if isinstance(model, ModelSpec) else ModelSpec.from_descriptor(model)
    g = model_gauge(model)
    tasks = [(n, seed) for n in n_values for seed in seeds]

    def run(task):
        n, seed = task
        scaled = scale_cloud(sample(model, n, seed=seed))
        return {'cell_id': f"hausdorff-n{n}-s{seed}", 'quantity': 'hausdorff', 'index': {},
                'n': n, 'seed': seed, 'estimate': hausdorff(scaled.points, g)}

    return _run_cells(tasks, run, workers)


def _hausdorff_trend(study, workers):
    return hausdorff_trend(study.model, study.n, study.seeds, workers)


def aggregate(cells, pass_fraction=PASS_FRACTION):
    """
    Group cells by (quantity, index, n) and judge each group.

    Returns:
        list: Groups with passed/total counts and a verdict
    """
    groups = {}
    for cell in cells:
        key = (cell['quantity'], repr(sorted(cell.get('index', {}).items())), cell.get('n'))
        groups.setdefault(key, []).append(cell)
    out = []
    for (quantity, _, n), members in groups.items():
        judged = [c for c in members if 'within' in c]
        passed = sum(c['within'] for c in judged)
        out.append({
            'quantity': quantity, 'index': members[0].get('index', {}), 'n': n,
            'passed': passed, 'total': len(members),
            'pass': bool(judged) and passed >= pass_fraction * len(members),
        })
    return out


def trend_verdict(cells):
    """Median distance per n and whether it strictly decreases in n."""
    by_n = {}
    for cell in cells:
        if 'estimate' in cell:
            by_n.setdefault(cell['n'], []).append(cell['estimate'])
    ns = sorted(by_n)
    medians = [float(np.median(by_n[n])) for n in ns]
    decreasing = all(b < a for a, b in zip(medians, medians[1:]))
    return {'n': ns, 'median': medians, 'decreasing': bool(decreasing)}


def run_study(study, workers=1):
    """
    Run a study and judge it.

    Args:
        study: StudyConfig
        workers: Cells run concurrently

    Returns:
        dict: Report with 'cells', 'aggregate', 'passed' and 'errors'
    """
    runners = {
        'coherence': _coherence,
        'tau_agreement': _tau_agreement,
        'hw_eta_sweep': _hw_eta_sweep,
        'hausdorff_trend': _hausdorff_trend,
    }
    logger.info("running study %s (%s)", study.name, study.kind)
    cells = runners[study.kind](study, workers)
    errors = [c for c in cells if 'error' in c]
    report = {'name': study.name, 'kind': study.kind, 'cells': cells, 'errors': len(errors)}
    if study.kind == 'hausdorff_trend':
        report['trend'] = trend_verdict(cells)
        report['passed'] = report['trend']['decreasing']
    else:
        report['aggregate'] = aggregate(cells, study.pass_fraction)
        report['passed'] = all(group['pass'] for group in report['aggregate'])
    if errors:
        logger.warning("study %s: %d cells failed", study.name, len(errors))
    return report
