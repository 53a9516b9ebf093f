"""
Empirical Estimators

Estimates eta_C, tau_C(delta) and lambda(omega) from sample clouds through
the tails of univariate structure variables (minima over coordinate
subsets), with bootstrap standard errors, and measures how far a scaled
cloud is from the limit set {g <= 1}.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import linregress
from sklearn.neighbors import KDTree

from utils.geometry import level_set_boundary


logger = logging.getLogger(__name__)


# Estimator defaults
K_EXPONENT = 0.6
K_SWEEP = (0.5, 0.6, 0.7)
BOOTSTRAP_REPLICATES = 200
MIN_EXCEEDANCES = 20
CENSOR_WARN_FACTOR = 10
TIE_RTOL = 1e-12

# Threshold grids for the regression estimators
GRID_POINTS = 15
GRID_LOWER_QUANTILE = 0.95
GRID_TOP_EXCEEDANCES = 50

# Hausdorff discretisation
HAUSDORFF_FILL = 20


class EstimationError(ValueError):
    """Invalid estimator input or too little tail data."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Run-time settings shared by the estimators."""

    k: int = None
    k_exponent: float = K_EXPONENT
    delta_grid: tuple = tuple(np.linspace(0.0, 1.0, 11).tolist())
    omega_grid: tuple = ((0.5, 0.5),)
    bootstrap: int = BOOTSTRAP_REPLICATES
    seed: int = 0
    min_exceedances: int = MIN_EXCEEDANCES


@dataclass(frozen=True)
class Estimate:
    """A point estimate with its bootstrap standard error."""

    quantity: str
    index: dict
    value: float
    se: float
    k: int
    n_eff: int
    seed: int
    flags: tuple = field(default_factory=tuple)

    def to_record(self):
        return {
            'quantity': self.quantity, 'index': self.index, 'value': self.value, 'se': self.se,
            'k': self.k, 'n_eff': self.n_eff, 'seed': self.seed, 'flags': list(self.flags),
        }


def _pareto(cloud):
    return cloud.points if cloud.margins == 'pareto' else np.exp(cloud.points)


def _exponential(cloud):
    return np.log(cloud.points) if cloud.margins == 'pareto' else cloud.points


def _subset(subset, dim):
    subset = sorted(set(int(i) for i in subset))
    if not subset or subset[0] < 0 or subset[-1] >= dim:
        raise EstimationError(f"C={subset} is not a nonempty subset of range({dim})")
    return subset


def _default_k(n, config):
    if config.k is not None:
        return int(config.k)
    return int(math.floor(n ** config.k_exponent))


def hill(values, k):
    """
    Hill estimate (1/k) sum log(T_(n-m+1) / T_(n-k)) of the tail index of the
    positive values.

    Args:
        values: Sample of a positive structure variable
        k: Number of upper order statistics

    Returns:
        tuple: (estimate, tied) where tied flags a repeated threshold value
    """
    values = np.asarray(values, dtype=float)
    values = values[values > 0]
    k = int(k)
    if not 1 <= k < len(values):
        raise EstimationError(f"k={k} must satisfy 1 <= k < {len(values)} (positive observations)")
    top = np.partition(values, len(values) - k - 1)[len(values) - k - 1:]
    threshold = top.min()
    upper = np.sort(top)[1:]
    tied = bool(abs(upper[0] - threshold) <= TIE_RTOL * threshold)
    return float(np.mean(np.log(upper / threshold))), tied


def _bootstrap(statistic, data, replicates, seed):
    rng = np.random.default_rng(seed)
    n = len(data)
    draws = []
    for _ in range(replicates):
        try:
            draws.append(statistic(data[rng.integers(0, n, size=n)]))
        except EstimationError:
            continue
    if len(draws) < 2:
        return math.nan
    return float(np.std(draws, ddof=1))


def _hill_estimate(quantity, index, structure, k, n_eff, config, flags=()):
    value, tied = hill(structure, k)
    flags = list(flags)
    if tied:
        flags.append('tied_order_statistics')
    se = _bootstrap(lambda t: hill(t, k)[0], structure, config.bootstrap, config.seed)
    return Estimate(quantity, index, value, se, k, n_eff, config.seed, tuple(flags))


def hill_eta(cloud, subset, config=None):
    """
    Hill estimate of eta_C from the structure variable min over C of X_P.

    Args:
        cloud: SampleCloud
        subset: Coordinate subset C with |C| >= 2
        config: EstimatorConfig

    Returns:
        Estimate
    """
    config = config or EstimatorConfig()
    x = _pareto(cloud)
    subset = _subset(subset, x.shape[1])
    if len(subset) < 2:
        raise EstimationError("eta needs |C| >= 2")
    structure = x[:, subset].min(axis=1)
    k = _default_k(len(structure), config)
    return _hill_estimate('eta', {'C': subset}, structure, k, len(structure), config)


def hill_eta_sweep(cloud, subset, exponents=K_SWEEP, config=None):
    """
    Sensitivity of hill_eta to the choice k = n^exponent.

    Returns:
        dict: exponent -> Estimate
    """
    config = config or EstimatorConfig()
    return {
        e: hill_eta(cloud, subset, replace(config, k=None, k_exponent=e))
        for e in exponents
    }


def _censor(x, subset, delta):
    rest = [j for j in range(x.shape[1]) if j not in subset]
    structure = x[:, subset].min(axis=1)
    if not rest:
        return structure, np.ones(len(x), dtype=bool)
    mask = x[:, rest].max(axis=1) < structure ** delta
    return structure, mask


def tau_hat(cloud, subset, delta, config=None):
    """
    Censored Hill estimate of tau_C(delta): Hill on min over C of X_P among
    observations with max outside C below (min over C)^delta.

    Args:
        cloud: SampleCloud
        subset: Coordinate subset C
        delta: Censoring exponent in [0, 1]
        config: EstimatorConfig

    Returns:
        Estimate
    """
    config = config or EstimatorConfig()
    x = _pareto(cloud)
    subset = _subset(subset, x.shape[1])
    if not 0.0 <= delta <= 1.0:
        raise EstimationError(f"delta must lie in [0, 1], got {delta}")
    if len(subset) == x.shape[1]:
        estimate = hill_eta(cloud, subset, config)
        return Estimate('tau', {'C': subset, 'delta': delta}, estimate.value, estimate.se,
                        estimate.k, estimate.n_eff, estimate.seed, estimate.flags)

    structure, mask = _censor(x, subset, delta)
    n_eff = int(mask.sum())
    if n_eff == 0:
        raise EstimationError(f"no observation satisfies the censoring event for C={subset}, delta={delta}")
    k = min(_default_k(n_eff, config), n_eff - 1)
    flags = []
    if n_eff < CENSOR_WARN_FACTOR * k:
        logger.warning("tau_hat C=%s delta=%g: only %d censored observations for k=%d", subset, delta, n_eff, k)
        flags.append('widened_uncertainty')
    value, tied = hill(structure[mask], k)
    if tied:
        flags.append('tied_order_statistics')

    def statistic(rows):
        s, m = _censor(rows, subset, delta)
        return hill(s[m], min(k, int(m.sum()) - 1))[0]

    se = _bootstrap(statistic, x, config.bootstrap, config.seed)
    return Estimate('tau', {'C': subset, 'delta': delta}, value, se, k, n_eff, config.seed, tuple(flags))


def _grid_from_quantiles(values, n, log_scale):
    top = 1.0 - GRID_TOP_EXCEEDANCES / n
    if top <= GRID_LOWER_QUANTILE:
        raise EstimationError(f"n={n} is too small for a threshold grid")
    lo, hi = np.quantile(values, [GRID_LOWER_QUANTILE, top])
    if log_scale:
        return np.geomspace(lo, hi, GRID_POINTS)
    return np.linspace(lo, hi, GRID_POINTS)


def _slope_fit(levels, counts, n, min_exceedances, log_levels):
    keep = counts >= min_exceedances
    if keep.sum() < 2:
        raise EstimationError("fewer than two threshold grid points have enough exceedances")
    x = np.log(levels[keep]) if log_levels else levels[keep]
    fit = linregress(x, np.log(counts[keep] / n))
    return float(fit.slope), int(keep.sum())


def tau_hat_fixed_threshold(cloud, subset, delta, t_grid=None, config=None):
    """
    tau_C(delta) from the decay of P(min_C X_P > t, max_{not C} X_P <= t^delta)
    in t: the log-log slope is -1/tau.

    Args:
        cloud: SampleCloud
        subset: Coordinate subset C
        delta: Censoring exponent in [0, 1]
        t_grid: Thresholds (default: quantile-based geometric grid)
        config: EstimatorConfig

    Returns:
        Estimate
    """
    config = config or EstimatorConfig()
    x = _pareto(cloud)
    subset = _subset(subset, x.shape[1])
    n = len(x)
    rest = [j for j in range(x.shape[1]) if j not in subset]
    structure = x[:, subset].min(axis=1)
    if t_grid is None:
        t_grid = _grid_from_quantiles(structure, n, log_scale=True)
    t_grid = np.asarray(t_grid, dtype=float)

    def fit(rows):
        s = rows[:, subset].min(axis=1)
        other = rows[:, rest].max(axis=1) if rest else np.zeros(len(rows))
        counts = np.array([np.count_nonzero((s > t) & (other <= t ** delta)) for t in t_grid], dtype=float)
        slope, used = _slope_fit(t_grid, counts, len(rows), config.min_exceedances, log_levels=True)
        if slope >= 0:
            raise EstimationError("empirical probability does not decay in t")
        return -1.0 / slope, used

    value, used = fit(x)
    se = _bootstrap(lambda rows: fit(rows)[0], x, config.bootstrap, config.seed)
    flags = ('dropped_grid_points',) if used < len(t_grid) else ()
    return Estimate('tau_fixed_threshold', {'C': subset, 'delta': delta}, value, se, used, n,
                    config.seed, flags)


def lambda_hat(cloud, omega, t_grid=None, config=None):
    """
    lambda(omega) from the exponential decay of P(X_E > omega v) in v.

    Uses the structure variable min over {omega_j > 0} of X_E,j / omega_j,
    whose survival function decays like exp(-lambda(omega) v).

    Args:
        cloud: SampleCloud
        omega: Point of the unit simplex
        t_grid: Levels v (default: quantile-based linear grid)
        config: EstimatorConfig

    Returns:
        Estimate
    """
    config = config or EstimatorConfig()
    x = _exponential(cloud)
    omega = np.asarray(omega, dtype=float)
    if len(omega) != x.shape[1] or (omega < 0).any() or abs(omega.sum() - 1.0) > 1e-9:
        raise EstimationError(f"omega must lie on the unit simplex of dimension {x.shape[1]}")
    active = omega > 0
    n = len(x)

    def structure_of(rows):
        return (rows[:, active] / omega[active]).min(axis=1)

    structure = structure_of(x)
    if t_grid is None:
        t_grid = _grid_from_quantiles(structure, n, log_scale=False)
    t_grid = np.asarray(t_grid, dtype=float)

    def fit(values):
        counts = np.array([np.count_nonzero(values > v) for v in t_grid], dtype=float)
        slope, used = _slope_fit(t_grid, counts, len(values), config.min_exceedances, log_levels=False)
        return -slope, used

    value, used = fit(structure)
    se = _bootstrap(lambda s: fit(s)[0], structure, config.bootstrap, config.seed)
    flags = ('dropped_grid_points',) if used < len(t_grid) else ()
    return Estimate('lambda', {'omega': omega.tolist()}, value, se, used, n, config.seed, flags)


def hausdorff(points, g, resolution=None, fill=HAUSDORFF_FILL):
    """
    Hausdorff distance between a scaled cloud and the limit set {g <= 1}.

    Cloud points inside the set contribute nothing; points outside count by
    their distance to the set. The set side counts how far each point of a
    radial filling of {g <= 1} is from the nearest cloud point, so a cloud
    that leaves part of the interior empty is penalised.

    Args:
        points: Scaled cloud, shape (n, d) with d in {2, 3}
        g: Gauge of the limit set
        resolution: Boundary discretisation (default per geometry)
        fill: Radial layers used to discretise the set itself

    Returns:
        float: The distance
    """
    points = np.asarray(points, dtype=float)
    boundary = level_set_boundary(g, resolution).vertices
    layers = np.linspace(0.0, 1.0, fill + 1)[1:]
    filled = np.concatenate([boundary * t for t in layers] + [np.zeros((1, g.dim))])

    outside = ~(g(np.maximum(points, 0.0)) <= 1.0) | (points < 0).any(axis=1)
    outward = 0.0
    if outside.any():
        distances, _ = KDTree(filled).query(points[outside], k=1)
        outward = float(distances.max())
    coverage, _ = KDTree(points).query(filled, k=1)
    return max(outward, float(coverage.max()))
