"""
Dependence Measures from Gauge Geometry

Turns boundary minima of a gauge into extremal-dependence summaries:
the angular coefficient lambda(omega), the residual tail dependence
coefficients eta_C, the censored coefficients tau_C(delta), marginal gauges
and the conditional-extremes normalisation exponents (alpha, beta).

Coordinate indices and subsets are 0-based.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import linregress

from utils.gauge import Gauge, GaugeError, register_family
from utils.geometry import (
    build_B1_C_delta,
    build_B_omega,
    build_min_face,
    minimize,
    minimize_box,
)


logger = logging.getLogger(__name__)


UNDETERMINED = "undetermined"

# Flags attached to results
FLAG_OUTSIDE_HYPOTHESES = "outside_proposition_hypotheses"
FLAG_NO_LIMIT_GUARANTEE = "no_conditional_limit_guarantee"
FLAG_RAPID_VARIATION = "rapid_variation"
FLAG_BETA_SIGN = "beta_sign_unresolved"
FLAG_NONLINEAR_FIT = "nonlinear_log_log_fit"
FLAG_EXTENDED = "extended_valued"
FLAG_UNVERIFIED = "unverified_gauge"

# Conditional exponents
ALPHA_SCAN_POINTS = 1001
ALPHA_BASIN_TOL = 1e-2
ALPHA_ROOT_TOL = 1e-9
PLATEAU_TOL = 8 * np.finfo(float).eps
PLATEAU_MIN_WIDTH = 1e-6
BISECTION_TOL = 1e-10
BETA_U_MAX = 1e-3
BETA_U_MIN = 1e-6
BETA_POINTS = 20
BETA_R2_GATE = 0.999
RAPID_SLOPE_RATIO = 1.25
SIGN_STEP = 1e-8

# Numerical marginalisation
MARGINAL_RESOLUTION_1D = 65
MARGINAL_RESOLUTION = 17
MARGINAL_STARTS = 3

LAMBDA_CLAMP_TOL = 1e-9
MIDPOINT_DECIMALS = 9
DEFAULT_GRID_POINTS = 21
DEFAULT_SIMPLEX_DIVISIONS_3D = 6


class MeasureError(ValueError):
    """Invalid subset or a dependence measure that cannot be computed."""


def _subset(subset, dim):
    if subset is None:
        return tuple(range(dim))
    out = tuple(sorted(set(int(i) for i in subset)))
    if not out:
        raise MeasureError("subset must be nonempty")
    if out[0] < 0 or out[-1] >= dim:
        raise MeasureError(f"subset {list(out)} is not within range({dim})")
    return out


@register_family("marginal")
class MarginalGauge(Gauge):
    """
    Gauge of a sub-vector: the minimum of the parent gauge over the dropped
    coordinates, computed numerically for each evaluation point.
    """

    def __init__(self, parent, keep):
        keep = tuple(keep)
        super().__init__(len(keep))
        self.parent = parent
        self.keep = keep
        self.drop = tuple(i for i in range(parent.dim) if i not in keep)
        self.extended_valued = parent.extended_valued
        self.verified = parent.verified
        self.continuous = parent.continuous

    @classmethod
    def from_params(cls, dim, params):
        from utils.gauge import from_descriptor

        gauge = cls(from_descriptor(params['parent']), params['keep'])
        if dim is not None and dim != gauge.dim:
            raise GaugeError(f"descriptor dim {dim} does not match keep of size {gauge.dim}")
        return gauge

    def params(self):
        return {'parent': self.parent.to_descriptor(), 'keep': list(self.keep)}

    def _full(self, kept, dropped):
        full = np.empty(dropped.shape[:-1] + (self.parent.dim,))
        full[..., list(self.keep)] = kept
        full[..., list(self.drop)] = dropped
        return full

    def _evaluate_one(self, y):
        m = len(self.drop)
        zero = np.zeros(m)
        at_zero = float(self.parent(self._full(y, zero)))
        if at_zero == 0.0:
            return 0.0
        top = float(y.max()) if len(y) else 0.0
        if math.isfinite(at_zero):
            bound = max(at_zero, top)
        else:
            bound = 2.0 * max(1.0, top) + 1.0
        candidates = [zero] + [np.full(m, v) for v in np.unique(y) if v <= bound]

        def func(dropped):
            return self.parent(self._full(y, dropped))

        resolution = MARGINAL_RESOLUTION_1D if m == 1 else MARGINAL_RESOLUTION
        value, _ = minimize_box(func, zero, np.full(m, bound), resolution=resolution,
                                n_starts=MARGINAL_STARTS, candidates=candidates)
        return value

    def _evaluate(self, points):
        return np.array([self._evaluate_one(y) for y in points])


def marginalize(g, keep, numerical=False):
    """
    Gauge of the sub-vector indexed by ``keep``.

    Closed forms are used when the family has one (Gaussian sub-matrix,
    sum and max gauges, Vine3 base pair, additive blocks); otherwise the
    result evaluates by numerical minimisation over the dropped coordinates.

    Args:
        g: Gauge
        keep: Nonempty proper subset of coordinate indices
        numerical: Force the numerical path

    Returns:
        Gauge: The marginal gauge of dimension len(keep)
    """
    keep = _subset(keep, g.dim)
    if len(keep) == g.dim:
        raise MeasureError("keep is the full index set: the marginal is the gauge itself")
    if not numerical:
        shortcut = g.marginal_shortcut(keep)
        if shortcut is not None:
            logger.debug("closed-form marginal of %s over %s", g.family, keep)
            return shortcut
    return MarginalGauge(g, keep)


def lambda_omega(g, omega, **options):
    """
    Angular dependence coefficient lambda(omega) = max(omega) * min over B_omega of g.

    Args:
        g: Gauge
        omega: Point of the unit simplex
        **options: Passed to geometry.minimize

    Returns:
        float: lambda(omega), clamped to [max(omega), 1]
    """
    omega = np.asarray(omega, dtype=float)
    if len(omega) != g.dim:
        raise MeasureError(f"omega has {len(omega)} entries for a {g.dim}-dimensional gauge")
    result = minimize(g, build_B_omega(omega), **options)
    top = float(omega.max())
    value = top * result.value
    clamped = min(max(value, top), 1.0)
    if abs(clamped - value) > LAMBDA_CLAMP_TOL:
        logger.warning("lambda(%s)=%.12g outside [%.6g, 1]; clamped", omega.tolist(), value, top)
    return clamped


def eta(g, subset=None, **options):
    """
    Coefficient of tail dependence eta_C = 1 / min over {min(x)=1} of g_C.

    Args:
        g: Gauge
        subset: Coordinate subset C (default: all coordinates)
        **options: Passed to geometry.minimize

    Returns:
        float: eta_C in (0, 1]
    """
    subset = _subset(subset, g.dim)
    marginal = g if len(subset) == g.dim else marginalize(g, subset)
    result = minimize(marginal, build_min_face(marginal.dim), **options)
    return 1.0 / result.value


def tau(g, subset, delta, **options):
    """
    Censored tail dependence coefficient tau_C(delta).

    tau_C(delta) = 1 / min over B^1_{C,delta} of g; for C = D this is eta_D
    for every delta. An infinite boundary minimum (rapid variation) gives 0.

    Args:
        g: Gauge
        subset: Coordinate subset C
        delta: Censoring exponent in [0, 1]
        **options: Passed to geometry.minimize

    Returns:
        float: tau_C(delta) in [0, 1]
    """
    subset = _subset(subset, g.dim)
    if not 0.0 <= float(delta) <= 1.0:
        raise MeasureError(f"delta must lie in [0, 1], got {delta}")
    if len(subset) == g.dim:
        return eta(g, subset, **options)
    result = minimize(g, build_B1_C_delta(subset, delta, g.dim), allow_infinite=True, **options)
    if not math.isfinite(result.value):
        return 0.0
    return min(1.0 / result.value, 1.0)


def eta_lower_bound(g):
    """Lower bound 1/g(1, ..., 1) of eta_D."""
    return 1.0 / g(np.ones(g.dim))


@dataclass(frozen=True)
class ConditionalExponents:
    """Normalisation exponents of the conditional extremes model for the pair (j, i)."""

    j: int
    i: int
    alpha: float
    beta: object
    alpha_interval: tuple
    rho_rv: float = None
    r_squared: float = None
    flags: tuple = ()

    def to_dict(self):
        return {
            'j': self.j, 'i': self.i, 'alpha': self.alpha, 'beta': self.beta,
            'alpha_interval': list(self.alpha_interval), 'rho_rv': self.rho_rv,
            'r_squared': self.r_squared, 'flags': list(self.flags),
        }


def _pair(g, j, i):
    if g.dim == 2:
        if j not in (0, 1):
            raise MeasureError(f"conditioning index must be 0 or 1, got {j}")
        i = 1 - j if i is None else i
        if i != 1 - j:
            raise MeasureError(f"pair ({j}, {i}) is not a pair of distinct coordinates")
        return g, j, i
    if i is None:
        raise MeasureError("the second coordinate i is required when d > 2")
    pair = _subset([j, i], g.dim)
    if len(pair) != 2:
        raise MeasureError(f"pair ({j}, {i}) is not a pair of distinct coordinates")
    return marginalize(g, pair), pair.index(j), pair.index(i)


def _face_points(j, i, values):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    points = np.empty((len(values), 2))
    points[:, j] = 1.0
    points[:, i] = values
    return points


def face_remainder(g, j, i, values):
    """
    g - 1 on the face x_j = 1 at x_i = values, accurate near 0.

    Args:
        g: Bivariate gauge
        j: Conditioning coordinate (pinned at 1)
        i: Free coordinate
        values: Values of x_i

    Returns:
        np.ndarray: The remainders, +inf where g is infinite
    """
    points = _face_points(j, i, values)
    return g.excess(points) + np.maximum(points.max(axis=1) - 1.0, 0.0)


def _extend_plateau(h, root, direction, step):
    """Move from ``root`` along ``direction`` while h stays at rounding level."""
    inside = root
    while True:
        trial = min(max(inside + direction * step, 0.0), 1.0)
        if trial == inside:
            return inside
        if h(trial) <= PLATEAU_TOL:
            inside = trial
            continue
        outside = trial
        break
    while abs(outside - inside) > BISECTION_TOL:
        mid = 0.5 * (inside + outside)
        if h(mid) <= PLATEAU_TOL:
            inside = mid
        else:
            outside = mid
    return inside


def _underflow_root(excess, grid, k):
    """Root behind a run of exact zeros ending at grid index k (isolated contact only)."""
    start = k
    while start > 0 and excess[start - 1] == 0.0:
        start -= 1
    if start == 0:
        return grid[0]
    if k == len(grid) - 1:
        return grid[-1]
    return 0.5 * (grid[start] + grid[k])


def _alpha_with_interval(g, j, i, scan_points):
    grid = np.linspace(0.0, 1.0, scan_points)
    excess = face_remainder(g, j, i, grid)
    if not np.isfinite(excess).any():
        raise MeasureError("gauge is infinite on the whole conditioning face")

    def h(a):
        return float(face_remainder(g, j, i, a)[0])

    left = np.concatenate([[np.inf], excess[:-1]])
    right = np.concatenate([excess[1:], [np.inf]])
    basins = np.flatnonzero((excess <= left) & (excess <= right) & (excess <= ALPHA_BASIN_TOL))
    step = grid[1] - grid[0]
    for k in basins[::-1]:
        root, value = grid[k], excess[k]
        if value == 0.0 and g.isolated_face_contact:
            root = _underflow_root(excess, grid, k)
        if value > PLATEAU_TOL:
            lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, scan_points - 1)]
            res = minimize_scalar(h, bounds=(lo, hi), method='bounded', options={'xatol': 1e-14})
            if res.fun < value:
                root, value = float(res.x), float(res.fun)
        if value <= ALPHA_ROOT_TOL:
            # a remainder decaying faster than any power sits at rounding level
            # over a visible interval without being a level-1 segment
            if value > PLATEAU_TOL or g.isolated_face_contact:
                return root, (root, root)
            upper = _extend_plateau(h, root, 1.0, step)
            lower = _extend_plateau(h, root, -1.0, step)
            if upper - lower <= PLATEAU_MIN_WIDTH:
                # rounding-level contact around an isolated root
                return root, (root, root)
            return upper, (lower, upper)
    raise MeasureError(
        f"no alpha in [0, 1] with g = 1 on the face x_{j} = 1: the gauge violates unit-face contact"
    )


def cond_alpha(g, j=0, i=None, scan_points=ALPHA_SCAN_POINTS):
    """
    Location exponent alpha: the largest a in [0, 1] with g = 1 at x_j = 1, x_i = a.

    Args:
        g: Gauge (marginalised to the pair when d > 2)
        j: Conditioning coordinate
        i: Other coordinate (required when d > 2)
        scan_points: Size of the scan grid on [0, 1]

    Returns:
        float: alpha
    """
    pair, jj, ii = _pair(g, j, i)
    return _alpha_with_interval(pair, jj, ii, scan_points)[0]


def _beta_fit(g, j, i, alpha):
    """Return (beta, rho_rv, r_squared, flags) from the remainder g(face at alpha+u) - 1."""
    if g.extended_valued:
        return UNDETERMINED, None, None, (FLAG_EXTENDED,)
    u = np.geomspace(BETA_U_MAX, BETA_U_MIN, BETA_POINTS)
    remainder = face_remainder(g, j, i, alpha + u)
    if not np.isfinite(remainder).all():
        return UNDETERMINED, None, None, (FLAG_EXTENDED,)
    positive = remainder > 0
    if not positive.any():
        if g.isolated_face_contact:
            # strictly positive in exact arithmetic: underflow of a super-polynomial decay
            return 1.0, math.inf, None, (FLAG_RAPID_VARIATION,)
        return UNDETERMINED, None, None, (FLAG_NONLINEAR_FIT,)
    if not positive.all():
        # underflow towards u -> 0 after positive values: faster than any power
        first_zero = int(np.argmin(positive))
        if positive[:first_zero].all() and not positive[first_zero:].any():
            return 1.0, math.inf, None, (FLAG_RAPID_VARIATION,)
        return UNDETERMINED, None, None, (FLAG_NONLINEAR_FIT,)

    log_u, log_r = np.log(u), np.log(remainder)
    local = np.diff(log_r) / np.diff(log_u)
    if (np.all(np.diff(local) >= -1e-6 * np.abs(local[1:]))
            and local[0] > 0 and local[-1] / local[0] > RAPID_SLOPE_RATIO):
        return 1.0, math.inf, None, (FLAG_RAPID_VARIATION,)
    fit = linregress(log_u, log_r)
    r_squared = float(fit.rvalue ** 2)
    rho = float(fit.slope)
    if r_squared < BETA_R2_GATE or rho <= 0:
        return UNDETERMINED, rho, r_squared, (FLAG_NONLINEAR_FIT,)
    return 1.0 - 1.0 / rho, rho, r_squared, ()


def cond_beta(g, j=0, i=None, alpha=None):
    """
    Scale exponent beta = 1 - 1/rho, with rho the regular-variation index at 0
    of u -> g(face at alpha + u) - 1, fitted on a log-log grid.

    Args:
        g: Gauge
        j: Conditioning coordinate
        i: Other coordinate (required when d > 2)
        alpha: Precomputed alpha (computed when None)

    Returns:
        float or str: beta, or "undetermined"
    """
    pair, jj, ii = _pair(g, j, i)
    if alpha is None:
        alpha = _alpha_with_interval(pair, jj, ii, ALPHA_SCAN_POINTS)[0]
    return _beta_fit(pair, jj, ii, alpha)[0]


def conditional_exponents(g, j=0, i=None, scan_points=ALPHA_SCAN_POINTS):
    """
    Alpha, beta and diagnostics for the pair (j, i).

    Args:
        g: Gauge
        j: Conditioning coordinate
        i: Other coordinate (required when d > 2)
        scan_points: Size of the alpha scan grid

    Returns:
        ConditionalExponents
    """
    pair, jj, ii = _pair(g, j, i)
    alpha, interval = _alpha_with_interval(pair, jj, ii, scan_points)
    beta, rho, r_squared, flags = _beta_fit(pair, jj, ii, alpha)
    flags = list(flags)
    if interval[0] <= BISECTION_TOL and interval[1] >= 1.0 - BISECTION_TOL:
        flags.append(FLAG_NO_LIMIT_GUARANTEE)
    if alpha <= BISECTION_TOL and not pair.extended_valued:
        slope = float(face_remainder(pair, jj, ii, SIGN_STEP)[0]) / SIGN_STEP
        if slope < 1e-6:
            flags.append(FLAG_BETA_SIGN)
    if not g.continuous:
        flags.append(FLAG_OUTSIDE_HYPOTHESES)
    j_out = j
    i_out = (1 - j) if (g.dim == 2 and i is None) else i
    return ConditionalExponents(j_out, i_out, float(alpha), beta, tuple(float(v) for v in interval),
                                rho, r_squared, tuple(flags))


def default_omega_grid(dim, points=DEFAULT_GRID_POINTS):
    """Regular grid on the unit simplex."""
    if dim == 2:
        w = np.linspace(0.0, 1.0, points)
        return [(float(a), float(1.0 - a)) for a in w]
    if dim == 3:
        m = DEFAULT_SIMPLEX_DIVISIONS_3D
        return [(i / m, j / m, (m - i - j) / m) for i in range(m + 1) for j in range(m + 1 - i)]
    grid = [tuple(1.0 / dim for _ in range(dim))]
    grid.extend(tuple(float(k == i) for k in range(dim)) for i in range(dim))
    return grid


def default_subsets(dim):
    """Every nonempty subset of the coordinates."""
    return [c for size in range(1, dim + 1) for c in itertools.combinations(range(dim), size)]


@dataclass
class DependenceSummary:
    """All dependence measures of one gauge."""

    dim: int
    model: dict = None
    lambda_table: dict = field(default_factory=dict)
    eta: dict = field(default_factory=dict)
    tau_table: dict = field(default_factory=dict)
    cond: dict = field(default_factory=dict)
    eta_bound: float = None
    flags: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def to_records(self):
        """Flat rows {quantity, index_json, value}."""
        rows = []

        def add(quantity, index, value):
            rows.append({'quantity': quantity, 'index_json': json.dumps(index, sort_keys=True), 'value': value})

        for omega, value in self.lambda_table.items():
            add('lambda', {'omega': list(omega)}, value)
        for subset, value in self.eta.items():
            add('eta', {'C': list(subset)}, value)
        for (subset, delta), value in self.tau_table.items():
            add('tau', {'C': list(subset), 'delta': delta}, value)
        for (j, i), exponents in self.cond.items():
            add('alpha', {'j': j, 'i': i}, exponents.alpha)
            add('beta', {'j': j, 'i': i}, exponents.beta)
        if self.eta_bound is not None:
            add('eta_lower_bound', {}, self.eta_bound)
        return rows

    def to_dict(self):
        return {
            'model': self.model,
            'dim': self.dim,
            'lambda': [{'omega': list(k), 'value': v} for k, v in self.lambda_table.items()],
            'eta': [{'C': list(k), 'value': v} for k, v in self.eta.items()],
            'tau': [{'C': list(c), 'delta': d, 'value': v} for (c, d), v in self.tau_table.items()],
            'conditional': [e.to_dict() for e in self.cond.values()],
            'eta_lower_bound': self.eta_bound,
            'flags': list(self.flags),
            'errors': list(self.errors),
        }

    def lambda_convexity_violations(self, tol=1e-6):
        """
        Midpoint test of the convexity of lambda on the stored omega grid.

        Every pair of grid points whose midpoint is also on the grid gives one
        check lambda(mid) <= (lambda(a) + lambda(b)) / 2.

        Returns:
            list: (a, mid, b) triples that violate the inequality
        """
        keys = list(self.lambda_table)
        lookup = {tuple(np.round(k, MIDPOINT_DECIMALS)): k for k in keys}
        violations = []
        for a, b in itertools.combinations(keys, 2):
            mid = lookup.get(tuple(np.round((np.asarray(a) + np.asarray(b)) / 2.0, MIDPOINT_DECIMALS)))
            if mid is None or mid in (a, b):
                continue
            chord = 0.5 * (self.lambda_table[a] + self.lambda_table[b])
            if self.lambda_table[mid] > chord + tol:
                violations.append((a, mid, b))
        return violations

    def check_invariants(self, tol=1e-6):
        """
        Check the range, monotonicity and convexity properties of the stored values.

        Convexity failures of unverified gauges are logged, not reported.

        Returns:
            list: Human-readable violations (empty when all hold)
        """
        problems = []
        violations = self.lambda_convexity_violations(tol)
        if violations and FLAG_UNVERIFIED in self.flags:
            logger.warning("lambda is not convex on %d grid segments of an unverified gauge", len(violations))
        else:
            problems.extend(f"lambda not convex between {a} and {b}" for a, _, b in violations)
        for omega, value in self.lambda_table.items():
            if not max(omega) - tol <= value <= 1.0 + tol:
                problems.append(f"lambda{omega}={value} outside [max(omega), 1]")
        for subset, value in self.eta.items():
            if not 0.0 < value <= 1.0 + tol:
                problems.append(f"eta{subset}={value} outside (0, 1]")
        by_subset = {}
        for (subset, delta), value in sorted(self.tau_table.items()):
            if not -tol <= value <= 1.0 + tol:
                problems.append(f"tau{subset}({delta})={value} outside [0, 1]")
            by_subset.setdefault(subset, []).append(value)
        for subset, values in by_subset.items():
            if np.any(np.diff(values) < -tol):
                problems.append(f"tau{subset} is not nondecreasing in delta")
        full = tuple(range(self.dim))
        if full in self.eta:
            eta_full = self.eta[full]
            for (subset, _), value in self.tau_table.items():
                if subset == full and abs(value - eta_full) > tol:
                    problems.append("tau_D differs from eta_D")
            if self.eta_bound is not None and eta_full < self.eta_bound - tol:
                problems.append("eta_D below 1/g(1, ..., 1)")
            centre = tuple(1.0 / self.dim for _ in range(self.dim))
            for omega, value in self.lambda_table.items():
                if np.allclose(omega, centre) and abs(self.dim * value * eta_full - 1.0) > tol:
                    problems.append("d * lambda(1/d, ..., 1/d) * eta_D != 1")
        for (j, i), exponents in self.cond.items():
            if not -tol <= exponents.alpha <= 1.0 + tol:
                problems.append(f"alpha({j},{i}) outside [0, 1]")
            if exponents.beta != UNDETERMINED and exponents.beta > 1.0 + tol:
                problems.append(f"beta({j},{i}) above 1")
        return problems


def _record_error(summary, quantity, index, exc):
    logger.warning("%s %s failed: %s", quantity, index, exc)
    summary.errors.append({'quantity': quantity, 'index': index, 'error': str(exc)})


def summarize(g, omega_grid=None, delta_grid=None, subsets=None, pairs=None, **options):
    """
    Compute every dependence measure of a gauge on the given grids.

    Per-entry failures are recorded in ``errors`` instead of aborting.

    Args:
        g: Gauge
        omega_grid: Simplex points for lambda (default: regular grid)
        delta_grid: Censoring exponents for tau (default: 21 points)
        subsets: Subsets C for eta (|C| >= 2) and tau (default: all)
        pairs: (j, i) pairs for alpha and beta (default: all ordered pairs)
        **options: Passed to geometry.minimize

    Returns:
        DependenceSummary
    """
    d = g.dim
    omega_grid = default_omega_grid(d) if omega_grid is None else omega_grid
    delta_grid = np.linspace(0.0, 1.0, DEFAULT_GRID_POINTS) if delta_grid is None else delta_grid
    subsets = default_subsets(d) if subsets is None else [_subset(c, d) for c in subsets]
    pairs = list(itertools.permutations(range(d), 2)) if pairs is None else pairs

    try:
        model = g.to_descriptor()
    except GaugeError:
        model = None
    summary = DependenceSummary(dim=d, model=model)
    if not g.continuous:
        summary.flags.append(FLAG_OUTSIDE_HYPOTHESES)
    if not g.verified:
        summary.flags.append(FLAG_UNVERIFIED)
    if g.extended_valued:
        summary.flags.append(FLAG_EXTENDED)

    for omega in omega_grid:
        key = tuple(float(w) for w in omega)
        try:
            summary.lambda_table[key] = lambda_omega(g, key, **options)
        except ValueError as exc:
            _record_error(summary, 'lambda', {'omega': list(key)}, exc)

    for subset in subsets:
        subset = tuple(subset)
        if len(subset) >= 2:
            try:
                summary.eta[subset] = eta(g, subset, **options)
            except ValueError as exc:
                _record_error(summary, 'eta', {'C': list(subset)}, exc)
        for delta in delta_grid:
            delta = float(delta)
            try:
                summary.tau_table[(subset, delta)] = tau(g, subset, delta, **options)
            except ValueError as exc:
                _record_error(summary, 'tau', {'C': list(subset), 'delta': delta}, exc)

    for j, i in pairs:
        try:
            summary.cond[(j, i)] = conditional_exponents(g, j, i)
        except ValueError as exc:
            _record_error(summary, 'conditional', {'j': j, 'i': i}, exc)

    try:
        summary.eta_bound = eta_lower_bound(g)
    except ValueError as exc:
        _record_error(summary, 'eta_lower_bound', {}, exc)
    return summary

