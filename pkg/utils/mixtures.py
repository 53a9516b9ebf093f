"""
Mixture Gauges

Gauges of constructions built from independent pieces: concatenation of
independent blocks (sum of the block gauges), linear images z -> g(A^-1 z),
and the additive mixture X = gamma * S + V of a perfectly dependent common
factor S with a vector V, whose gauge is

    g_X(x) = min over s in [0, min(x)/gamma] of s + g_V(x - gamma s).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from utils.gauge import Gauge, GaugeError, IndependenceGauge, register_family


logger = logging.getLogger(__name__)


HW_GRID_POINTS = 65
HW_XATOL = 1e-10
SINGULAR_COND = 1e12
DOMAIN_TOL = 1e-12

# hw_beta_check diagnostics
BETA_MATCH_TOL = 5e-3
REMAINDER_OFFSET = 1e-4
EXPANSION_TOL = 0.05
DERIVATIVE_STEP = 1e-7
ZERO_BRANCH_OFFSETS = (1e-3, 1e-4)
ZERO_BRANCH_TOL = 1e-8


class MixtureError(GaugeError):
    """Invalid mixture parameter or singular linear map."""


@register_family("additive")
class AdditiveGauge(Gauge):
    """Gauge of independent blocks placed side by side: the sum of block gauges."""

    def __init__(self, blocks):
        blocks = list(blocks)
        if not blocks:
            raise MixtureError("an additive gauge needs at least one block")
        super().__init__(sum(b.dim for b in blocks))
        self.blocks = blocks
        edges = np.cumsum([0] + [b.dim for b in blocks])
        self.slices = [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
        self.extended_valued = any(b.extended_valued for b in blocks)
        self.continuous = all(b.continuous for b in blocks)
        self.verified = all(b.verified for b in blocks)

    @classmethod
    def from_params(cls, dim, params):
        from utils.gauge import from_descriptor

        gauge = cls([from_descriptor(b) for b in params['blocks']])
        if dim is not None and dim != gauge.dim:
            raise GaugeError(f"descriptor dim {dim} does not match block dimensions {gauge.dim}")
        return gauge

    def params(self):
        return {'blocks': [b.to_descriptor() for b in self.blocks]}

    def _evaluate(self, points):
        total = np.zeros(len(points))
        for block, cols in zip(self.blocks, self.slices):
            total = total + block._evaluate(points[:, cols])
        return total

    def marginal_shortcut(self, keep):
        from utils.measures import marginalize

        pieces = []
        for block, cols in zip(self.blocks, self.slices):
            local = [k - cols.start for k in keep if cols.start <= k < cols.stop]
            if not local:
                continue
            pieces.append(block if len(local) == block.dim else marginalize(block, local))
        return pieces[0] if len(pieces) == 1 else AdditiveGauge(pieces)


def concat_gauge(g_s, g_v):
    """
    Gauge of (S, V) for independent S and V.

    Args:
        g_s: Gauge of the first block
        g_v: Gauge of the second block

    Returns:
        AdditiveGauge: g_S(z_S) + g_V(z_V)
    """
    return AdditiveGauge([g_s, g_v])


@register_family("linear_image")
class LinearImageGauge(Gauge):
    """
    Gauge of A Z for an invertible matrix A: z -> g(A^-1 z), restricted to
    the image of the orthant (+inf outside it).
    """

    def __init__(self, gauge, matrix):
        matrix = np.array(matrix, dtype=float)
        if matrix.shape != (gauge.dim, gauge.dim):
            raise MixtureError(f"matrix must be {gauge.dim}x{gauge.dim}, got {matrix.shape}")
        if not np.isfinite(np.linalg.cond(matrix)) or np.linalg.cond(matrix) > SINGULAR_COND:
            raise MixtureError("matrix is singular")
        super().__init__(gauge.dim)
        self.gauge = gauge
        matrix.setflags(write=False)
        self.matrix = matrix
        inverse = np.linalg.inv(matrix)
        inverse[np.abs(inverse) < DOMAIN_TOL] = 0.0
        inverse.setflags(write=False)
        self.inverse = inverse
        # a nonnegative inverse keeps the orthant inside the domain
        self.extended_valued = gauge.extended_valued or bool((inverse < 0).any())
        self.continuous = gauge.continuous and not self.extended_valued
        self.verified = gauge.verified

    @classmethod
    def from_params(cls, dim, params):
        from utils.gauge import from_descriptor

        gauge = cls(from_descriptor(params['gauge']), params['matrix'])
        if dim is not None and dim != gauge.dim:
            raise GaugeError(f"descriptor dim {dim} does not match matrix size {gauge.dim}")
        return gauge

    def params(self):
        return {'gauge': self.gauge.to_descriptor(), 'matrix': self.matrix.tolist()}

    def _evaluate(self, points):
        pre = points @ self.inverse.T
        scale = np.maximum(np.abs(points).max(axis=1), 1.0)
        inside = (pre >= -DOMAIN_TOL * scale[:, None]).all(axis=1)
        values = np.full(len(points), np.inf)
        if inside.any():
            values[inside] = self.gauge._evaluate(np.maximum(pre[inside], 0.0))
        return values


def linear_image_gauge(g, matrix):
    """
    Gauge of the linear image A Z.

    Args:
        g: Gauge of Z
        matrix: Invertible d x d matrix A

    Returns:
        LinearImageGauge
    """
    return LinearImageGauge(g, matrix)


def _check_gamma(gamma):
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise MixtureError(f"gamma must lie in (0, 1), got {gamma}")
    return gamma


@register_family("hw_mix")
class HWMixGauge(Gauge):
    """
    Gauge of gamma * S + V with S a perfectly dependent standard exponential
    factor independent of V.

    The inner minimisation over s is a grid scan of [0, min(x)/gamma]
    followed by bounded Brent around the best grid point; both ends of the
    interval are always evaluated since g_V has kinks where a coordinate
    of x - gamma s reaches 0.
    """

    def __init__(self, gauge_v, gamma):
        super().__init__(gauge_v.dim)
        self.gauge_v = gauge_v
        self.gamma = _check_gamma(gamma)
        self.verified = gauge_v.verified
        self.continuous = gauge_v.continuous
        self.extended_valued = gauge_v.extended_valued

    @classmethod
    def from_params(cls, dim, params):
        from utils.gauge import from_descriptor

        gauge = cls(from_descriptor(params['gauge_v']), params['gamma'])
        if dim is not None and dim != gauge.dim:
            raise GaugeError(f"descriptor dim {dim} does not match g_V dimension {gauge.dim}")
        return gauge

    def params(self):
        return {'gauge_v': self.gauge_v.to_descriptor(), 'gamma': self.gamma}

    def _objective(self, x, s):
        """s + g_V(x - gamma s) for a single x and an array of s."""
        s = np.atleast_1d(s)
        inner = np.maximum(x[None, :] - self.gamma * s[:, None], 0.0)
        return s + self.gauge_v._evaluate(inner)

    def _solve(self, points):
        upper = points.min(axis=1) / self.gamma
        frac = np.linspace(0.0, 1.0, HW_GRID_POINTS)
        s = upper[:, None] * frac[None, :]
        inner = np.maximum(points[:, None, :] - self.gamma * s[..., None], 0.0)
        h = s + self.gauge_v._evaluate(inner.reshape(-1, self.dim)).reshape(s.shape)
        best = np.argmin(h, axis=1)
        rows = np.arange(len(points))
        values = h[rows, best]
        argmins = s[rows, best]
        for r in np.flatnonzero(upper > 0):
            if not math.isfinite(values[r]):
                continue
            k = best[r]
            lo, hi = s[r, max(k - 1, 0)], s[r, min(k + 1, HW_GRID_POINTS - 1)]
            res = minimize_scalar(lambda t, r=r: float(self._objective(points[r], t)[0]),
                                  bounds=(lo, hi), method='bounded', options={'xatol': HW_XATOL})
            if res.fun < values[r]:
                values[r], argmins[r] = float(res.fun), float(res.x)
        return values, argmins

    def _evaluate(self, points):
        return self._solve(points)[0]

    def argmin_s(self, x):
        """
        Minimising common-factor level s* for each point.

        Args:
            x: Point or array of points

        Returns:
            float or np.ndarray: s* in [0, min(x)/gamma]
        """
        points, shape = self._as_points(x)
        return self._reshape(self._solve(points)[1], shape)


def hw_mix_gauge(g_v, gamma):
    """
    Gauge of the additive mixture gamma * S + V.

    Args:
        g_v: Gauge of V
        gamma: Mixing weight in (0, 1)

    Returns:
        HWMixGauge
    """
    return HWMixGauge(g_v, gamma)


def hw_mix_via_construction(g_v, gamma):
    """
    The mixture gauge built step by step: concatenate V with a scalar
    exponential S, map (v, s) -> (v + gamma s, s) and marginalise S out.

    Args:
        g_v: Gauge of V
        gamma: Mixing weight in (0, 1)

    Returns:
        Gauge: Numerically marginalised gauge of dimension g_v.dim
    """
    from utils.measures import marginalize

    gamma = _check_gamma(gamma)
    d = g_v.dim
    matrix = np.eye(d + 1)
    matrix[:d, d] = gamma
    joint = linear_image_gauge(concat_gauge(g_v, IndependenceGauge(1)), matrix)
    return marginalize(joint, range(d))


def eta_hw_formula(eta_v, gamma):
    """
    Coefficient of tail dependence of the mixture: eta_V when gamma < eta_V,
    gamma otherwise.
    """
    if not 0.0 < gamma <= 1.0:
        raise MixtureError(f"gamma must lie in (0, 1], got {gamma}")
    return eta_v if gamma < eta_v else gamma


@dataclass(frozen=True)
class HWBetaReport:
    """Scale-exponent comparison between g_V and its mixture gauge g_X."""

    gamma: float
    alpha_v: float
    alpha_x: float
    beta_v: object
    beta_x: object
    beta_match: bool
    differentiable: bool
    remainder_ratio: float
    expansion_match: object
    zero_branch_predicted: bool
    zero_branch_observed: bool

    def to_dict(self):
        return dict(self.__dict__)


def hw_beta_check(g_v, gamma, j=0, i=1):
    """
    Compare (alpha, beta) of g_V with those of the mixture gauge.

    Args:
        g_v: Bivariate gauge of V
        gamma: Mixing weight in (0, 1)
        j: Conditioning coordinate
        i: Other coordinate

    Returns:
        HWBetaReport
    """
    from utils.measures import UNDETERMINED, conditional_exponents, face_remainder

    if g_v.dim != 2:
        raise MixtureError(f"hw_beta_check needs a bivariate g_V, got d={g_v.dim}")
    g_x = hw_mix_gauge(g_v, gamma)
    ev = conditional_exponents(g_v, j, i)
    ex = conditional_exponents(g_x, j, i)

    if UNDETERMINED in (ev.beta, ex.beta):
        beta_match = ev.beta == ex.beta
    else:
        beta_match = abs(ev.beta - ex.beta) <= BETA_MATCH_TOL
    differentiable = ev.beta != UNDETERMINED and ev.beta > BETA_MATCH_TOL

    alpha = ev.alpha
    r_v = float(face_remainder(g_v, j, i, alpha + REMAINDER_OFFSET)[0])
    r_x = float(face_remainder(g_x, j, i, alpha + REMAINDER_OFFSET)[0])
    ratio = r_x / r_v if r_v > 0 else math.nan
    expansion_match = abs(ratio - 1.0) <= EXPANSION_TOL if differentiable else None

    at_alpha = float(face_remainder(g_v, j, i, alpha)[0])
    right = float(face_remainder(g_v, j, i, alpha + DERIVATIVE_STEP)[0])
    slope = (right - at_alpha) / DERIVATIVE_STEP
    predicted = 1.0 - gamma * (1.0 + (1.0 - alpha) * slope) > 0

    trial_points = np.zeros((len(ZERO_BRANCH_OFFSETS), 2))
    trial_points[:, j] = 1.0
    trial_points[:, i] = alpha + np.asarray(ZERO_BRANCH_OFFSETS)
    observed = bool(np.all(g_x.argmin_s(trial_points) <= ZERO_BRANCH_TOL))

    report = HWBetaReport(gamma, ev.alpha, ex.alpha, ev.beta, ex.beta, bool(beta_match), bool(differentiable),
                          ratio, expansion_match, bool(predicted), observed)
    logger.info("hw beta check gamma=%g: beta_V=%s beta_X=%s", gamma, ev.beta, ex.beta)
    return report
