"""
Sample Clouds

Simulates i.i.d. samples in standard exponential (or standard Pareto)
margins from the model families whose limit-set gauges are in the catalog,
and scales clouds by r_n = log n so that they settle onto {g <= 1}.

Generation is chunked: every chunk of CHUNK_SIZE rows draws from its own
child of ``numpy.random.SeedSequence(seed)``, so a cloud depends only on
(model, n, seed) and not on the worker count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import beta as beta_function
from scipy.special import betainc, expit, log_ndtr

from utils.gauge import (
    GaussianGauge,
    HuslerReissGPGauge,
    IndependenceGauge,
    InvertedHuslerReissGauge,
    InvertedLogisticGauge,
    LogisticGPGauge,
    Vine3Gauge,
    from_descriptor,
)
from utils.mixtures import HWMixGauge


logger = logging.getLogger(__name__)


MARGINS = ('exponential', 'pareto')
CHUNK_SIZE = 50_000
MIN_ACCEPTANCE = 1e-4
REJECTION_BATCH_FLOOR = 1024

MODEL_FAMILIES = {}


class SamplingError(ValueError):
    """Unsupported model, invalid sample size or failed sampler."""


def register_sampler(name):
    """
    Decorator registering a chunk sampler ``f(params, dim, size, rng)`` that
    returns (points in exponential margins, info dict).
    """
    def decorator(func):
        MODEL_FAMILIES[name] = func
        return func
    return decorator


@dataclass(frozen=True)
class ModelSpec:
    """A simulation model: family, dimension, parameters and margins."""

    family: str
    dim: int
    params: dict = field(default_factory=dict)
    margins: str = 'exponential'

    def __post_init__(self):
        if self.family not in MODEL_FAMILIES:
            raise SamplingError(f"unknown model family {self.family!r}; known: {sorted(MODEL_FAMILIES)}")
        if self.margins not in MARGINS:
            raise SamplingError(f"margins must be one of {MARGINS}, got {self.margins!r}")
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise SamplingError(f"dimension must be a positive integer, got {self.dim!r}")

    @classmethod
    def from_descriptor(cls, descriptor):
        if not isinstance(descriptor, dict) or 'family' not in descriptor:
            raise SamplingError("model descriptor must be an object with a 'family' key")
        params = dict(descriptor.get('params') or {})
        dim = descriptor.get('dim')
        if dim is None:
            dim = _default_dim(descriptor['family'], params)
        return cls(descriptor['family'], int(dim), params, descriptor.get('margins', 'exponential'))

    def to_descriptor(self):
        return {'family': self.family, 'dim': self.dim, 'params': self.params, 'margins': self.margins}


def _default_dim(family, params):
    if family == 'meta_gaussian' and 'sigma' in params:
        return len(params['sigma'])
    if family == 'vine3_copula':
        return 3
    if family == 'density_from_gauge':
        return from_descriptor(params['gauge']).dim
    if family == 'hw_spatial_mix':
        return ModelSpec.from_descriptor(params['model']).dim
    return 2


def _as_model(model):
    return model if isinstance(model, ModelSpec) else ModelSpec.from_descriptor(model)


@dataclass
class SampleCloud:
    """An n x d sample in the declared margins."""

    points: np.ndarray
    model: ModelSpec
    seed: int
    margins: str
    flags: list = field(default_factory=list)
    acceptance_rate: float = None

    @property
    def n(self):
        return len(self.points)

    @property
    def r_n(self):
        return math.log(self.n) if self.n > 0 else math.nan

    def to_frame(self):
        return pd.DataFrame(self.points, columns=[f"x{i}" for i in range(self.points.shape[1])])

    def sidecar(self):
        """JSON-serialisable metadata written next to the cloud CSV."""
        return {
            'model': self.model.to_descriptor(),
            'seed': self.seed,
            'n': self.n,
            'margins': self.margins,
            'flags': list(self.flags),
            'acceptance_rate': self.acceptance_rate,
        }


@dataclass(frozen=True)
class ScaledCloud:
    points: np.ndarray
    r_n: float
    flags: tuple = ()


def _sigma(params, dim):
    if 'sigma' in params:
        sigma = np.array(params['sigma'], dtype=float)
    elif 'rho' in params:
        if dim != 2:
            raise SamplingError("'rho' describes a bivariate model; use 'sigma' for d > 2")
        rho = float(params['rho'])
        sigma = np.array([[1.0, rho], [rho, 1.0]])
    else:
        raise SamplingError("meta_gaussian needs 'rho' or 'sigma'")
    if sigma.shape != (dim, dim):
        raise SamplingError(f"sigma must be {dim}x{dim}")
    return sigma


def _require_dim(family, dim, expected):
    if dim != expected:
        raise SamplingError(f"{family} is implemented for d={expected}, got d={dim}")


@register_sampler("meta_gaussian")
def _sample_meta_gaussian(params, dim, size, rng):
    sigma = _sigma(params, dim)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise SamplingError("sigma must be positive definite") from exc
    z = rng.standard_normal((size, dim)) @ chol.T
    info = {'flags': ['outside_proposition_hypotheses']} if (sigma < 0).any() else {}
    # -log(1 - Phi(z)) without cancellation in the upper tail
    return -log_ndtr(-z), info


def logistic_gp_log_survival(x, theta):
    """
    log P(X_1 > x) for a margin of the bivariate logistic generalised Pareto
    vector X = E + T - max(T), with T = theta * (independent Gumbel).

    Args:
        x: Values (any sign)
        theta: Logistic parameter in (0, 1)

    Returns:
        np.ndarray: The log survival function
    """
    x = np.asarray(x, dtype=float)
    a, b = 1.0 - theta, 1.0 + theta
    scale = beta_function(a, b)
    tail = 0.5 + scale * (1.0 - betainc(a, b, 0.5))
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = -x[positive] + math.log(tail)
    neg = x[~positive]
    if len(neg):
        level = expit(-neg / theta)
        out[~positive] = np.log(level + np.exp(-neg) * scale * (1.0 - betainc(a, b, level)))
    return np.minimum(out, 0.0)


@register_sampler("logistic_gp_copula")
def _sample_logistic_gp(params, dim, size, rng):
    _require_dim("logistic_gp_copula", dim, 2)
    theta = float(params['theta'])
    if not 0.0 < theta < 1.0:
        raise SamplingError(f"theta must lie in (0, 1), got {theta}")
    t = theta * rng.gumbel(size=(size, 2))
    x = rng.exponential(size=size)[:, None] + t - t.max(axis=1, keepdims=True)
    # exact probability integral transform to Exp(1)
    return -logistic_gp_log_survival(x.ravel(), theta).reshape(x.shape), {}


def positive_stable(alpha, size, rng):
    """
    Positive stable variables with Laplace transform exp(-t^alpha), by
    Kanter's representation.
    """
    if alpha == 1.0:
        return np.ones(size)
    u = rng.uniform(0.0, math.pi, size=size)
    w = rng.exponential(size=size)
    return (np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)
            * (np.sin((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha))


@register_sampler("inverted_logistic_copula")
def _sample_inverted_logistic(params, dim, size, rng):
    theta = float(params['theta'])
    if not 0.0 < theta <= 1.0:
        raise SamplingError(f"theta must lie in (0, 1], got {theta}")
    s = positive_stable(theta, size, rng)
    e = rng.exponential(size=(size, dim))
    return (e / s[:, None]) ** theta, {}


def husler_reiss_max_stable(lam, size, rng):
    """
    Exact bivariate Husler-Reiss max-stable sample in unit Frechet margins,
    simulated through extremal functions.

    Args:
        lam: Husler-Reiss parameter (> 0)
        size: Number of draws
        rng: numpy Generator

    Returns:
        np.ndarray: (size, 2) array
    """
    z = np.zeros((size, 2))
    for i in range(2):
        zeta = 1.0 / rng.exponential(size=size)
        active = np.arange(size)
        while len(active):
            active = active[zeta[active] > z[active, i]]
            if not len(active):
                break
            y = np.ones((len(active), 2))
            y[:, 1 - i] = np.exp(lam * rng.standard_normal(len(active)) - lam ** 2 / 2.0)
            candidate = zeta[active, None] * y
            accept = np.ones(len(active), dtype=bool) if i == 0 else candidate[:, 0] < z[active, 0]
            rows = active[accept]
            z[rows] = np.maximum(z[rows], candidate[accept])
            zeta[active] = 1.0 / (1.0 / zeta[active] + rng.exponential(size=len(active)))
    return z


@register_sampler("inverted_husler_reiss_copula")
def _sample_inverted_husler_reiss(params, dim, size, rng):
    _require_dim("inverted_husler_reiss_copula", dim, 2)
    lam = float(params['lam'])
    if not lam > 0:
        raise SamplingError(f"lam must be positive, got {lam}")
    # inverted copula: exponential margins are 1/Z for unit Frechet Z
    return 1.0 / husler_reiss_max_stable(lam, size, rng), {}


@register_sampler("husler_reiss_gp_copula")
def _sample_husler_reiss_gp(params, dim, size, rng):
    _require_dim("husler_reiss_gp_copula", dim, 2)
    lam = float(params['lam'])
    if not lam > 0:
        raise SamplingError(f"lam must be positive, got {lam}")
    kept, proposed = [], 0
    total = 0
    while total < size:
        batch = max(2 * (size - total), REJECTION_BATCH_FLOOR)
        t = np.zeros((batch, 2))
        t[:, 1] = lam * rng.standard_normal(batch)
        x = rng.exponential(size=batch)[:, None] + t - t.max(axis=1, keepdims=True)
        x = x[(x > 0).all(axis=1)]
        proposed += batch
        kept.append(x)
        total += len(x)
    points = np.concatenate(kept)[:size]
    return points, {'flags': ['tail_exponential_margins'], 'proposed': proposed, 'accepted': total}


def clayton_h_inverse(u, p, theta):
    """Solve h(v | u) = p for the Clayton copula with parameter theta > 0."""
    inner = (p * u ** (theta + 1.0)) ** (-theta / (theta + 1.0)) - u ** (-theta) + 1.0
    return np.clip(np.maximum(inner, 1.0) ** (-1.0 / theta), 0.0, 1.0)


@register_sampler("vine3_copula")
def _sample_vine3(params, dim, size, rng):
    _require_dim("vine3_copula", dim, 3)
    b, c = float(params['beta']), float(params['gamma'])
    if not (b > 0 and c > 0):
        raise SamplingError(f"beta and gamma must be positive, got {b}, {c}")
    # survival probabilities: inverted Clayton pairs are Clayton pairs here
    s1 = 1.0 - rng.random(size)
    s2 = 1.0 - rng.random(size)
    q = 1.0 - rng.random(size)
    s3_given_2 = clayton_h_inverse(s1, q, c)
    s3 = clayton_h_inverse(s2, s3_given_2, b)
    s3 = np.maximum(s3, np.finfo(float).tiny)
    return -np.log(np.column_stack([s1, s2, s3])), {}


@register_sampler("density_from_gauge")
def _sample_density_from_gauge(params, dim, size, rng):
    g = from_descriptor(params['gauge'])
    return rejection_sample(g, size, rng)


def rejection_sample(g, size, rng):
    """
    Exact draws from the density e^{-g(x)} / (d! |G|).

    Proposals are independent exponentials with rate 1/d, which dominate
    the target because g(x) >= max(x) >= sum(x)/d.

    Args:
        g: Finite, continuous gauge
        size: Number of draws
        rng: numpy Generator

    Returns:
        tuple: (points, info) with acceptance counts in info
    """
    if g.extended_valued or not g.continuous:
        raise SamplingError(f"{g.family} gauge does not define a density")
    d = g.dim
    expected = math.factorial(d) * g.volume / d ** d
    if expected < MIN_ACCEPTANCE:
        raise SamplingError(
            f"expected acceptance {expected:.2e} is below {MIN_ACCEPTANCE:g}; "
            "use a gauge with a larger limit set or a dedicated sampler"
        )
    kept, proposed, total = [], 0, 0
    while total < size:
        batch = max(int(1.2 * (size - total) / expected), REJECTION_BATCH_FLOOR)
        x = rng.exponential(scale=float(d), size=(batch, d))
        log_ratio = -(g(x) - x.sum(axis=1) / d)
        accept = np.log(rng.random(batch)) < log_ratio
        proposed += batch
        kept.append(x[accept])
        total += int(accept.sum())
    return np.concatenate(kept)[:size], {'proposed': proposed, 'accepted': total}


@register_sampler("hw_spatial_mix")
def _sample_hw_spatial_mix(params, dim, size, rng):
    inner = ModelSpec.from_descriptor(params['model'])
    gamma = float(params['gamma'])
    if not 0.0 < gamma < 1.0:
        raise SamplingError(f"gamma must lie in (0, 1), got {gamma}")
    if inner.dim != dim:
        raise SamplingError(f"mixture dimension {dim} does not match the V model ({inner.dim})")
    v, info = MODEL_FAMILIES[inner.family](inner.params, inner.dim, size, rng)
    s = rng.exponential(size=size)
    return gamma * s[:, None] + v, info


def model_gauge(model):
    """
    Limit-set gauge of a model in exponential margins.

    Args:
        model: ModelSpec or model descriptor

    Returns:
        Gauge
    """
    model = _as_model(model)
    p = model.params
    if model.family == 'meta_gaussian':
        sigma = _sigma(p, model.dim)
        return GaussianGauge(sigma, experimental=bool((sigma < 0).any()))
    if model.family == 'logistic_gp_copula':
        return LogisticGPGauge(p['theta'])
    if model.family == 'inverted_logistic_copula':
        return InvertedLogisticGauge(p['theta'], dim=model.dim)
    if model.family == 'inverted_husler_reiss_copula':
        return InvertedHuslerReissGauge(p['lam'])
    if model.family == 'husler_reiss_gp_copula':
        return HuslerReissGPGauge(2)
    if model.family == 'vine3_copula':
        return Vine3Gauge(p['beta'], p['gamma'])
    if model.family == 'density_from_gauge':
        return from_descriptor(p['gauge'])
    if model.family == 'hw_spatial_mix':
        return HWMixGauge(model_gauge(p['model']), p['gamma'])
    raise SamplingError(f"no gauge known for {model.family}")


def marginal_cdf(model, x):
    """
    Exact CDF shared by the margins of a model, in the cloud's scale.

    Args:
        model: ModelSpec or model descriptor
        x: Values

    Returns:
        np.ndarray: CDF values
    """
    model = _as_model(model)
    x = np.asarray(x, dtype=float)
    if model.margins == 'pareto':
        x = np.log(np.maximum(x, 1.0))
    if model.family == 'husler_reiss_gp_copula':
        raise SamplingError("the positivity-conditioned model has tail-exponential margins only")
    if model.family == 'density_from_gauge':
        g = from_descriptor(model.params['gauge'])
        if not isinstance(g, IndependenceGauge):
            raise SamplingError("margins of a gauge-defined density have no closed form")
    if model.family == 'hw_spatial_mix':
        gamma = float(model.params['gamma'])
        x = np.maximum(x, 0.0)
        return 1.0 - (np.exp(-x) - gamma * np.exp(-x / gamma)) / (1.0 - gamma)
    return -np.expm1(-np.maximum(x, 0.0))


def _run_chunks(model, n, seed, workers):
    sizes = [CHUNK_SIZE] * (n // CHUNK_SIZE)
    if n % CHUNK_SIZE:
        sizes.append(n % CHUNK_SIZE)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    sampler = MODEL_FAMILIES[model.family]

    def run(task):
        size, child = task
        return sampler(model.params, model.dim, size, np.random.default_rng(child))

    tasks = list(zip(sizes, children))
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, tasks))
    return [run(task) for task in tasks]


def sample(model, n, seed=0, workers=1):
    """
    Draw an i.i.d. sample cloud.

    Args:
        model: ModelSpec or model descriptor
        n: Number of points (>= 1)
        seed: Integer seed; identical seeds give bit-identical clouds
        workers: Chunks generated concurrently

    Returns:
        SampleCloud
    """
    model = _as_model(model)
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise SamplingError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    results = _run_chunks(model, n, seed, workers)
    points = np.concatenate([points for points, _ in results])
    flags = sorted({flag for _, info in results for flag in info.get('flags', [])})
    proposed = sum(info.get('proposed', 0) for _, info in results)
    accepted = sum(info.get('accepted', 0) for _, info in results)
    acceptance = accepted / proposed if proposed else None
    if acceptance is not None:
        logger.info("%s: acceptance rate %.4f over %d proposals", model.family, acceptance, proposed)
    if model.margins == 'pareto':
        points = np.exp(points)
    return SampleCloud(points, model, seed, model.margins, flags, acceptance)


def density_from_gauge_sampler(g, n, seed=0, workers=1):
    """
    Sample from the density e^{-g}/(d!|G|) defined by a gauge.

    Args:
        g: Finite, continuous gauge with a JSON descriptor
        n: Number of points
        seed: Integer seed
        workers: Chunks generated concurrently

    Returns:
        SampleCloud
    """
    if g.extended_valued or not g.continuous:
        raise SamplingError(f"{g.family} gauge does not define a density")
    model = ModelSpec('density_from_gauge', g.dim, {'gauge': g.to_descriptor()})
    return sample(model, n, seed=seed, workers=workers)


def scale_cloud(cloud):
    """
    Scale a cloud by r_n = log n, taking logs first for Pareto margins.

    Args:
        cloud: SampleCloud with n >= 2

    Returns:
        ScaledCloud
    """
    if cloud.n < 2:
        raise SamplingError("undefined scaling: log n = 0 for n = 1")
    points = cloud.points
    flags = []
    if cloud.margins == 'pareto':
        points = np.log(points)
        flags.append('log_transformed')
    r_n = math.log(cloud.n)
    return ScaledCloud(points / r_n, r_n, tuple(flags))
