"""
Boundary Geometry

Boundary regions of the orthant (unions of axis-aligned faces with one pinned
coordinate) and the minimisation of a gauge over them. Gauges built from
max/min are only piecewise smooth, so each face is searched by a coarse grid
scan seeding bounded Nelder-Mead (or bounded Brent on one-dimensional faces)
followed by a golden-section pass along every coordinate.

Also holds the radial discretisation of the level set {g = 1}.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as scipy_minimize
from scipy.optimize import minimize_scalar

from utils.gauge import GaugeError


logger = logging.getLogger(__name__)


# Search configuration
GRID_RESOLUTION = 33
DEFAULT_STARTS = 8
MAX_GRID_DIM = 4            # exact grid seeding up to this dimension
RANDOM_SEEDS = 2000         # scan size beyond MAX_GRID_DIM
REL_TOL = 1e-6
WIDE_REL_TOL = 1e-4
NM_XATOL = 1e-10
NM_FATOL = 1e-13
GOLDEN_XATOL = 1e-12

# Level-set discretisation
BOUNDARY_POINTS_2D = 400
BOUNDARY_DIVISIONS_3D = 50


class RegionError(ValueError):
    """Invalid boundary-region parameters."""


class DegenerateGaugeError(GaugeError):
    """The gauge is +inf on every face of a region."""


@dataclass(frozen=True)
class Face:
    """
    Axis-aligned face: coordinate ``pinned_index`` fixed at ``pinned_value``,
    every other coordinate in its interval of ``bounds`` (in index order).
    """

    dim: int
    pinned_index: int
    pinned_value: float
    bounds: tuple

    def __post_init__(self):
        if self.pinned_value < 0:
            raise RegionError("pinned value must be nonnegative")
        if len(self.bounds) != self.dim - 1:
            raise RegionError("a face has d - 1 free coordinates")
        for lo, hi in self.bounds:
            if lo < 0 or lo > hi:
                raise RegionError(f"invalid face interval [{lo}, {hi}]")

    @property
    def free_indices(self):
        return tuple(i for i in range(self.dim) if i != self.pinned_index)

    @property
    def lower(self):
        return self.point(np.array([lo for lo, _ in self.bounds], dtype=float))

    @property
    def upper(self):
        return self.point(np.array([hi for _, hi in self.bounds], dtype=float))

    def point(self, free_values):
        """Embed free-coordinate values of shape (..., d-1) into full points."""
        free_values = np.asarray(free_values, dtype=float)
        shape = free_values.shape[:-1] + (self.dim,)
        out = np.empty(shape)
        out[..., self.pinned_index] = self.pinned_value
        out[..., list(self.free_indices)] = free_values
        return out

    def to_dict(self):
        return {
            'pinned_index': self.pinned_index,
            'pinned_value': self.pinned_value,
            'bounds': [[lo, hi if math.isfinite(hi) else None] for lo, hi in self.bounds],
        }


@dataclass(frozen=True)
class BoundaryRegion:
    """Finite union of faces over which a gauge is minimised."""

    faces: tuple
    label: str
    params: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.faces[0].dim

    def to_dict(self):
        return {'label': self.label, 'params': self.params, 'faces': [f.to_dict() for f in self.faces]}


@dataclass(frozen=True)
class MinResult:
    """Minimum of a gauge over a region."""

    value: float
    argmin: tuple
    face_index: int
    certified_tol: float
    tied: bool = False
    tied_faces: tuple = ()
    face_values: tuple = ()


def _upper_bound(upper):
    if upper is None:
        return math.inf
    upper = float(upper)
    if upper < 1:
        raise RegionError(f"truncation bound U must be >= 1, got {upper}")
    return upper


def build_B_omega(omega, upper=None):
    """
    Region B_omega: face i pins x_i = omega_i/max(omega), every other
    coordinate ranges over [omega_j/max(omega), U].

    Args:
        omega: Point of the unit simplex
        upper: Truncation bound U (None leaves faces unbounded; the
            minimiser truncates them automatically)

    Returns:
        BoundaryRegion
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1 or len(omega) < 1:
        raise RegionError("omega must be a vector")
    if (omega < 0).any() or abs(omega.sum() - 1.0) > 1e-9:
        raise RegionError(f"omega must lie on the unit simplex, got {omega.tolist()}")
    upper = _upper_bound(upper)
    scaled = omega / omega.max()
    d = len(omega)
    faces = []
    for i in range(d):
        bounds = tuple((float(scaled[j]), upper) for j in range(d) if j != i)
        faces.append(Face(d, i, float(scaled[i]), bounds))
    return BoundaryRegion(tuple(faces), 'B_omega', {'omega': omega.tolist()})


def build_B1_C_delta(subset, delta, dim, upper=None):
    """
    Region B^1_{C,delta}: for i in C, face pins x_i = 1 with C\\{i} in
    [1, U] and the coordinates outside C in [0, delta].

    Args:
        subset: Nonempty collection of 0-based coordinate indices C
        delta: Censoring exponent in [0, 1]
        dim: Dimension d
        upper: Truncation bound U

    Returns:
        BoundaryRegion
    """
    subset = sorted(set(int(i) for i in subset))
    if not subset:
        raise RegionError("C must be nonempty")
    if subset[0] < 0 or subset[-1] >= dim:
        raise RegionError(f"C={subset} is not a subset of range({dim})")
    delta = float(delta)
    if not 0.0 <= delta <= 1.0:
        raise RegionError(f"delta must lie in [0, 1], got {delta}")
    upper = _upper_bound(upper)
    faces = []
    for i in subset:
        bounds = tuple((1.0, upper) if j in subset else (0.0, delta) for j in range(dim) if j != i)
        faces.append(Face(dim, i, 1.0, bounds))
    label = 'min_face' if len(subset) == dim else 'B1_C_delta'
    return BoundaryRegion(tuple(faces), label, {'C': subset, 'delta': delta})


def build_min_face(dim, upper=None):
    """Region {min(x) = 1}."""
    return build_B1_C_delta(range(dim), 1.0, dim, upper=upper)


def _grid(lower, upper, resolution):
    axes = [np.linspace(lo, hi, resolution) if hi > lo else np.array([lo]) for lo, hi in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=1)


def _golden_pass(func, x, lower, upper, step):
    value = func(x)
    for i in range(len(x)):
        lo, hi = max(lower[i], x[i] - step[i]), min(upper[i], x[i] + step[i])
        if hi <= lo:
            continue

        def along(t, i=i):
            trial = x.copy()
            trial[i] = t
            return func(trial)

        res = minimize_scalar(along, bounds=(lo, hi), method='bounded', options={'xatol': GOLDEN_XATOL})
        if res.fun < value:
            x = x.copy()
            x[i] = res.x
            value = float(res.fun)
    return x, value


def minimize_box(func, lower, upper, resolution=GRID_RESOLUTION, n_starts=DEFAULT_STARTS,
                 candidates=(), rng=None, random_starts=0):
    """
    Minimise a function over a box.

    Args:
        func: Vectorised objective mapping an (k, m) array to k values
        lower: Lower bounds, length m
        upper: Finite upper bounds, length m
        resolution: Grid points per coordinate for the seeding scan
        n_starts: Number of best grid points refined locally
        candidates: Extra points always evaluated (kinks, vertices)
        rng: numpy Generator for random starts
        random_starts: Number of uniformly drawn extra starts

    Returns:
        tuple: (value, argmin) with argmin an array of length m
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m = len(lower)

    def scalar(x):
        return float(func(np.asarray(x, dtype=float)[None, :])[0])

    if m == 0 or np.all(upper <= lower):
        return scalar(lower), lower.copy()

    rng = rng if rng is not None else np.random.default_rng(0)
    if m <= MAX_GRID_DIM - 1 or m == 1:
        seeds = _grid(lower, upper, resolution)
    else:
        seeds = lower + rng.random((RANDOM_SEEDS, m)) * (upper - lower)
    values = np.asarray(func(seeds), dtype=float)

    best_value, best_x = math.inf, lower.copy()
    extra = np.asarray(candidates, dtype=float).reshape(-1, m) if len(candidates) else np.empty((0, m))
    if len(extra):
        extra_values = np.asarray(func(extra), dtype=float)
        k = int(np.argmin(extra_values))
        best_value, best_x = float(extra_values[k]), extra[k].copy()
    k = int(np.argmin(values))
    if values[k] < best_value:
        best_value, best_x = float(values[k]), seeds[k].copy()
    if not math.isfinite(best_value):
        return best_value, best_x

    step = (upper - lower) / max(resolution - 1, 1)
    order = [i for i in np.argsort(values, kind='stable') if np.isfinite(values[i])][:n_starts]
    starts = [seeds[i] for i in order]
    if random_starts:
        starts.extend(lower + rng.random((random_starts, m)) * (upper - lower))

    for start in starts:
        if m == 1:
            lo = max(lower[0], start[0] - step[0])
            hi = min(upper[0], start[0] + step[0])
            res = minimize_scalar(lambda t: scalar([t]), bounds=(lo, hi), method='bounded',
                                  options={'xatol': GOLDEN_XATOL})
            x, value = np.array([res.x]), float(res.fun)
        else:
            res = scipy_minimize(scalar, start, method='Nelder-Mead', bounds=list(zip(lower, upper)),
                                 options={'xatol': NM_XATOL, 'fatol': NM_FATOL, 'maxiter': 600 * m})
            x, value = _golden_pass(scalar, np.clip(res.x, lower, upper), lower, upper, step)
        if value < best_value:
            best_value, best_x = value, x
    return best_value, best_x


def _truncate(g, face, lower, upper, candidates):
    """Replace infinite face bounds by g(vertex) + 1 (g >= max bounds any minimiser)."""
    if np.all(np.isfinite(upper)):
        return upper
    reference = g(face.point(lower))
    if not math.isfinite(reference) and len(candidates):
        reference = float(np.min(g(face.point(np.asarray(candidates)))))
    if not math.isfinite(reference):
        reference = 2.0 * max(1.0, face.pinned_value, float(lower.max())) + 1.0
    bound = max(reference + 1.0, float(lower.max()))
    return np.where(np.isfinite(upper), upper, bound)


def _minimize_face(g, face, resolution, n_starts, rng):
    free = list(face.free_indices)
    lower = face.lower[free]
    upper = face.upper[free]
    candidates = [lower.copy()] + [p[free] for p in g.face_candidates(face)]
    upper = _truncate(g, face, lower, upper, candidates)

    def func(free_values):
        return g(face.point(free_values))

    starts = n_starts if n_starts is not None else (g.n_pieces or DEFAULT_STARTS)
    random_starts = 0 if (n_starts is not None or g.n_pieces) else DEFAULT_STARTS
    value, x = minimize_box(func, lower, upper, resolution=resolution, n_starts=starts,
                            candidates=candidates, rng=rng, random_starts=random_starts)
    return value, face.point(x)


def minimize(g, region, resolution=GRID_RESOLUTION, n_starts=None, seed=0, workers=1,
             allow_infinite=False):
    """
    Minimise a gauge over a boundary region.

    Args:
        g: Gauge of matching dimension
        region: BoundaryRegion
        resolution: Grid points per free coordinate in the seeding scan
        n_starts: Local refinements per face (default: one per linear piece
            of the family, else 8 best grid points plus 8 random starts)
        seed: Seed for random starts
        workers: Faces searched concurrently when > 1
        allow_infinite: Return value +inf instead of raising when the gauge
            is infinite on every face

    Returns:
        MinResult
    """
    if region.dim != g.dim:
        raise RegionError(f"region dimension {region.dim} does not match gauge dimension {g.dim}")
    children = np.random.SeedSequence(seed).spawn(len(region.faces))
    tasks = [(face, np.random.default_rng(child)) for face, child in zip(region.faces, children)]

    def run(task):
        return _minimize_face(g, task[0], resolution, n_starts, task[1])

    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(task) for task in tasks]

    certified = REL_TOL if g.dim <= MAX_GRID_DIM else WIDE_REL_TOL
    values = [float(v) for v, _ in results]
    best = min(values)
    if not math.isfinite(best):
        if allow_infinite:
            return MinResult(math.inf, None, 0, certified, face_values=tuple(values))
        raise DegenerateGaugeError(f"degenerate gauge on region {region.label}: +inf on every face")

    tol = certified * max(1.0, abs(best))
    tied_faces = tuple(i for i, v in enumerate(values) if v <= best + tol)
    index = tied_faces[0]
    value = values[index]
    argmin = tuple(float(c) for c in results[index][1])
    if len(tied_faces) > 1:
        logger.debug("faces %s tie at %.12g on %s", tied_faces, value, region.label)
    return MinResult(value, argmin, index, certified, len(tied_faces) > 1, tied_faces, tuple(values))


@dataclass(frozen=True)
class LevelSetMesh:
    """Vertices on {g = 1}; ``triangles`` index vertices for d = 3 (None for d = 2)."""

    vertices: np.ndarray
    triangles: np.ndarray = None


def simplex_grid(dim, resolution):
    """
    Points of the unit simplex on a regular lattice.

    Args:
        dim: 2 or 3
        resolution: Number of points (d=2) or subdivisions per edge (d=3)

    Returns:
        tuple: (points, triangles) with triangles None for d = 2
    """
    if dim == 2:
        w = np.linspace(0.0, 1.0, resolution)
        return np.column_stack([w, 1.0 - w]), None
    if dim != 3:
        raise RegionError(f"simplex lattice supports d in {{2, 3}}, got {dim}")
    m = resolution
    index = {}
    points = []
    for i in range(m + 1):
        for j in range(m + 1 - i):
            index[(i, j)] = len(points)
            points.append((i / m, j / m, max(0.0, 1.0 - (i + j) / m)))
    triangles = []
    for i in range(m):
        for j in range(m - i):
            triangles.append((index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]))
            if i + j < m - 1:
                triangles.append((index[(i + 1, j)], index[(i + 1, j + 1)], index[(i, j + 1)]))
    return np.array(points), np.array(triangles, dtype=int)


def level_set_boundary(g, resolution=None):
    """
    Radial discretisation of {g = 1}: each simplex direction w maps to w/g(w).

    Directions where g is infinite are dropped, together with any triangle
    that uses them.

    Args:
        g: Gauge with d in {2, 3}
        resolution: Boundary points (d=2) or edge subdivisions (d=3)

    Returns:
        LevelSetMesh
    """
    if g.dim not in (2, 3):
        raise RegionError(f"level sets can be discretised for d in {{2, 3}}, got d={g.dim}")
    if resolution is None:
        resolution = BOUNDARY_POINTS_2D if g.dim == 2 else BOUNDARY_DIVISIONS_3D
    directions, triangles = simplex_grid(g.dim, resolution)
    if g.extended_valued:
        directions = np.vstack([directions, np.full(g.dim, 1.0 / g.dim)])
    radii = g(directions)
    keep = np.isfinite(radii) & (radii > 0)
    vertices = directions[keep] / radii[keep, None]
    if triangles is not None:
        remap = -np.ones(len(directions), dtype=int)
        remap[np.flatnonzero(keep)] = np.arange(keep.sum())
        triangles = triangles[np.all(keep[triangles], axis=1)] if len(triangles) else triangles
        triangles = remap[triangles] if len(triangles) else np.empty((0, 3), dtype=int)
    return LevelSetMesh(vertices, triangles)
