"""
Output Generators

Writers for the files the command line produces: dependence summaries,
level-set meshes with their lambda/eta overlays, sample clouds with JSON
sidecars, and study reports. Floats are written in shortest round-trip form
and JSON keys are sorted, so reruns with the same seed give identical files.
"""

import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from utils.geometry import level_set_boundary
from utils.measures import default_omega_grid, eta, lambda_omega


logger = logging.getLogger(__name__)


OVERLAY_POINTS_2D = 101


def _to_builtin(value):
    """Recursively convert numpy values and non-finite floats for JSON."""
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


def save_json(data, filepath):
    """
    Save data to JSON file.

    Args:
        data: Data to save (dict or list)
        filepath: Path to save file
    """
    Path(filepath).parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, 'w') as f:
        json.dump(_to_builtin(data), f, indent=2, sort_keys=True)
        f.write('\n')
    logger.info("Saved: %s", filepath)


def save_csv(frame, filepath):
    """
    Save a DataFrame to CSV without the index.

    Args:
        frame: pd.DataFrame
        filepath: Path to save file
    """
    Path(filepath).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(filepath, index=False)
    logger.info("Saved: %s", filepath)


def generate_summary_files(summary, out_dir, formats=('csv', 'json')):
    """
    Write summary.json and/or summary.csv (columns quantity, index_json, value).

    Args:
        summary: measures.DependenceSummary
        out_dir: Output directory
        formats: Any of 'csv', 'json'

    Returns:
        list: Paths written
    """
    out_dir = Path(out_dir)
    written = []
    if 'json' in formats:
        save_json(summary.to_dict(), out_dir / 'summary.json')
        written.append(out_dir / 'summary.json')
    if 'csv' in formats:
        frame = pd.DataFrame(summary.to_records(), columns=['quantity', 'index_json', 'value'])
        save_csv(frame, out_dir / 'summary.csv')
        written.append(out_dir / 'summary.csv')
    return written


def lambda_overlay(g, points=OVERLAY_POINTS_2D, **options):
    """
    Unit level set of omega -> lambda(omega)/max(omega): the point
    omega * max(omega) / lambda(omega) for each omega of a simplex grid.

    Returns:
        np.ndarray: Overlay vertices
    """
    grid = default_omega_grid(g.dim, points) if g.dim == 2 else default_omega_grid(g.dim)
    rows = []
    for omega in grid:
        omega = np.asarray(omega, dtype=float)
        rows.append(omega * omega.max() / lambda_omega(g, omega, **options))
    return np.array(rows)


def levelset_frame(g, resolution=None, **options):
    """
    Level-set vertices with overlay rows.

    Columns are ``kind`` ('level_set', 'lambda_overlay' or 'eta_point'),
    ``vertex`` and x0..x{d-1}.

    Returns:
        tuple: (frame, triangles) with triangles None for d = 2
    """
    mesh = level_set_boundary(g, resolution)
    columns = [f"x{i}" for i in range(g.dim)]
    parts = [('level_set', mesh.vertices)]
    try:
        parts.append(('lambda_overlay', lambda_overlay(g, **options)))
        parts.append(('eta_point', np.full((1, g.dim), eta(g, **options))))
    except ValueError as exc:
        logger.warning("overlay skipped for %s: %s", g.family, exc)
    frames = []
    for kind, vertices in parts:
        frame = pd.DataFrame(vertices, columns=columns)
        frame.insert(0, 'vertex', np.arange(len(vertices)))
        frame.insert(0, 'kind', kind)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True), mesh.triangles


def generate_levelset_files(g, out_dir, resolution=None, **options):
    """
    Write levelset.csv (and levelset_triangles.csv for d = 3).

    Returns:
        list: Paths written
    """
    out_dir = Path(out_dir)
    frame, triangles = levelset_frame(g, resolution, **options)
    save_csv(frame, out_dir / 'levelset.csv')
    written = [out_dir / 'levelset.csv']
    if triangles is not None:
        save_csv(pd.DataFrame(triangles, columns=['a', 'b', 'c']), out_dir / 'levelset_triangles.csv')
        written.append(out_dir / 'levelset_triangles.csv')
    return written


def generate_cloud_files(cloud, out_dir):
    """
    Write cloud_seed<seed>.csv with its JSON sidecar.

    Returns:
        list: Paths written
    """
    out_dir = Path(out_dir)
    stem = out_dir / f"cloud_seed{cloud.seed}"
    save_csv(cloud.to_frame(), stem.with_suffix('.csv'))
    save_json(cloud.sidecar(), stem.with_suffix('.json'))
    return [stem.with_suffix('.csv'), stem.with_suffix('.json')]


def generate_study_files(report, out_dir):
    """
    Write study.json and a flat study.csv of the cells.

    Returns:
        list: Paths written
    """
    out_dir = Path(out_dir)
    save_json(report, out_dir / 'study.json')
    rows = [{**cell, 'index': json.dumps(_to_builtin(cell.get('index', {})), sort_keys=True)}
            for cell in report['cells']]
    save_csv(pd.DataFrame(rows), out_dir / 'study.csv')
    return [out_dir / 'study.json', out_dir / 'study.csv']

