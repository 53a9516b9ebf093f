"""
Data Loaders

Utility functions for loading JSON and CSV files and turning descriptors
into gauges, models and sample clouds.
"""

import json
from pathlib import Path

import pandas as pd

from utils.gauge import from_descriptor
from utils.sampling import ModelSpec, SampleCloud


def load_json(path):
    """
    Load a JSON descriptor, study or sidecar file.

    Raises:
        ValueError: The file is not valid JSON (the message names the file)
    """
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def load_csv(path, columns=None):
    """
    Load a CSV table, checking that the given columns are present.

    Args:
        path: Path to CSV file
        columns: Column names the table must contain

    Returns:
        pd.DataFrame: Loaded data
    """
    frame = pd.read_csv(path)
    missing = [c for c in columns or () if c not in frame.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    return frame


def _descriptor(source):
    if isinstance(source, dict):
        return source
    return load_json(source)


def load_gauge(source):
    """
    Build a gauge from a descriptor dict or a JSON file holding one.

    Args:
        source: dict or path

    Returns:
        Gauge
    """
    return from_descriptor(_descriptor(source))


def load_model(source):
    """
    Build a simulation model from a descriptor dict or JSON file.

    Args:
        source: dict or path

    Returns:
        ModelSpec
    """
    return ModelSpec.from_descriptor(_descriptor(source))


def load_cloud(csv_path, sidecar_path=None):
    """
    Load a sample cloud written by generators.generate_cloud_files.

    Args:
        csv_path: Columnar CSV with columns x0..x{d-1}
        sidecar_path: JSON metadata (default: same name with .json)

    Returns:
        SampleCloud
    """
    csv_path = Path(csv_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix('.json')
    meta = load_json(sidecar_path)
    columns = [f"x{i}" for i in range(meta['model']['dim'])]
    points = load_csv(csv_path, columns)[columns].to_numpy(dtype=float)
    if len(points) != meta['n']:
        raise ValueError(f"{csv_path} holds {len(points)} rows but the sidecar says n={meta['n']}")
    return SampleCloud(points, load_model(meta['model']), meta['seed'], meta['margins'],
                       list(meta.get('flags', [])), meta.get('acceptance_rate'))
