"""Shared fixtures: catalog descriptors from data/models and small helpers."""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from utils.gauge import from_descriptor  # noqa: E402

MODELS_DIR = ROOT / 'data' / 'models'
STUDIES_DIR = ROOT / 'data' / 'studies'


def _load(prefix):
    out = {}
    for path in sorted(MODELS_DIR.glob(f"{prefix}_*.json")):
        out[path.stem[len(prefix) + 1:]] = json.loads(path.read_text())
    return out


GAUGE_DESCRIPTORS = _load('gauge')
MODEL_DESCRIPTORS = _load('model')

# finite, continuous members used by the invariant suites
FINITE_GAUGES = [
    'gaussian_rho05', 'gaussian3', 'logistic_gp', 'inverted_logistic', 'inverted_husler_reiss',
    'mixture_vi', 'triangle_iv', 'triangle_v', 'vine3', 'independence', 'max_only',
]


@pytest.fixture
def gauge_descriptors():
    return GAUGE_DESCRIPTORS


@pytest.fixture
def model_descriptors():
    return MODEL_DESCRIPTORS


@pytest.fixture
def catalog():
    return {name: from_descriptor(d) for name, d in GAUGE_DESCRIPTORS.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
