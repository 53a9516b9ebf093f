"""Tests for study configuration, cell judging and the study runners."""

import math

import pytest

from conftest import STUDIES_DIR
from utils.data_pipeline import (
    StudyConfig,
    aggregate,
    eta_hw_sweep,
    hausdorff_trend,
    run_study,
    trend_verdict,
    truth_value,
    z_score,
)
from utils.gauge import GaussianGauge, InvertedLogisticGauge
from utils.loaders import load_json

INDEPENDENT = {'family': 'meta_gaussian', 'dim': 2, 'params': {'rho': 0.0}}


def small_coherence(**overrides):
    data = {
        'name': 'small', 'kind': 'coherence', 'model': INDEPENDENT,
        'quantities': [
            {'quantity': 'eta', 'C': [0, 1], 'tolerance': 0.1},
            {'quantity': 'tau', 'C': [0], 'delta': 0.0},
        ],
        'n': 20_000, 'seeds': [0, 1], 'estimator': {'bootstrap': 10},
    }
    data.update(overrides)
    return StudyConfig.from_dict(data)


class TestStudyConfig:

    @pytest.mark.parametrize('path', sorted(STUDIES_DIR.glob('*.json')), ids=lambda p: p.stem)
    def test_shipped_studies_load(self, path):
        data = load_json(path)
        for entry in data if isinstance(data, list) else [data]:
            study = StudyConfig.from_dict(entry)
            assert study.seeds and study.n

    def test_scalar_n(self):
        assert small_coherence().n == (20_000,)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown study kind"):
            StudyConfig(name='x', kind='nope', model=INDEPENDENT)

    def test_model_required(self):
        with pytest.raises(ValueError, match="needs a model"):
            StudyConfig(name='x', kind='coherence')


class TestJudging:

    def test_truth_values(self):
        g = GaussianGauge.from_rho(0.5)
        assert truth_value(g, {'quantity': 'eta', 'C': [0, 1]}) == pytest.approx(0.75)
        assert truth_value(g, {'quantity': 'tau', 'C': [0], 'delta': 0.5}) == pytest.approx(1.0)
        assert truth_value(g, {'quantity': 'lambda', 'omega': [0.5, 0.5]}) == pytest.approx(2 / 3)
        with pytest.raises(ValueError):
            truth_value(g, {'quantity': 'chi'})

    def test_z_score(self):
        assert z_score(0.8, 0.75, 0.025) == pytest.approx(2.0)
        assert math.isnan(z_score(0.8, 0.75, 0.0))
        assert math.isnan(z_score(0.8, 0.75, math.nan))

    def test_aggregate(self):
        cells = [{'quantity': 'eta', 'index': {'C': [0, 1]}, 'n': 100, 'within': w}
                 for w in [True] * 9 + [False]]
        cells.append({'quantity': 'tau', 'index': {'C': [0]}, 'n': 100, 'error': 'boom'})
        groups = {g['quantity']: g for g in aggregate(cells, 0.9)}
        assert groups['eta']['pass'] and groups['eta']['passed'] == 9
        assert not groups['tau']['pass'] and groups['tau']['total'] == 1

    def test_trend_verdict(self):
        cells = [{'n': n, 'estimate': e} for n, e in [(10, 0.5), (10, 0.7), (100, 0.3), (100, 0.2)]]
        verdict = trend_verdict(cells)
        assert verdict['n'] == [10, 100]
        assert verdict['median'] == pytest.approx([0.6, 0.25])
        assert verdict['decreasing']


class TestRunners:

    def test_coherence_records_failed_cells(self):
        report = run_study(small_coherence())
        assert len(report['cells']) == 4
        assert report['errors'] == 2
        eta_cells = [c for c in report['cells'] if c['quantity'] == 'eta']
        assert all(c['truth'] == pytest.approx(0.5) and 'z' in c for c in eta_cells)
        assert not report['passed']

    def test_workers_do_not_change_cells(self):
        study = small_coherence(quantities=[{'quantity': 'eta', 'C': [0, 1], 'tolerance': 0.1}])
        assert run_study(study, workers=1)['cells'] == run_study(study, workers=2)['cells']

    def test_tau_agreement(self):
        study = StudyConfig.from_dict({
            'name': 'agree', 'kind': 'tau_agreement', 'model': INDEPENDENT,
            'quantities': [{'C': [0], 'delta': 1.0}], 'n': 50_000, 'seeds': [0],
            'estimator': {'bootstrap': 10},
        })
        cell = run_study(study)['cells'][0]
        assert cell['estimate'] == pytest.approx(1.0, abs=0.15)
        assert cell['fixed_threshold'] == pytest.approx(1.0, abs=0.15)

    def test_hw_eta_sweep(self):
        cells = eta_hw_sweep(InvertedLogisticGauge(0.5), [0.3, 0.9])
        assert [c['truth'] for c in cells] == pytest.approx([2 ** -0.5, 0.9])
        assert all(c['within'] for c in cells)

    def test_hw_eta_sweep_study(self):
        study = StudyConfig.from_dict({
            'name': 'hw', 'kind': 'hw_eta_sweep', 'gamma_grid': [0.5],
            'gauges_v': [{'family': 'gaussian', 'params': {'rho': 0.5}}],
        })
        report = run_study(study)
        assert report['passed'] and report['errors'] == 0

    def test_hausdorff_trend(self):
        cells = hausdorff_trend(INDEPENDENT, [200, 20_000], [0, 1, 2])
        assert len(cells) == 6
        assert trend_verdict(cells)['decreasing']
