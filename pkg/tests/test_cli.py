"""End-to-end tests of the command line through app.main."""

import json

import numpy as np
import pandas as pd
import pytest

from app import EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, main, parse_omega_grid
from utils.loaders import load_cloud
from utils.sampling import sample

SMALL_GRIDS = ['--delta-grid', '0,0.5,1', '--omega-grid', '0.5,0.5;0.2,0.8']


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


class TestSummarize:

    def test_gaussian(self, tmp_path):
        code = main(['summarize', '--family', 'gaussian', '--rho', '0.5', *SMALL_GRIDS, '--out', str(tmp_path)])
        assert code == EXIT_OK
        summary = json.loads((tmp_path / 'summary.json').read_text())
        assert summary['eta'][0]['value'] == pytest.approx(0.75)
        assert summary['errors'] == []
        frame = pd.read_csv(tmp_path / 'summary.csv')
        assert list(frame.columns) == ['quantity', 'index_json', 'value']
        assert set(frame['quantity']) >= {'lambda', 'eta', 'tau', 'alpha', 'beta'}

    def test_json_only(self, tmp_path):
        code = main(['summarize', '--family', 'independence', '--format', 'json', *SMALL_GRIDS,
                     '--out', str(tmp_path)])
        assert code == EXIT_OK
        assert (tmp_path / 'summary.json').exists()
        assert not (tmp_path / 'summary.csv').exists()

    def test_gauge_file(self, tmp_path, gauge_descriptors):
        path = write_json(tmp_path / 'g.json', gauge_descriptors['gaussian3'])
        code = main(['summarize', '--gauge-json', path, '--delta-grid', '0,1', '--omega-grid',
                     '0.2,0.3,0.5', '--out', str(tmp_path / 'out')])
        assert code == EXIT_OK

    def test_model_family_uses_model_gauge(self, tmp_path):
        code = main(['summarize', '--family', 'logistic_gp_copula', '--theta', '0.5', *SMALL_GRIDS,
                     '--out', str(tmp_path)])
        assert code == EXIT_OK
        summary = json.loads((tmp_path / 'summary.json').read_text())
        assert summary['model']['family'] == 'logistic_gp'

    def test_partial_failure(self, tmp_path):
        path = write_json(tmp_path / 'g.json', {'family': 'custom', 'dim': 2,
                                                'params': {'expression': '2 * (x0 + x1)'}})
        code = main(['summarize', '--gauge-json', path, *SMALL_GRIDS, '--out', str(tmp_path / 'out')])
        assert code == EXIT_PARTIAL
        assert json.loads((tmp_path / 'out' / 'summary.json').read_text())['errors']

    @pytest.mark.parametrize('argv', [
        ['summarize'],
        ['summarize', '--family', 'nope'],
        ['summarize', '--family', 'logistic_gp', '--theta', '1.5'],
        ['summarize', '--family', 'gaussian', '--rho', '0.5', '--omega-grid', '0.5,0.6'],
        ['summarize', '--gauge-json', 'missing.json'],
        ['frobnicate'],
    ])
    def test_usage_errors(self, argv, tmp_path):
        assert main([*argv, '--out', str(tmp_path)] if argv[0] == 'summarize' else argv) == EXIT_USAGE

    def test_help(self):
        assert main(['--help']) == EXIT_OK

    def test_omega_grid_parser(self):
        assert parse_omega_grid('0.5,0.5;0.2,0.8') == ((0.5, 0.5), (0.2, 0.8))
        with pytest.raises(ValueError):
            parse_omega_grid('0.7,0.7')


class TestLevelset:

    def test_bivariate(self, tmp_path):
        code = main(['levelset', '--family', 'triangle', '--theta', '0.5', '--out', str(tmp_path), '--html'])
        assert code == EXIT_OK
        frame = pd.read_csv(tmp_path / 'levelset.csv')
        assert set(frame['kind']) == {'level_set', 'lambda_overlay', 'eta_point'}
        assert (frame['kind'] == 'level_set').sum() == 400
        assert (tmp_path / 'levelset.html').exists()
        assert not (tmp_path / 'levelset_triangles.csv').exists()

    def test_trivariate(self, tmp_path):
        code = main(['levelset', '--family', 'vine3', '--beta', '1', '--gamma', '1', '--resolution', '6',
                     '--out', str(tmp_path)])
        assert code == EXIT_OK
        triangles = pd.read_csv(tmp_path / 'levelset_triangles.csv')
        assert list(triangles.columns) == ['a', 'b', 'c']
        assert len(triangles) == 36

    def test_four_dimensions_rejected(self, tmp_path):
        assert main(['levelset', '--family', 'independence', '--dim', '4', '--out', str(tmp_path)]) == EXIT_USAGE


class TestSample:

    def test_clouds_per_seed(self, tmp_path):
        code = main(['sample', '--family', 'meta_gaussian', '--rho', '0.5', '--n', '500', '--seeds', '1', '2',
                     '--out', str(tmp_path)])
        assert code == EXIT_OK
        cloud = load_cloud(tmp_path / 'cloud_seed1.csv')
        assert cloud.seed == 1 and cloud.n == 500
        expected = sample({'family': 'meta_gaussian', 'params': {'rho': 0.5}}, 500, seed=1).points
        np.testing.assert_allclose(cloud.points, expected, rtol=1e-15)
        assert (tmp_path / 'cloud_seed2.json').exists()

    def test_rerun_is_byte_identical(self, tmp_path):
        argv = ['sample', '--family', 'inverted_logistic_copula', '--theta', '0.5', '--n', '300', '--seed', '9']
        main([*argv, '--out', str(tmp_path / 'a')])
        main([*argv, '--out', str(tmp_path / 'b')])
        for name in ('cloud_seed9.csv', 'cloud_seed9.json'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_bare_gauge_samples_its_density(self, tmp_path):
        code = main(['sample', '--family', 'independence', '--n', '200', '--out', str(tmp_path)])
        assert code == EXIT_OK
        sidecar = json.loads((tmp_path / 'cloud_seed0.json').read_text())
        assert sidecar['model']['family'] == 'density_from_gauge'
        assert sidecar['acceptance_rate'] is not None

    def test_html(self, tmp_path):
        code = main(['sample', '--family', 'meta_gaussian', '--rho', '0.5', '--n', '200', '--out', str(tmp_path),
                     '--html'])
        assert code == EXIT_OK
        assert (tmp_path / 'cloud_seed0.html').exists()

    def test_invalid_n(self, tmp_path):
        assert main(['sample', '--family', 'meta_gaussian', '--rho', '0.5', '--n', '0',
                     '--out', str(tmp_path)]) == EXIT_USAGE


class TestStudy:

    def test_study_with_overrides(self, tmp_path):
        path = write_json(tmp_path / 'study.json', [{
            'name': 'tiny', 'kind': 'coherence',
            'model': {'family': 'meta_gaussian', 'params': {'rho': 0.0}},
            'quantities': [{'quantity': 'eta', 'C': [0, 1], 'tolerance': 0.1}],
            'n': [10_000_000], 'seeds': [0, 1, 2, 3], 'estimator': {'bootstrap': 5},
        }])
        code = main(['study', '--study-json', path, '--n', '5000', '--seeds', '7', '--k', '100',
                     '--out', str(tmp_path / 'out')])
        assert code == EXIT_OK
        report = json.loads((tmp_path / 'out' / 'tiny' / 'study.json').read_text())
        cell = report['cells'][0]
        assert (cell['n'], cell['seed'], cell['k']) == (5000, 7, 100)
        assert len(report['cells']) == 1
        assert (tmp_path / 'out' / 'tiny' / 'study.csv').exists()

    def test_failed_cells_give_partial_exit(self, tmp_path):
        path = write_json(tmp_path / 'study.json', {
            'name': 'broken', 'kind': 'coherence',
            'model': {'family': 'meta_gaussian', 'params': {'rho': 0.0}},
            'quantities': [{'quantity': 'tau', 'C': [0], 'delta': 0.0}],
            'n': 2000, 'seeds': [0], 'estimator': {'bootstrap': 5},
        })
        assert main(['study', '--study-json', path, '--out', str(tmp_path / 'out')]) == EXIT_PARTIAL

    def test_invalid_study(self, tmp_path):
        path = write_json(tmp_path / 'study.json', {'name': 'bad', 'kind': 'nope'})
        assert main(['study', '--study-json', path, '--out', str(tmp_path)]) == EXIT_USAGE
