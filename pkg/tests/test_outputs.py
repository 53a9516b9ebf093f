"""Tests for the file writers, loaders and plotly figures."""

import json

import numpy as np
import pandas as pd
import plotly.graph_objects as go
import pytest

from utils.charts import level_set_figure, sample_cloud_figure, save_figure
from utils.gauge import IndependenceGauge
from utils.generators import (
    generate_cloud_files,
    generate_study_files,
    generate_summary_files,
    lambda_overlay,
    levelset_frame,
    save_json,
)
from utils.loaders import load_cloud, load_csv, load_gauge, load_json, load_model
from utils.measures import default_omega_grid, summarize
from utils.sampling import sample


class TestWriters:

    def test_non_finite_values_in_json(self, tmp_path):
        save_json({'b': np.float64(np.inf), 'a': [np.int64(3), np.nan], 'c': np.bool_(True)}, tmp_path / 'x.json')
        text = (tmp_path / 'x.json').read_text()
        assert json.loads(text) == {'a': [3, 'nan'], 'b': 'inf', 'c': True}
        assert text.index('"a"') < text.index('"b"')

    def test_summary_formats(self, tmp_path, catalog):
        summary = summarize(catalog['independence'], omega_grid=[(0.5, 0.5)], delta_grid=[0.0], pairs=[(0, 1)])
        written = generate_summary_files(summary, tmp_path, formats=('csv',))
        assert written == [tmp_path / 'summary.csv']
        frame = pd.read_csv(written[0])
        eta_row = frame[frame['quantity'] == 'eta'].iloc[0]
        assert json.loads(eta_row['index_json']) == {'C': [0, 1]}
        assert eta_row['value'] == pytest.approx(0.5)

    def test_lambda_overlay_on_independence(self):
        overlay = lambda_overlay(IndependenceGauge(2), points=11)
        # lambda = 1 everywhere, so the overlay is omega * max(omega)
        w = np.linspace(0.0, 1.0, 11)
        expected = np.column_stack([w, 1.0 - w]) * np.maximum(w, 1.0 - w)[:, None]
        np.testing.assert_allclose(overlay, expected, atol=1e-9)

    def test_levelset_frame(self, catalog):
        frame, triangles = levelset_frame(catalog['gaussian_rho05'], resolution=50)
        assert triangles is None
        assert list(frame.columns) == ['kind', 'vertex', 'x0', 'x1']
        assert frame[frame['kind'] == 'eta_point'][['x0', 'x1']].to_numpy() == pytest.approx([[0.75, 0.75]])

    def test_study_files(self, tmp_path):
        report = {'name': 's', 'cells': [{'quantity': 'eta', 'index': {'C': [0, 1]}, 'estimate': 0.5}]}
        generate_study_files(report, tmp_path)
        frame = pd.read_csv(tmp_path / 'study.csv')
        assert json.loads(frame['index'][0]) == {'C': [0, 1]}
        assert json.loads((tmp_path / 'study.json').read_text())['name'] == 's'


class TestLoaders:

    def test_gauge_and_model_files(self, tmp_path, gauge_descriptors, model_descriptors):
        path = tmp_path / 'g.json'
        path.write_text(json.dumps(gauge_descriptors['triangle_v']))
        assert load_gauge(path).family == 'triangle'
        assert load_model(model_descriptors['vine3']).dim == 3

    def test_cloud_round_trip(self, tmp_path, model_descriptors):
        cloud = sample(model_descriptors['vine3'], 50, seed=2)
        csv_path, _ = generate_cloud_files(cloud, tmp_path)
        loaded = load_cloud(csv_path)
        np.testing.assert_allclose(loaded.points, cloud.points, rtol=1e-15)
        assert loaded.model == cloud.model
        assert loaded.margins == 'exponential'

    def test_invalid_json_names_the_file(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"family": ')
        with pytest.raises(ValueError, match="broken.json"):
            load_json(path)

    def test_missing_columns(self, tmp_path):
        path = tmp_path / 't.csv'
        pd.DataFrame({'x0': [1.0]}).to_csv(path, index=False)
        with pytest.raises(ValueError, match="x1"):
            load_csv(path, ['x0', 'x1'])

    def test_cloud_size_mismatch(self, tmp_path, model_descriptors):
        cloud = sample(model_descriptors['meta_gaussian'], 20, seed=0)
        csv_path, json_path = generate_cloud_files(cloud, tmp_path)
        meta = json.loads(json_path.read_text())
        meta['n'] = 21
        json_path.write_text(json.dumps(meta))
        with pytest.raises(ValueError, match="rows"):
            load_cloud(csv_path)


class TestCharts:

    def test_bivariate_level_set(self, catalog):
        frame, triangles = levelset_frame(catalog['triangle_v'], resolution=50)
        fig = level_set_figure(frame, triangles)
        assert isinstance(fig, go.Figure)
        assert [trace.name for trace in fig.data] == ['g = 1', 'lambda(w)/max(w) = 1', 'eta', 'max = 1']

    def test_trivariate_level_set(self, catalog):
        frame, triangles = levelset_frame(catalog['vine3'], resolution=4)
        fig = level_set_figure(frame, triangles)
        assert isinstance(fig.data[0], go.Mesh3d)
        assert len(fig.data[0].i) == len(triangles)
        assert [trace.name for trace in fig.data] == ['g = 1', 'lambda(w)/max(w) = 1', 'eta']
        overlay = fig.data[1]
        assert isinstance(overlay, go.Scatter3d)
        assert len(overlay.x) == len(frame[frame['kind'] == 'lambda_overlay'])

    def test_trivariate_overlay_on_independence(self):
        # lambda = 1 on the whole simplex, so the overlay is omega * max(omega)
        grid = np.asarray(default_omega_grid(3), dtype=float)
        overlay = lambda_overlay(IndependenceGauge(3))
        np.testing.assert_allclose(overlay, grid * grid.max(axis=1, keepdims=True), atol=1e-9)

    def test_cloud_figure_and_file(self, tmp_path, catalog):
        points = np.random.default_rng(0).exponential(size=(100, 2)) / np.log(100)
        frame, _ = levelset_frame(catalog['independence'], resolution=20)
        fig = sample_cloud_figure(points, frame)
        assert isinstance(fig.data[0], go.Scattergl)
        save_figure(fig, tmp_path / 'sub' / 'cloud.html')
        assert 'plotly' in (tmp_path / 'sub' / 'cloud.html').read_text()
