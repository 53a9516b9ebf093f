"""
Chart Utilities

Plotly figures of level sets and scaled sample clouds, written as
standalone HTML files next to the CSV/JSON outputs.
"""

import logging
from pathlib import Path

import plotly.graph_objects as go


logger = logging.getLogger(__name__)


def level_set_figure(frame, triangles=None, title='Unit level set'):
    """
    Create a figure of {g = 1} with the lambda overlay and the eta point.

    Args:
        frame: DataFrame from generators.levelset_frame
        triangles: (m, 3) vertex indices for d = 3, None for d = 2
        title: Figure title

    Returns:
        plotly.graph_objects.Figure
    """
    level = frame[frame['kind'] == 'level_set']
    overlay = frame[frame['kind'] == 'lambda_overlay']
    point = frame[frame['kind'] == 'eta_point']
    fig = go.Figure()

    if 'x2' not in frame.columns:
        fig.add_trace(go.Scatter(x=level['x0'], y=level['x1'], mode='lines', name='g = 1',
                                 line=dict(color='#e74c3c', width=2)))
        if len(overlay):
            fig.add_trace(go.Scatter(x=overlay['x0'], y=overlay['x1'], mode='lines',
                                     name='lambda(w)/max(w) = 1', line=dict(color='#3498db', width=2)))
        if len(point):
            fig.add_trace(go.Scatter(x=point['x0'], y=point['x1'], mode='markers', name='eta',
                                     marker=dict(color='#3498db', size=10)))
        fig.add_trace(go.Scatter(x=[1, 1, 0], y=[0, 1, 1], mode='lines', name='max = 1',
                                 line=dict(color='rgba(0,0,0,0.4)', dash='dash')))
        fig.update_layout(xaxis=dict(range=[0, 1.05], scaleanchor='y'), yaxis=dict(range=[0, 1.05]))
    else:
        mesh = dict(x=level['x0'], y=level['x1'], z=level['x2'], opacity=0.6, color='#e74c3c', name='g = 1')
        if triangles is not None and len(triangles):
            mesh.update(i=triangles[:, 0], j=triangles[:, 1], k=triangles[:, 2])
        fig.add_trace(go.Mesh3d(**mesh))
        if len(overlay):
            fig.add_trace(go.Scatter3d(x=overlay['x0'], y=overlay['x1'], z=overlay['x2'], mode='markers',
                                       name='lambda(w)/max(w) = 1', marker=dict(color='#3498db', size=2)))
        if len(point):
            fig.add_trace(go.Scatter3d(x=point['x0'], y=point['x1'], z=point['x2'], mode='markers',
                                       name='eta', marker=dict(color='#3498db', size=5)))

    fig.update_layout(title=title, template='plotly_white', height=600)
    return fig


def sample_cloud_figure(points, frame=None, title='Scaled sample cloud'):
    """
    Create a scatter of a scaled cloud, optionally over the level set.

    Args:
        points: (n, 2) or (n, 3) scaled cloud
        frame: Optional DataFrame from generators.levelset_frame
        title: Figure title

    Returns:
        plotly.graph_objects.Figure
    """
    fig = go.Figure()
    if points.shape[1] == 2:
        fig.add_trace(go.Scattergl(x=points[:, 0], y=points[:, 1], mode='markers', name='cloud',
                                   marker=dict(color='rgba(44,62,80,0.4)', size=3)))
        if frame is not None:
            level = frame[frame['kind'] == 'level_set']
            fig.add_trace(go.Scatter(x=level['x0'], y=level['x1'], mode='lines', name='g = 1',
                                     line=dict(color='#e74c3c', width=2)))
    else:
        fig.add_trace(go.Scatter3d(x=points[:, 0], y=points[:, 1], z=points[:, 2], mode='markers',
                                   name='cloud', marker=dict(color='rgba(44,62,80,0.4)', size=2)))
    fig.update_layout(title=title, template='plotly_white', height=600)
    return fig


def save_figure(fig, filepath):
    """Write a figure as a standalone HTML file."""
    Path(filepath).parent.mkdir(parents=True, exist_ok=True)
    fig.write_html(str(filepath), include_plotlyjs='cdn')
    logger.info("Saved: %s", filepath)
