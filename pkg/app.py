"""
Limit-Set Dependence Toolkit - Main Entry Point

Command-line front end: dependence summaries of gauge functions, level-set
meshes, sample clouds and simulation studies, all written as CSV/JSON.

Usage examples:
  python app.py summarize --family gaussian --rho 0.5 --out out/gaussian
  python app.py levelset --family triangle --theta 0.5 --out out/triangle --html
  python app.py sample --family meta_gaussian --rho 0.5 --n 100000 --seed 3 --out out/clouds
  python app.py study --study-json data/studies/hw_eta_sweep.json --out out/studies
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from utils.charts import level_set_figure, sample_cloud_figure, save_figure
from utils.data_pipeline import StudyConfig, run_study
from utils.gauge import FAMILIES, from_descriptor
from utils.generators import (
    generate_cloud_files,
    generate_levelset_files,
    generate_study_files,
    generate_summary_files,
    levelset_frame,
)
from utils.loaders import load_json
from utils.measures import summarize
from utils.sampling import MODEL_FAMILIES, ModelSpec, model_gauge, sample, scale_cloud


logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

# flag name -> descriptor parameter name
PARAM_FLAGS = {
    'rho': 'rho',
    'theta': 'theta',
    'theta1': 'theta1',
    'theta2': 'theta2',
    'mu': 'mu',
    'beta': 'beta',
    'gamma': 'gamma',
    'lambda_hr': 'lam',
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed command line for one invocation."""

    command: str
    descriptor: dict = None
    out: Path = Path('out')
    formats: tuple = ('csv', 'json')
    n: int = 10_000
    seeds: tuple = (0,)
    k: int = None
    delta_grid: tuple = None
    omega_grid: tuple = None
    resolution: int = None
    html: bool = False
    workers: int = 1
    studies: tuple = field(default_factory=tuple)


def parse_grid(text):
    """'0,0.5,1' -> (0.0, 0.5, 1.0)."""
    return tuple(float(v) for v in text.split(',') if v.strip())


def parse_omega_grid(text):
    """'0.5,0.5;0.2,0.8' -> ((0.5, 0.5), (0.2, 0.8))."""
    grid = tuple(parse_grid(part) for part in text.split(';') if part.strip())
    for omega in grid:
        if any(w < 0 for w in omega) or abs(sum(omega) - 1.0) > 1e-9:
            raise ValueError(f"omega {omega} is not on the unit simplex")
    return grid


def descriptor_from_args(args):
    """Build a gauge or model descriptor from --gauge-json/--model-json or --family flags."""
    path = args.gauge_json or args.model_json
    if path:
        return load_json(path)
    if args.family is None:
        raise ValueError("give --family, --gauge-json or --model-json")
    params = {name: getattr(args, flag) for flag, name in PARAM_FLAGS.items() if getattr(args, flag) is not None}
    descriptor = {'family': args.family, 'params': params}
    if args.dim is not None:
        descriptor['dim'] = args.dim
    return descriptor


def build_parser():
    parser = argparse.ArgumentParser(description="Limit sets, gauge functions and extremal dependence measures.")
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True)

    def model_flags(p):
        p.add_argument('--family', help="Gauge or model family name")
        p.add_argument('--gauge-json', help="Gauge descriptor JSON file")
        p.add_argument('--model-json', help="Model descriptor JSON file")
        p.add_argument('--dim', type=int)
        for flag in PARAM_FLAGS:
            p.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=float)

    def common_flags(p):
        p.add_argument('--out', default='out', help="Output directory")
        p.add_argument('--workers', type=int, default=1)
        p.add_argument('--html', action='store_true', help="Also write plotly HTML figures")

    p = sub.add_parser('summarize', help="Dependence measures of a gauge")
    model_flags(p)
    common_flags(p)
    p.add_argument('--delta-grid', type=parse_grid)
    p.add_argument('--omega-grid', type=parse_omega_grid)
    p.add_argument('--format', choices=['csv', 'json', 'both'], default='both')

    p = sub.add_parser('levelset', help="Boundary mesh of the unit level set (d = 2, 3)")
    model_flags(p)
    common_flags(p)
    p.add_argument('--resolution', type=int)

    p = sub.add_parser('sample', help="Sample cloud from a model")
    model_flags(p)
    common_flags(p)
    p.add_argument('--n', type=int, default=10_000)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--seeds', type=int, nargs='+', default=None)

    p = sub.add_parser('study', help="Run simulation studies")
    common_flags(p)
    p.add_argument('--study-json', nargs='+', required=True)
    p.add_argument('--n', type=int, nargs='+', default=None, help="Override the sample sizes")
    p.add_argument('--seeds', type=int, nargs='+', default=None, help="Override the seed list")
    p.add_argument('--k', type=int, default=None, help="Override the number of order statistics")
    return parser


def config_from_args(args):
    """
    Turn parsed arguments into a RunConfig.

    Raises:
        ValueError: Missing or inconsistent arguments
    """
    out = Path(args.out)
    if args.command == 'study':
        studies = []
        for path in args.study_json:
            data = load_json(path)
            for entry in data if isinstance(data, list) else [data]:
                entry = dict(entry)
                if args.n:
                    entry['n'] = list(args.n)
                if args.seeds:
                    entry['seeds'] = list(args.seeds)
                if args.k is not None:
                    entry['estimator'] = {**entry.get('estimator', {}), 'k': args.k}
                studies.append(StudyConfig.from_dict(entry))
        return RunConfig('study', out=out, html=args.html, workers=args.workers, studies=tuple(studies))

    descriptor = descriptor_from_args(args)
    if args.command == 'summarize':
        formats = ('csv', 'json') if args.format == 'both' else (args.format,)
        return RunConfig('summarize', descriptor, out, formats, delta_grid=args.delta_grid,
                         omega_grid=args.omega_grid, html=args.html, workers=args.workers)
    if args.command == 'levelset':
        return RunConfig('levelset', descriptor, out, resolution=args.resolution, html=args.html,
                         workers=args.workers)
    if args.n < 1:
        raise ValueError(f"--n must be positive, got {args.n}")
    seeds = tuple(args.seeds) if args.seeds else (args.seed if args.seed is not None else 0,)
    return RunConfig('sample', descriptor, out, n=args.n, seeds=seeds, html=args.html, workers=args.workers)


def _gauge(descriptor):
    if descriptor['family'] in MODEL_FAMILIES and descriptor['family'] not in FAMILIES:
        return model_gauge(ModelSpec.from_descriptor(descriptor))
    return from_descriptor(descriptor)


def _model(descriptor):
    if descriptor['family'] in MODEL_FAMILIES:
        return ModelSpec.from_descriptor(descriptor)
    # a bare gauge is sampled from the density proportional to exp(-g)
    g = from_descriptor(descriptor)
    return ModelSpec('density_from_gauge', g.dim, {'gauge': g.to_descriptor()})


def cmd_summarize(config):
    """Write summary.json/summary.csv; exit 2 when some entries failed."""
    g = _gauge(config.descriptor)
    summary = summarize(g, omega_grid=config.omega_grid, delta_grid=config.delta_grid, workers=config.workers)
    generate_summary_files(summary, config.out, config.formats)
    if config.html and g.dim in (2, 3):
        frame, triangles = levelset_frame(g)
        save_figure(level_set_figure(frame, triangles, title=f"{g.family} level set"), config.out / 'levelset.html')
    for problem in summary.check_invariants():
        logger.warning("invariant check: %s", problem)
    if summary.errors:
        logger.warning("%d entries failed; see summary.json", len(summary.errors))
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_levelset(config):
    """Write levelset.csv (plus triangles for d = 3)."""
    g = _gauge(config.descriptor)
    generate_levelset_files(g, config.out, config.resolution, workers=config.workers)
    if config.html:
        frame, triangles = levelset_frame(g, config.resolution)
        save_figure(level_set_figure(frame, triangles, title=f"{g.family} level set"), config.out / 'levelset.html')
    return EXIT_OK


def cmd_sample(config):
    """Write one cloud per seed with its JSON sidecar."""
    model = _model(config.descriptor)
    for seed in config.seeds:
        cloud = sample(model, config.n, seed=seed, workers=config.workers)
        generate_cloud_files(cloud, config.out)
        if config.html and model.dim in (2, 3):
            frame = levelset_frame(model_gauge(model))[0] if model.dim == 2 else None
            fig = sample_cloud_figure(scale_cloud(cloud).points, frame, title=f"{model.family} seed {seed}")
            save_figure(fig, config.out / f"cloud_seed{seed}.html")
    return EXIT_OK


def cmd_study(config):
    """Run each study into its own directory; exit 2 when cells failed."""
    status = EXIT_OK
    for study in config.studies:
        report = run_study(study, workers=config.workers)
        generate_study_files(report, config.out / study.name)
        verdict = 'passed' if report['passed'] else 'FAILED'
        logger.info("study %s %s (%d cells, %d errors)", study.name, verdict, len(report['cells']), report['errors'])
        if report['errors']:
            status = EXIT_PARTIAL
    return status


COMMANDS = {
    'summarize': cmd_summarize,
    'levelset': cmd_levelset,
    'sample': cmd_sample,
    'study': cmd_study,
}


def main(argv=None):
    """Parse arguments, run the command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        config = config_from_args(args)
        return COMMANDS[config.command](config)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
