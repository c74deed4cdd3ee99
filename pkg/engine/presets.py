"""Loading and validation of JSON experiment configs, plus the setting builders.

Built-in figure configurations live under presets/<group>/<figure>.json and
use the same schema as hand-written configs.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

import config
from engine.bounds import CutAssignment, square_cuts, voronoi_cuts
from engine.mixture import line_spec, spec_from_dict, triangle_spec
from engine.regions import RegionError, region_from_dict
from engine.thresholds import midpoint_cut
from models import DeltaNeighborhood, GaussianKernel, SpecError

COMMANDS = ('threshold', 'bound', 'simulate', 'verify', 'reproduce')
FIGURES = ('fig2a', 'fig2b', 'fig2c', 'fig2d', 'fig4a', 'fig4b', 'fig4c', 'fig4d',
           'fig5a', 'fig5b')
THRESHOLD_KINDS = ('one_dim', 'kernel', 'kernel_width', 'voronoi', 'dimension')
LAYOUTS = ('pair', 'triangle')
CUT_TEMPLATES = ('midpoint', 'voronoi', 'square')
MODELS = ('delta', 'kernel')
TARGETS = ('event', 'incomparability')
OPTIMIZE = 'optimize'
SWEEP_AXES = ('lambda', 'n', 'r', 'alpha', 'width', 'dimension', 'condition', 'theorem')


class ConfigError(ValueError):
    """Raised when an experiment config fails validation; the message starts with the field path."""


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    figure: str = None
    threshold: str = None
    mixture: dict = field(default_factory=dict)
    graph: dict = field(default_factory=dict)
    cut: dict = field(default_factory=dict)
    target: str = 'incomparability'
    k: int = 0
    sweep: dict = field(default_factory=dict)
    trials: int = None
    seed: int = None
    verify: dict = field(default_factory=dict)
    plot: dict = field(default_factory=dict)
    digest: str = ''

    def axis(self, name, default=None):
        return self.sweep.get(name, default)


def _fail(path, message):
    raise ConfigError(f"{path}: {message}")


def _number(value, path, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    if positive and not value > 0:
        _fail(path, f"must be positive, got {value}")
    return value


def _choice(value, options, path):
    if value not in options:
        _fail(path, f"invalid value {value!r}. Must be one of {options}")
    return value


def _expand_axis(name, value):
    path = f"sweep.{name}"
    if isinstance(value, dict):
        for key in ('start', 'stop', 'num'):
            if key not in value:
                _fail(f"{path}.{key}", "missing required key")
        num = value['num']
        if not isinstance(num, int) or num < 1:
            _fail(f"{path}.num", f"must be a positive integer, got {num!r}")
        values = np.linspace(_number(value['start'], f"{path}.start"),
                             _number(value['stop'], f"{path}.stop"), num).tolist()
    elif isinstance(value, list):
        values = value
    else:
        values = [value]
    if not values:
        _fail(path, "sweep range is empty")
    if name in ('condition', 'theorem'):
        return [str(v) for v in values]
    if name in ('n', 'dimension'):
        for i, v in enumerate(values):
            if not isinstance(v, int) or v < 1:
                _fail(f"{path}[{i}]", f"must be a positive integer, got {v!r}")
        return values
    return [float(_number(v, f"{path}[{i}]")) for i, v in enumerate(values)]


def _validate_mixture(data):
    if not isinstance(data, dict):
        _fail('mixture', "expected an object")
    if 'components' in data:
        try:
            spec_from_dict(data)
        except SpecError as exc:
            _fail('mixture', str(exc))
        return
    _choice(data.get('layout'), LAYOUTS, 'mixture.layout')
    for key in ('sigma', 'alpha'):
        if key in data:
            _number(data[key], f"mixture.{key}", positive=True)
    if 'r' in data:
        r = _number(data['r'], 'mixture.r')
        if not 0 < r < 1:
            _fail('mixture.r', f"must lie in (0, 1), got {r}")


def _validate_graph(data):
    model = _choice(data.get('model'), MODELS, 'graph.model')
    if model == 'delta':
        delta = data.get('delta', OPTIMIZE)
        if delta != OPTIMIZE:
            _number(delta, 'graph.delta', positive=True)
    else:
        width = data.get('width', OPTIMIZE)
        if width != OPTIMIZE:
            _number(width, 'graph.width', positive=True)
        if 'bandwidth' in data:
            _number(data['bandwidth'], 'graph.bandwidth', positive=True)


def _validate_cut(data):
    if 'template' in data:
        template = _choice(data['template'], CUT_TEMPLATES, 'cut.template')
        if template == 'square':
            factors = data.get('factors', [data.get('factor', 0.5)])
            if not factors:
                _fail('cut.factors', "sweep range is empty")
            for i, f in enumerate(factors):
                _number(f, f"cut.factors[{i}]", positive=True)
        return
    try:
        region_from_dict(data)
    except RegionError as exc:
        _fail('cut', str(exc))


def validate(data, digest=''):
    """Validate a raw config dict and return an ExperimentConfig.

    Raises:
        ConfigError: naming the first offending field.
    """
    if not isinstance(data, dict):
        _fail('$', "expected a JSON object")
    command = _choice(data.get('command'), COMMANDS, 'command')
    figure = data.get('figure')
    if figure is not None:
        _choice(figure, FIGURES, 'figure')
    if command == 'reproduce' and figure is None:
        _fail('figure', "required for reproduce")

    sweep = {}
    raw_sweep = data.get('sweep', {})
    if not isinstance(raw_sweep, dict):
        _fail('sweep', "expected an object")
    for name, value in raw_sweep.items():
        _choice(name, SWEEP_AXES, f"sweep.{name}")
        sweep[name] = _expand_axis(name, value)

    threshold = data.get('threshold')
    if command == 'threshold':
        _choice(threshold, THRESHOLD_KINDS, 'threshold')
    if command in ('bound', 'simulate'):
        for key in ('mixture', 'graph', 'cut'):
            if key not in data:
                _fail(key, f"required for {command}")
        _validate_mixture(data['mixture'])
        _validate_graph(data['graph'])
        _validate_cut(data['cut'])
        for key in ('lambda', 'n'):
            if key not in sweep and not (key == 'lambda' and 'components' in data['mixture']):
                _fail(f"sweep.{key}", f"required for {command}")
    target = _choice(data.get('target', 'incomparability'), TARGETS, 'target')

    trials, seed = data.get('trials'), data.get('seed')
    if command == 'simulate' or (command == 'verify' and trials is not None):
        if seed is None:
            _fail('seed', f"required for {command}")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        _fail('seed', f"must be a nonnegative integer, got {seed!r}")
    if command == 'simulate':
        if not isinstance(trials, int) or trials < 1:
            _fail('trials', f"must be a positive integer, got {trials!r}")
    k = data.get('k', 0)
    if not isinstance(k, int) or k < 0:
        _fail('k', f"must be a nonnegative integer, got {k!r}")

    return ExperimentConfig(
        command=command, figure=figure, threshold=threshold,
        mixture=data.get('mixture', {}), graph=data.get('graph', {}), cut=data.get('cut', {}),
        target=target, k=k, sweep=sweep, trials=trials, seed=seed,
        verify=data.get('verify', {}), plot=data.get('plot', {}), digest=digest,
    )


def _digest(raw):
    return hashlib.sha256(raw).hexdigest()


def load_config(path):
    """Read, parse and validate an experiment config file."""
    try:
        with open(path, 'rb') as f:
            raw = f.read()
    except OSError as exc:
        raise ConfigError(f"$: cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(raw.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"$: invalid JSON in {path}: {exc}") from exc
    return validate(data, _digest(raw))


def preset_path(figure):
    """Locate presets/<group>/<figure>.json."""
    _choice(figure, FIGURES, 'figure')
    root = config.current().PRESETS_DIR
    for group in sorted(os.listdir(root)):
        candidate = os.path.join(root, group, f"{figure}.json")
        if os.path.isfile(candidate):
            return candidate
    raise ConfigError(f"figure: no preset for {figure} under {root}")


def load_preset(figure):
    return load_config(preset_path(figure))


def list_presets():
    """Return (figure, group, path) for every built-in preset."""
    root = config.current().PRESETS_DIR
    found = []
    for group in sorted(os.listdir(root)):
        folder = os.path.join(root, group)
        if not os.path.isdir(folder):
            continue
        for filename in sorted(os.listdir(folder)):
            if filename.endswith('.json'):
                found.append((filename[:-5], group, os.path.join(folder, filename)))
    return found


# -- setting builders -----------------------------------------------------------

def build_spec(mixture, lam=None, r=None, alpha=None, dimension=None):
    """Mixture for one sweep point; sweep values override the config's own."""
    if 'components' in mixture:
        return spec_from_dict(mixture)
    sigma = mixture.get('sigma', 1.0)
    if mixture['layout'] == 'pair':
        return line_spec(lam, dimension or mixture.get('dimension', 1),
                         r if r is not None else mixture.get('r', 0.5),
                         alpha if alpha is not None else mixture.get('alpha', 1.0), sigma)
    return triangle_spec(lam, dimension or mixture.get('dimension', 2), sigma)


def build_model(graph, spec, delta=None):
    if graph['model'] == 'delta':
        value = graph.get('delta', OPTIMIZE) if delta is None else delta
        return DeltaNeighborhood(value)
    return GaussianKernel(graph.get('bandwidth', spec.common_stddev() or 1.0))


def square_factors(cut):
    return cut.get('factors', [cut.get('factor', 0.5)])


def build_cuts(cut, spec, lam=None, factor=None):
    """CutAssignment for a template or an explicit region (two components)."""
    template = cut.get('template')
    if template == 'midpoint':
        return CutAssignment(spec.m, {(a, b): midpoint_cut(spec, a, b)
                                      for a in range(spec.m) for b in range(a + 1, spec.m)})
    if template == 'voronoi':
        return voronoi_cuts(spec)
    if template == 'square':
        return square_cuts(spec, (factor or square_factors(cut)[0]) * lam)
    region = region_from_dict(cut)
    if spec.m != 2:
        raise ConfigError("cut: an explicit region needs a two-component mixture")
    return CutAssignment(2, {(0, 1): region})
