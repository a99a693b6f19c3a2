"""Run configuration: one YAML file describing a complete study.

    model:    {builtin: droop, params: {...}}  or  {matrices: {A, B1, B2, C, D1, D2}}
    grid:     {H, D, omega_s, P_m, P_D}          (H and D required)
    event:    {t_event, delta_Pm, delta_PD}
    policy:   {threshold, release}
    template: {coeffs: [...], b}    xor    fit: {order, b_min, b_max, window}
    times:    {start, stop, step}   profile grid; step is also the simulation dt
    x0:       [...]                 converter state deviation at the disturbance
    seed, out, nonlinear_trace, check: {...}

Every field is validated on load and errors name the offending field.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np
import yaml

from .grid_sim import DeadbandPolicy, DisturbanceEvent, GridParams
from .linearize import LinearCipsModel
from .models import BUILTINS, builtin_model, default_guess
from .templates import FreqTemplate

__all__ = ['ConfigError', 'FitSpec', 'TimeGrid', 'CheckSpec', 'RunConfig', 'load_config',
           'parse_config', 'config_to_dict', 'dump_config']


class ConfigError(ValueError):
    """Invalid run configuration. ``field`` is the dotted path of the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


@dataclass(frozen=True)
class FitSpec:
    order: int
    b_min: float = 0.1
    b_max: float = 10.0
    window: tuple = None   # absolute simulation times; None = [t_event, horizon]


@dataclass(frozen=True)
class TimeGrid:
    start: float
    stop: float
    step: float

    def points(self):
        n = int(round((self.stop - self.start) / self.step))
        return self.start + np.arange(n + 1) * self.step


@dataclass(frozen=True)
class CheckSpec:
    kernel_tol: float = 1e-8
    recon_tol: float = 1e-6
    closure_tol: float = 1e-4      # None reports the gap without judging it
    convergence_tol: float = 1e-6
    random_cases: int = 10


@dataclass(frozen=True)
class RunConfig:
    model: dict
    grid: GridParams
    event: DisturbanceEvent
    times: TimeGrid
    policy: DeadbandPolicy = DeadbandPolicy()
    template: FreqTemplate = None
    fit: FitSpec = None
    x0: tuple = None
    seed: int = 0
    out: str = 'out'
    nonlinear_trace: bool = False
    check: CheckSpec = field(default_factory=CheckSpec)

    @property
    def horizon(self):
        return self.event.t_event + self.times.stop

    @property
    def dt(self):
        return self.times.step

    def is_builtin(self):
        return 'builtin' in self.model

    def nonlinear_model(self):
        if not self.is_builtin():
            raise ConfigError('model', "a nonlinear model needs a built-in model")
        return builtin_model(self.model['builtin'], **self.model.get('params', {}))

    def linear_model(self):
        """Built-in models are linearized at their equilibrium."""
        if self.is_builtin():
            from .linearize import find_equilibrium, linearize
            nl = self.nonlinear_model()
            return linearize(nl, find_equilibrium(nl, default_guess(nl)))
        return LinearCipsModel.from_dict(self.model['matrices'])


_TOP = {'model', 'grid', 'event', 'policy', 'template', 'fit', 'times', 'x0', 'seed', 'out',
        'nonlinear_trace', 'check'}


def _section(d, name, required=True):
    if name not in d or d[name] is None:
        if required:
            raise ConfigError(name, "missing required section")
        return {}
    sec = d[name]
    if not isinstance(sec, dict):
        raise ConfigError(name, f"expected a mapping, got {type(sec).__name__}")
    return sec


def _no_extra(sec, allowed, where):
    extra = sorted(set(sec) - set(allowed))
    if extra:
        raise ConfigError(f"{where}.{extra[0]}", f"unknown field (allowed: {', '.join(sorted(allowed))})")


def _num(sec, key, where, default=None, required=False):
    name = f"{where}.{key}" if where else key
    if key not in sec or sec[key] is None:
        if required:
            raise ConfigError(name, "missing required field")
        return default
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(name, "must be finite")
    return v


def _int(sec, key, where, default=None, required=False):
    name = f"{where}.{key}" if where else key
    v = sec.get(key)
    if v is None:
        if required:
            raise ConfigError(name, "missing required field")
        return default
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(name, f"expected an integer, got {v!r}")
    return v


def _numbers(v, name):
    try:
        arr = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(name, "expected a (nested) list of numbers") from None
    if not np.all(np.isfinite(arr)):
        raise ConfigError(name, "must be finite")
    return arr


def _build(fn, name, **kw):
    try:
        return fn(**kw)
    except ValueError as exc:
        raise ConfigError(name, str(exc)) from None


def _parse_model(sec):
    if ('builtin' in sec) == ('matrices' in sec):
        raise ConfigError('model', "give exactly one of 'builtin' or 'matrices'")
    if 'builtin' in sec:
        _no_extra(sec, {'builtin', 'params'}, 'model')
        name = sec['builtin']
        if name not in BUILTINS:
            raise ConfigError('model.builtin', f"unknown built-in {name!r}; choose from {sorted(BUILTINS)}")
        params = sec.get('params') or {}
        if not isinstance(params, dict):
            raise ConfigError('model.params', "expected a mapping")
        try:
            builtin_model(name, **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError('model.params', str(exc)) from None
        return {'builtin': name, 'params': dict(params)}
    mats = sec['matrices']
    if not isinstance(mats, dict):
        raise ConfigError('model.matrices', "expected a mapping")
    _no_extra(mats, {'A', 'B1', 'B2', 'C', 'D1', 'D2'}, 'model.matrices')
    out = {}
    for key in ('A', 'B1', 'B2', 'C'):
        if key not in mats:
            raise ConfigError(f'model.matrices.{key}', "missing required field")
        out[key] = _numbers(mats[key], f'model.matrices.{key}').tolist()
    for key in ('D1', 'D2'):
        out[key] = _num(mats, key, 'model.matrices', 0.0)
    try:
        LinearCipsModel.from_dict(out)
    except ValueError as exc:
        raise ConfigError('model.matrices', str(exc)) from None
    return {'matrices': out}


def _model_size(model):
    if 'builtin' in model:
        return builtin_model(model['builtin'], **model['params']).n_x
    return len(model['matrices']['A'])


def parse_config(d):
    """Validate a config mapping and return a :class:`RunConfig`."""
    if not isinstance(d, dict):
        raise ConfigError('', "config must be a mapping at top level")
    _no_extra(d, _TOP, 'config')
    model = _parse_model(_section(d, 'model'))

    g = _section(d, 'grid')
    _no_extra(g, {'H', 'D', 'omega_s', 'P_m', 'P_D'}, 'grid')
    grid = _build(GridParams, 'grid', H=_num(g, 'H', 'grid', required=True),
                  D=_num(g, 'D', 'grid', required=True),
                  omega_s=_num(g, 'omega_s', 'grid', 1.0), P_m=_num(g, 'P_m', 'grid', 0.5),
                  P_D=_num(g, 'P_D', 'grid', 1.0))

    e = _section(d, 'event')
    _no_extra(e, {'t_event', 'delta_Pm', 'delta_PD'}, 'event')
    event = _build(DisturbanceEvent, 'event', t_event=_num(e, 't_event', 'event', 0.0),
                   delta_Pm=_num(e, 'delta_Pm', 'event', 0.0),
                   delta_PD=_num(e, 'delta_PD', 'event', 0.0))

    p = _section(d, 'policy', required=False)
    _no_extra(p, {'threshold', 'release'}, 'policy')
    policy = _build(DeadbandPolicy, 'policy', threshold=_num(p, 'threshold', 'policy', 0.0),
                    release=_num(p, 'release', 'policy', 0.5))

    tm = _section(d, 'times')
    _no_extra(tm, {'start', 'stop', 'step'}, 'times')
    start = _num(tm, 'start', 'times', 0.0)
    stop = _num(tm, 'stop', 'times', required=True)
    step = _num(tm, 'step', 'times', required=True)
    if not step > 0:
        raise ConfigError('times.step', "must be positive")
    if start < 0:
        raise ConfigError('times.start', "must be non-negative")
    if not stop > start:
        raise ConfigError('times.stop', "must exceed times.start")
    for name, span in (('times.stop', stop - start), ('times.stop', stop),
                       ('event.t_event', event.t_event)):
        n = round(span / step)
        if abs(n * step - span) > 1e-9 * max(1.0, span):
            raise ConfigError(name, f"{span} is not a multiple of times.step = {step}")
    times = TimeGrid(start, stop, step)

    has_tpl = d.get('template') is not None
    has_fit = d.get('fit') is not None
    if has_tpl == has_fit:
        raise ConfigError('template', "give exactly one of 'template' or 'fit'")
    template = fit = None
    if has_tpl:
        t = _section(d, 'template')
        _no_extra(t, {'coeffs', 'b'}, 'template')
        if 'coeffs' not in t:
            raise ConfigError('template.coeffs', "missing required field")
        coeffs = _numbers(t['coeffs'], 'template.coeffs')
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ConfigError('template.coeffs', "expected a non-empty list of numbers")
        template = _build(FreqTemplate, 'template.b', coeffs=tuple(coeffs.tolist()),
                          b=_num(t, 'b', 'template', required=True))
    else:
        f = _section(d, 'fit')
        _no_extra(f, {'order', 'b_min', 'b_max', 'window'}, 'fit')
        order = _int(f, 'order', 'fit', required=True)
        if order < 0:
            raise ConfigError('fit.order', "must be >= 0")
        b_min, b_max = _num(f, 'b_min', 'fit', 0.1), _num(f, 'b_max', 'fit', 10.0)
        if not 0 < b_min < b_max:
            raise ConfigError('fit.b_min', "need 0 < b_min < b_max")
        window = f.get('window')
        if window is not None:
            w = _numbers(window, 'fit.window')
            if w.shape != (2,) or not w[0] < w[1]:
                raise ConfigError('fit.window', "expected [t0, t1] with t0 < t1")
            window = (float(w[0]), float(w[1]))
        fit = FitSpec(order, b_min, b_max, window)

    x0 = d.get('x0')
    if x0 is not None:
        arr = _numbers(x0, 'x0').reshape(-1)
        n = _model_size(model)
        if arr.size != n:
            raise ConfigError('x0', f"has length {arr.size}, model has {n} states")
        x0 = tuple(arr.tolist())

    seed = _int(d, 'seed', '', 0)
    out = d.get('out', 'out')
    if not isinstance(out, str) or not out:
        raise ConfigError('out', "expected a directory name")
    nl = d.get('nonlinear_trace', False)
    if not isinstance(nl, bool):
        raise ConfigError('nonlinear_trace', "expected true or false")
    if nl and 'builtin' not in model:
        raise ConfigError('nonlinear_trace', "needs a built-in model")

    c = _section(d, 'check', required=False)
    _no_extra(c, {'kernel_tol', 'recon_tol', 'closure_tol', 'convergence_tol', 'random_cases'},
              'check')
    defaults = CheckSpec()
    check = CheckSpec(
        kernel_tol=_num(c, 'kernel_tol', 'check', defaults.kernel_tol),
        recon_tol=_num(c, 'recon_tol', 'check', defaults.recon_tol),
        closure_tol=(_num(c, 'closure_tol', 'check') if 'closure_tol' in c
                     else defaults.closure_tol),
        convergence_tol=_num(c, 'convergence_tol', 'check', defaults.convergence_tol),
        random_cases=_int(c, 'random_cases', 'check', defaults.random_cases))

    return RunConfig(model, grid, event, times, policy, template, fit, x0, seed, out, nl, check)


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads 1e-4 style exponents as floats (YAML 1.2)."""


_Loader.add_implicit_resolver(
    'tag:yaml.org,2002:float',
    re.compile(r'^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$'),
    list('-+0123456789'))


def load_config(path):
    try:
        with open(path) as fh:
            d = yaml.load(fh, Loader=_Loader)
    except OSError as exc:
        raise ConfigError('', f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError('', f"{path}: YAML syntax error: {exc}") from None
    return parse_config(d)


def config_to_dict(cfg):
    d = {'model': cfg.model,
         'grid': {'H': cfg.grid.H, 'D': cfg.grid.D, 'omega_s': cfg.grid.omega_s,
                  'P_m': cfg.grid.P_m, 'P_D': cfg.grid.P_D},
         'event': {'t_event': cfg.event.t_event, 'delta_Pm': cfg.event.delta_Pm,
                   'delta_PD': cfg.event.delta_PD},
         'policy': {'threshold': cfg.policy.threshold, 'release': cfg.policy.release},
         'times': {'start': cfg.times.start, 'stop': cfg.times.stop, 'step': cfg.times.step}}
    if cfg.template is not None:
        d['template'] = cfg.template.to_dict()
    else:
        f = {'order': cfg.fit.order, 'b_min': cfg.fit.b_min, 'b_max': cfg.fit.b_max}
        if cfg.fit.window is not None:
            f['window'] = list(cfg.fit.window)
        d['fit'] = f
    if cfg.x0 is not None:
        d['x0'] = list(cfg.x0)
    d.update(seed=cfg.seed, out=cfg.out, nonlinear_trace=cfg.nonlinear_trace)
    c = cfg.check
    d['check'] = {'kernel_tol': c.kernel_tol, 'recon_tol': c.recon_tol,
                  'closure_tol': c.closure_tol, 'convergence_tol': c.convergence_tol,
                  'random_cases': c.random_cases}
    return d


def dump_config(cfg, path):
    """Write the fully resolved config; it re-parses to an equal RunConfig."""
    with open(path, 'w') as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False, default_flow_style=None)
