"""Command-line front end.

    emuinertia run CONFIG [--out DIR] [--seed N]
    emuinertia check CONFIG [--seed N]
    emuinertia fit TRACE.csv --order N [--b-min B] [--b-max B] [--out DIR]

Exit status: 0 success, 1 numerical failure or failed check, 2 bad config.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .config import ConfigError, dump_config, load_config
from .emulation import (asymptotic_gains, closed_form_available, compute_profile,
                        mu1_closed_form, mu2_closed_form, mu_general, reconstruct_power)
from .errors import ClosedFormUnavailableError, SingularDenominatorError
from .grid_sim import (extract_template_inputs, simulate_coupled_linear, simulate_nonlinear,
                       simulate_reduced)
from .linearize import find_equilibrium
from .models import default_guess
from .oracles import quad_mu, random_linear_model, reference_power, relative_error
from .templates import FreqTemplate, fit_template, read_trace_csv

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

# errors that mean "the numbers went wrong", as opposed to a bad config
NUMERIC_ERRORS = (ArithmeticError, RuntimeError, np.linalg.LinAlgError, ValueError)


def closure_gap(coupled, reduced):
    """max |dw_reduced - dw_coupled| / max |dw_coupled| (absolute if the latter is 0)."""
    diff = np.max(np.abs(reduced.dw - coupled.dw))
    scale = np.max(np.abs(coupled.dw))
    return float(diff / scale) if scale > 0 else float(diff)


def _series_error(x, ref):
    scale = np.max(np.abs(ref))
    diff = np.max(np.abs(np.asarray(x) - ref))
    return float(diff / scale) if scale > 0 else float(diff)


def obtain_template(cfg, coupled):
    """Explicit template, or a fit to the coupled small-signal ROCOF."""
    if cfg.template is not None:
        return cfg.template, None
    window = cfg.fit.window or (cfg.event.t_event, cfg.horizon)
    ts, roc = extract_template_inputs(coupled, window)
    res = fit_template(ts, roc, cfg.fit.order, (cfg.fit.b_min, cfg.fit.b_max))
    return res.template, res.residual


def run_study(cfg):
    """Everything ``run`` computes, as a dict of results (no file output)."""
    model = cfg.linear_model()
    x0 = None if cfg.x0 is None else np.array(cfg.x0)
    coupled = simulate_coupled_linear(model, cfg.grid, cfg.event, x0, cfg.horizon, cfg.dt)
    tpl, residual = obtain_template(cfg, coupled)
    profile = compute_profile(model, cfg.grid, tpl, x0, cfg.times.points())
    if cfg.times.start == 0:
        sim_profile = profile
    else:
        grid0 = dataclasses.replace(cfg.times, start=0.0).points()
        sim_profile = compute_profile(model, cfg.grid, tpl, x0, grid0)
    reduced = simulate_reduced(cfg.grid, sim_profile, cfg.event, cfg.horizon, cfg.dt)
    out = dict(model=model, coupled=coupled, template=tpl, fit_residual=residual,
               profile=profile, reduced=reduced, closure_gap=closure_gap(coupled, reduced))
    if cfg.nonlinear_trace:
        nl = cfg.nonlinear_model()
        ep = find_equilibrium(nl, default_guess(nl))
        out['nonlinear'] = simulate_nonlinear(nl, cfg.grid, cfg.event, cfg.policy, cfg.horizon,
                                              cfg.dt, equilibrium=ep)
    return out


def _flag_runs(times, flags):
    idx = np.flatnonzero(flags)
    if idx.size == 0:
        return []
    runs, start = [], idx[0]
    for a, b in zip(idx[:-1], idx[1:]):
        if b != a + 1:
            runs.append((times[start], times[a]))
            start = b
    runs.append((times[start], times[idx[-1]]))
    return runs


def format_report(cfg, res):
    model, tpl, prof = res['model'], res['template'], res['profile']
    a1_inf, a2_inf = asymptotic_gains(model, tpl.b)
    abscissa = float(np.max(model.eigenvalues.real))
    lines = ["emulated inertia / damping study", ""]
    lines.append(f"model: {cfg.model.get('builtin', 'matrices')}, n = {model.n}, "
                 f"spectral abscissa = {abscissa:.6g}")
    lines.append(f"template: coeffs = {list(tpl.coeffs)}, b = {tpl.b!r}")
    if res['fit_residual'] is None:
        lines.append("fit residual: n/a (explicit template)")
    else:
        lines.append(f"fit residual (RMS): {res['fit_residual']:.6e}")
    lines.append(f"profile path: {prof.path}")
    lines.append(f"closure gap (max rel, dw): {res['closure_gap']:.6e}")
    for label, flags in (('dw', prof.flagged_dev), ('dw_dot', prof.flagged_rocof)):
        runs = _flag_runs(prof.times, flags)
        text = ', '.join(f"[{a:.6g}, {b:.6g}]" for a, b in runs) or 'none'
        lines.append(f"flagged points ({label} divisor): {int(flags.sum())}  {text}")
    lines.append(f"a1(inf) = D1 + C(-A)^-1 B1 = {a1_inf:.12g}")
    if abscissa < -tpl.b:
        lines.append(f"a2(inf) = D2 + C(-bI-A)^-1 B2 = {a2_inf:.12g}")
    else:
        lines.append(f"a2(inf): does not exist (spectral abscissa {abscissa:.6g} >= -b); "
                     f"D2 + C(-bI-A)^-1 B2 = {a2_inf:.12g}")
    lines.append(f"a1, a2 at t = {prof.times[-1]:.6g}: {prof.a1[-1]:.12g}, {prof.a2[-1]:.12g}")
    return '\n'.join(lines) + '\n'


def write_artifacts(cfg, res, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    res['profile'].to_csv(os.path.join(out_dir, 'profile.csv'))
    res['coupled'].to_csv(os.path.join(out_dir, 'trace_coupled.csv'))
    res['reduced'].to_csv(os.path.join(out_dir, 'trace_reduced.csv'))
    if 'nonlinear' in res:
        res['nonlinear'].to_csv(os.path.join(out_dir, 'trace_nonlinear.csv'))
    tpl = dict(res['template'].to_dict(),
               source='explicit' if cfg.template is not None else 'fit',
               fit_residual=res['fit_residual'])
    with open(os.path.join(out_dir, 'template.json'), 'w') as fh:
        json.dump(tpl, fh, indent=2)
        fh.write('\n')
    with open(os.path.join(out_dir, 'report.txt'), 'w') as fh:
        fh.write(format_report(cfg, res))
    dump_config(cfg, os.path.join(out_dir, 'config.yaml'))


# ---------------------------------------------------------------- checks

@dataclasses.dataclass
class CheckRow:
    name: str
    status: str          # PASS, FAIL or INFO
    observed: float = float('nan')
    tol: float = float('nan')
    note: str = ''

    def line(self):
        obs = '' if np.isnan(self.observed) else f"{self.observed:.3e}"
        tol = '' if np.isnan(self.tol) else f"{self.tol:.1e}"
        return f"{self.status:<5} {self.name:<26} {obs:>10} {tol:>9}  {self.note}"


def _judge(name, observed, tol, note=''):
    if tol is None:
        return CheckRow(name, 'INFO', observed, note=note or 'reported only')
    return CheckRow(name, 'PASS' if observed <= tol else 'FAIL', observed, tol, note)


def _kernel_times(stop):
    return np.geomspace(0.01, max(stop, 0.02), 20)


def _closed_vs_quad(model, b, times):
    worst = 0.0
    for t in times:
        worst = max(worst, relative_error(mu1_closed_form(model, 1.0, b, t),
                                          quad_mu(model, FreqTemplate.linear(1.0, b), t, 1)),
                    relative_error(mu2_closed_form(model, 1.0, b, t),
                                   quad_mu(model, FreqTemplate.linear(1.0, b), t, 2)))
    return worst


def run_checks(cfg, seed=None):
    seed = cfg.seed if seed is None else seed
    c = cfg.check
    rows = []
    res = run_study(cfg)
    model, tpl = res['model'], res['template']
    times = _kernel_times(cfg.times.stop)

    if closed_form_available(model, tpl.b):
        rows.append(_judge('closed form vs quadrature', _closed_vs_quad(model, tpl.b, times),
                           c.kernel_tol, f"ramp, b = {tpl.b:.6g}"))
    else:
        rows.append(CheckRow('closed form vs quadrature', 'INFO',
                             note=f"closed-form-unavailable: A or A + bI singular at b = {tpl.b:.6g}"))

    worst, skipped = 0.0, 0
    for t in times:
        for ch in (1, 2):
            try:
                mu = mu_general(model, tpl, t, ch)
            except SingularDenominatorError:
                skipped += 1
                continue
            worst = max(worst, relative_error(mu, quad_mu(model, tpl, t, ch)))
    rows.append(_judge('general vs quadrature', worst, c.kernel_tol,
                       f"{skipped} singular points skipped" if skipped else ''))

    rng = np.random.default_rng(seed)
    worst_q = worst_g = 0.0
    for _ in range(c.random_cases):
        m = random_linear_model(rng, int(rng.integers(1, 7)))
        b = float(rng.uniform(0.1, 5.0))
        tt = np.geomspace(0.01, 20.0, 5)
        worst_q = max(worst_q, _closed_vs_quad(m, b, tt))
        ramp = FreqTemplate.linear(1.0, b)
        for t in tt:
            worst_g = max(worst_g,
                          relative_error(mu_general(m, ramp, t, 1), mu1_closed_form(m, 1.0, b, t)),
                          relative_error(mu_general(m, ramp, t, 2), mu2_closed_form(m, 1.0, b, t)))
    note = f"{c.random_cases} random systems, seed {seed}"
    rows.append(_judge('random: closed vs quad', worst_q, c.kernel_tol, note))
    rows.append(_judge('random: general vs closed', worst_g, c.kernel_tol, note))

    prof = res['profile']
    sel = prof.times >= 0.01
    x0 = np.zeros(model.n) if cfg.x0 is None else np.array(cfg.x0)
    ref_times = np.concatenate([[0.0], prof.times[sel]]) if prof.times[0] > 0 else prof.times
    ref = reference_power(model, tpl, x0, ref_times)[-sel.sum():]
    rows.append(_judge('reconstruction identity', _series_error(reconstruct_power(prof)[sel], ref),
                       c.recon_tol, f"{int(prof.flagged.sum())} flagged points"))

    rows.append(_judge('closure gap', res['closure_gap'], c.closure_tol))

    half = simulate_coupled_linear(model, cfg.grid, cfg.event, x0, cfg.horizon, cfg.dt / 2)
    rows.append(_judge('dt convergence', _series_error(res['coupled'].dw, half.dw[::2]),
                       c.convergence_tol, f"dt = {cfg.dt:g} vs dt/2"))
    return rows


# ---------------------------------------------------------------- commands

def cmd_run(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out_dir = args.out or cfg.out
    if args.out:
        cfg = dataclasses.replace(cfg, out=args.out)
    res = run_study(cfg)
    write_artifacts(cfg, res, out_dir)
    print(f"wrote {out_dir}: closure gap {res['closure_gap']:.3e}, "
          f"{int(res['profile'].flagged.sum())} flagged points")
    return EXIT_OK


def cmd_check(args):
    cfg = load_config(args.config)
    rows = run_checks(cfg, args.seed)
    print(f"{'':<5} {'check':<26} {'observed':>10} {'tol':>9}")
    for row in rows:
        print(row.line())
    failed = [r for r in rows if r.status == 'FAIL']
    print(f"{len(failed)} failed" if failed else "all checks passed")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_fit(args):
    try:
        t, values, kind = read_trace_csv(args.trace)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError('trace', str(exc)) from None
    if args.order < 0:
        raise ConfigError('--order', "must be >= 0")
    if not 0 < args.b_min < args.b_max:
        raise ConfigError('--b-min', "need 0 < b-min < b-max")
    res = fit_template(t, values, args.order, (args.b_min, args.b_max), kind=kind)
    doc = dict(res.template.to_dict(), kind=kind, fit_residual=res.residual)
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, 'template.json'), 'w') as fh:
            fh.write(text + '\n')
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog='emuinertia',
                                description="Time-varying emulated inertia and damping of a converter.")
    sub = p.add_subparsers(dest='command', required=True)

    r = sub.add_parser('run', help="full pipeline, writes CSV/JSON/text artifacts")
    r.add_argument('config')
    r.add_argument('--out', help="output directory (overrides the config)")
    r.add_argument('--seed', type=int)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser('check', help="oracle cross-validation with a pass/fail table")
    c.add_argument('config')
    c.add_argument('--seed', type=int)
    c.add_argument('--out', help="accepted for symmetry; check writes nothing")
    c.set_defaults(func=cmd_check)

    f = sub.add_parser('fit', help="fit a template to a t,rocof or t,deviation CSV")
    f.add_argument('trace')
    f.add_argument('--order', type=int, required=True)
    f.add_argument('--b-min', type=float, default=0.1)
    f.add_argument('--b-max', type=float, default=10.0)
    f.add_argument('--out')
    f.add_argument('--seed', type=int, help="accepted for symmetry; fitting is deterministic")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == '__main__':
    sys.exit(main())
