import argparse
import contextlib
import csv
import io
import json
import logging
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

import xdmt
from xdmt import dmt, exponent_oracle, outage_sim
from xdmt.channel import sample_channel_set
from xdmt.errors import DomainError, InsufficientData, NearSingularChannel
from xdmt.ia_precoding import alignment_residual, build_precoders, effective_channel

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_IO = 3

SEED_ENV = 'XDMT_SEED'
DEFAULT_SEED = 20190101
RANK_SV_FLOOR = 1e-8
RANK_PASS_FRACTION = 0.999
REPORT_LIMIT = 10


def parse_real(text):
    """Float or exact fraction such as '4/3'."""
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError('invalid real number "{}"'.format(text))


def parse_a(text):
    if text == 'auto':
        return text
    return parse_real(text)


def default_seed():
    value = os.environ.get(SEED_ENV)
    if value is None:
        return DEFAULT_SEED
    try:
        return int(value)
    except ValueError:
        raise DomainError('{}="{}" is not an integer'.format(SEED_ENV, value))


def _utc_now():
    return datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')


def _fmt(value):
    if value is None:
        return ''
    return '%.9g' % value


def format_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[k]) if not isinstance(row[k], int) else row[k]
                         for k in header])
    return buf.getvalue()


def write_output(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, 'w', encoding='utf-8', newline='') as f:
        f.write(text)


def write_manifest(out, command, parameters, seed, started, results=None):
    """Sidecar ``<out>.manifest.json`` so data files stay byte-stable."""
    if out is None:
        return
    manifest = {
        'command': command,
        'parameters': parameters,
        'seed': seed,
        'tool_version': xdmt.__version__,
        'started': started,
        'finished': _utc_now(),
    }
    if results is not None:
        manifest['results'] = results
    try:
        write_output(json.dumps(manifest, indent=2, sort_keys=True) + '\n',
                     out + '.manifest.json')
    except OSError:
        # no data file without its manifest
        with contextlib.suppress(OSError):
            os.remove(out)
        raise


def cmd_dmt(scheme, r_min, r_max, steps, a, format, out):
    started = _utc_now()
    s = dmt.get_scheme(scheme)
    r_max = s.r_max if r_max is None else r_max
    if not 0. <= r_min < r_max <= s.r_max + 1e-9:
        raise DomainError('need 0 <= r-min < r-max <= {:.6g}, got {} and {}'.format(
            s.r_max, r_min, r_max))
    if steps < 2:
        raise DomainError('steps must be at least 2, got {}'.format(steps))
    r_grid = np.linspace(r_min, min(r_max, s.r_max), steps)
    curve = dmt.dmt_curve(s, r_grid, a)
    records = curve.as_records()
    if format == 'csv':
        text = format_csv(('r', 'a', 'd'), records)
    else:
        text = json.dumps(records, indent=2) + '\n'
    write_output(text, out)
    write_manifest(out, 'dmt', {'scheme': scheme, 'r_min': r_min, 'r_max': r_max,
                                'steps': steps, 'a': a, 'format': format},
                   None, started)
    return EXIT_OK


def cmd_opt_a(scheme, r, grid_step):
    s = dmt.get_scheme(scheme)
    if not s.is_onoff:
        raise DomainError('opt-a needs onoff-ia or onoff-iaa, got "{}"'.format(scheme))
    failures = 0
    print('{:>8} {:>12} {:>12} {:>12} {:>12}'.format('r', 'a_closed', 'a_grid', 'd_closed', 'd_grid'))
    for value in r:
        a_cf = dmt.optimal_a(s, value)
        d_cf = dmt.diversity(s, value, a_cf)
        a_grid, d_grid = dmt.optimize_a_grid(s, value, grid_step)
        flag = ''
        if abs(d_cf - d_grid) > 1e-3:
            failures += 1
            flag = '  MISMATCH'
        print('{:>8.4f} {:>12.6f} {:>12.6f} {:>12.6f} {:>12.6f}{}'.format(
            value, a_cf, a_grid, d_cf, d_grid, flag))
    return EXIT_VERIFY if failures else EXIT_OK


def _mpi_comm():
    from mpi4py import MPI
    return MPI.COMM_WORLD


def cmd_simulate(scheme, a, r, snr_db, trials, seed, threads, format, out, mpi):
    started = _utc_now()
    cfg = outage_sim.OutageConfig(scheme, a, r, snr_db, trials, seed)
    comm = _mpi_comm() if mpi else None
    estimates = outage_sim.estimate_outage(cfg, threads=threads, comm=comm)
    if comm is not None and comm.Get_rank() != 0:
        return EXIT_OK
    try:
        slope = outage_sim.estimate_diversity_slope(estimates).as_record()
    except InsufficientData as e:
        logger.info('no slope fitted: %s', e)
        slope = None
    closed = dmt.diversity(cfg.scheme, cfg.r, cfg.a)
    records = [e.as_record() for e in estimates]
    if format == 'csv':
        text = format_csv(('snr_db', 'p_hat', 'ci95', 'outage_count', 'trials'), records)
    else:
        text = json.dumps({'config': cfg.as_dict(), 'estimates': records,
                           'slope': slope, 'closed_form_d': closed}, indent=2) + '\n'
    write_output(text, out)
    results = {
        'slope': None if slope is None else slope['slope'],
        'slope_stderr': None if slope is None else slope['stderr'],
        'slope_points': None if slope is None else slope['points_used'],
        'closed_form_d': closed,
    }
    write_manifest(out, 'simulate', dict(cfg.as_dict(), threads=threads, format=format),
                   seed, started, results)
    # stdout carries the data itself when there is no --out
    summary = sys.stdout if out is not None else sys.stderr
    if slope is None:
        print('slope=  stderr=  closed_form_d={:.6g}'.format(closed), file=summary)
    else:
        print('slope={:.6g} stderr={:.3g} closed_form_d={:.6g}'.format(
            slope['slope'], slope['stderr'], closed), file=summary)
    return EXIT_OK


def _alignment_and_rank(seed, draws, tol):
    residual_failures, rank_failures = [], []
    excluded, worst = 0, 0.
    for index in range(draws):
        ch = sample_channel_set(seed, index)
        try:
            p = build_precoders(ch)
        except NearSingularChannel:
            excluded += 1
            continue
        residual = alignment_residual(ch, p)
        worst = max(worst, residual)
        if not residual < tol:
            residual_failures.append((index, residual))
        smin = min(effective_channel(ch, rcv, p).smallest_singular_value() for rcv in (1, 2))
        if not smin > RANK_SV_FLOOR:
            rank_failures.append((index, smin))
    return residual_failures, rank_failures, excluded, worst


def _report(name, passed, detail, cases):
    print('{:<10} {}  {}'.format(name, 'PASS' if passed else 'FAIL', detail))
    for case in cases[:REPORT_LIMIT]:
        print('    {}'.format(case))
    if len(cases) > REPORT_LIMIT:
        print('    ... {} more'.format(len(cases) - REPORT_LIMIT))


def cmd_verify(seed, draws, tol, exponent_tol):
    if draws < 1:
        raise DomainError('draws must be at least 1, got {}'.format(draws))
    residual_failures, rank_failures, excluded, worst = _alignment_and_rank(seed, draws, tol)
    used = draws - excluded
    alignment_ok = used > 0 and not residual_failures
    _report('alignment', alignment_ok,
            'draws={} excluded={} max_residual={:.3e} tol={:.0e}'.format(
                draws, excluded, worst, tol),
            ['draw {} residual {:.3e}'.format(i, v) for i, v in residual_failures])
    rank_ok = used > 0 and (used - len(rank_failures)) >= RANK_PASS_FRACTION * used
    _report('rank', rank_ok,
            'full_rank={}/{}'.format(used - len(rank_failures), used),
            ['draw {} smin {:.3e}'.format(i, v) for i, v in rank_failures])
    mismatches = exponent_oracle.oracle_sweep(tol=exponent_tol, unreduced=True)
    _report('exponent', not mismatches,
            'cases={} tol={:.0e}'.format(
                2 * len(exponent_oracle.SWEEP_A) * len(exponent_oracle.SWEEP_R), exponent_tol),
            ['{scheme} {event} a={a} r={r}: oracle={oracle:.12g} closed={closed_form:.12g}'.format(**m)
             for m in mismatches])
    return EXIT_OK if alignment_ok and rank_ok and not mismatches else EXIT_VERIFY


def cmd_dof_check(trials, snr_low_db, snr_high_db, seed):
    estimate = outage_sim.dof_check(trials, snr_low_db, snr_high_db, seed)
    print('dof_estimate={:.6f} (per-user target {:.6f})'.format(estimate, dmt.IA_DOF))
    return EXIT_OK


def cmd_exponent(scheme, event, a, r, step):
    closed = exponent_oracle.closed_form_exponent(scheme, event, a, r)
    exact = exponent_oracle.tight_exponent(scheme, event, a, r)
    print('closed_form {:.12g}'.format(closed))
    if exponent_oracle.closed_form_is_bound(scheme, event):
        print('tight       {:.12g}'.format(exact))
    lp = None
    for method in exponent_oracle.METHODS:
        value = exponent_oracle.outage_exponent(scheme, event, a, r, method, step)
        if method == 'lp':
            lp = value
        print('{:<11} {:.12g}'.format(method, value))
    if 0. < a < 1.:
        for p in exponent_oracle.event_problems(scheme, event, a, r):
            value, vertex = exponent_oracle.lp_solve(p)
            print('  {:<4} {:.12g} at {}'.format(p.set_id, value, dict(
                zip(p.names, np.round(vertex, 9).tolist()))))
        full = exponent_oracle.build_unreduced(scheme, event, a, r)
        print('  {} {:.12g} over {} exponents'.format(
            full.set_id, exponent_oracle.linprog_min(full), full.dimension))
    ok = abs(lp - exact) <= 1e-9 and closed <= lp + 1e-9
    return EXIT_OK if ok else EXIT_VERIFY


commands = {
    'dmt': cmd_dmt,
    'opt-a': cmd_opt_a,
    'simulate': cmd_simulate,
    'verify': cmd_verify,
    'dof-check': cmd_dof_check,
    'exponent': cmd_exponent,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog='xdmt',
        description='On-off switched interference alignment for the 2-user MIMO X-channel.',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument('--log-level', type=str, default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command')
    sub.required = True
    fmt = argparse.ArgumentDefaultsHelpFormatter
    scheme_names = sorted(dmt.schemes)

    p = sub.add_parser('dmt', formatter_class=fmt, help='closed-form DMT curve')
    p.add_argument('--scheme', type=str, default='onoff-ia', choices=scheme_names)
    p.add_argument('--r-min', type=parse_real, default=0.)
    p.add_argument('--r-max', type=parse_real, default=None,
                   help='defaults to the scheme maximum')
    p.add_argument('--steps', type=int, default=101)
    p.add_argument('--a', type=parse_a, default='auto')
    p.add_argument('--format', type=str, default='csv', choices=['csv', 'json'])
    p.add_argument('--out', type=str, default=None)

    p = sub.add_parser('opt-a', formatter_class=fmt, help='closed-form vs grid optimal a')
    p.add_argument('--scheme', type=str, default='onoff-ia', choices=['onoff-ia', 'onoff-iaa'])
    p.add_argument('--r', type=parse_real, nargs='+', default=[0.5, 0.9, 1.0, 1.2])
    p.add_argument('--grid-step', type=float, default=1e-4)

    p = sub.add_parser('simulate', formatter_class=fmt, help='Monte Carlo outage probability')
    p.add_argument('--scheme', type=str, default='onoff-ia', choices=scheme_names)
    p.add_argument('--a', type=parse_a, default='auto')
    p.add_argument('--r', type=parse_real, default=1.)
    p.add_argument('--snr-db', type=float, nargs='+', default=[20., 30., 40., 50., 60.])
    p.add_argument('--trials', type=int, default=100000)
    p.add_argument('--seed', type=int, default=None,
                   help='defaults to ${} or {}'.format(SEED_ENV, DEFAULT_SEED))
    p.add_argument('--threads', type=int, default=1)
    p.add_argument('--format', type=str, default='json', choices=['csv', 'json'])
    p.add_argument('--out', type=str, default=None)
    p.add_argument('--mpi', action='store_true', help='split trials over MPI ranks')

    p = sub.add_parser('verify', formatter_class=fmt, help='alignment, rank and exponent suites')
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--draws', type=int, default=1000)
    p.add_argument('--tol', type=float, default=1e-10)
    p.add_argument('--exponent-tol', type=float, default=1e-9)

    p = sub.add_parser('dof-check', formatter_class=fmt, help='high-SNR slope of the IA rate')
    p.add_argument('--trials', type=int, default=200)
    p.add_argument('--snr-low-db', type=float, default=40.)
    p.add_argument('--snr-high-db', type=float, default=80.)
    p.add_argument('--seed', type=int, default=None)

    p = sub.add_parser('exponent', formatter_class=fmt, help='outage exponent by every oracle')
    p.add_argument('--scheme', type=str, default='onoff-ia', choices=['onoff-ia', 'onoff-iaa'])
    p.add_argument('--event', type=str, default='E1', choices=list(exponent_oracle.EVENTS))
    p.add_argument('--a', type=parse_real, default=0.2)
    p.add_argument('--r', type=parse_real, default=1.)
    p.add_argument('--step', type=float, default=0.05)
    return parser


def parse_args(argv=None):
    args = vars(build_parser().parse_args(argv))
    if 'seed' in args and args['seed'] is None:
        args['seed'] = default_seed()
    return args


def configure_logging(level, rank=0):
    logging.basicConfig(
        level=getattr(logging, level) if rank == 0 else logging.WARNING,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr)


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except DomainError as e:
        print('xdmt: error: {}'.format(e), file=sys.stderr)
        return EXIT_USAGE
    command = args.pop('command')
    rank = 0
    if args.get('mpi'):
        rank = _mpi_comm().Get_rank()
    configure_logging(args.pop('log_level'), rank)
    try:
        return commands[command](**args)
    except DomainError as e:
        print('xdmt {}: error: {}'.format(command, e), file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print('xdmt {}: cannot write output: {}'.format(command, e), file=sys.stderr)
        return EXIT_IO
