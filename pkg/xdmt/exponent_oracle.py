"""Exponent minimization over the linear outage sets.

At high SNR the probability of an outage event decays with the smallest
total exponent sum_j c_j v_j over a polyhedron of exponential orders v >= 0.
The closed-form tradeoff is checked here three independent ways: exact
vertex enumeration (``lp_min``), brute force on a lattice (``grid_min``), and
HiGHS via scipy (``linprog_min``).
"""
import itertools
import logging
import math

import numpy as np
from scipy.optimize import linprog

from xdmt import dmt
from xdmt.errors import DomainError, InfeasibleProblem

logger = logging.getLogger(__name__)

OUTAGE_SETS = ('O1', 'O2', 'O3', 'O4', 'B1a', 'B1b', 'B2')
EVENTS = ('E1', 'E2')
METHODS = ('lp', 'grid', 'linprog')

# Outage sets whose union makes up each dominant event.
_EVENT_SETS = {
    ('ia', 'E1'): ('O1', 'O2'),
    ('ia', 'E2'): ('O3', 'O4'),
    ('iaa', 'E1'): ('B1a', 'B1b'),
    ('iaa', 'E2'): ('B2',),
}

SWEEP_A = tuple(round(0.05 * k, 2) for k in range(1, 20))
SWEEP_R = tuple(round(0.1 * k, 1) for k in range(1, 14))

# Rows expanded at once by the lattice search.
_EXPAND_LIMIT = 1 << 18

# Events whose closed form is a lower bound of the outage-set minimum.
_BOUND_EVENTS = frozenset([('iaa', 'E1')])

# Grid minima may undercut the exact value by the feasibility tolerance.
_GRID_FLOOR = 1e-7
_LINPROG_TOL = 1e-7


class ExponentProblem(object):
    """min c.v subject to A v >= b and v >= 0."""

    def __init__(self, objective, A, b, names=None, set_id=None):
        self.objective = np.asarray(objective, dtype=float)
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        assert self.A.shape == (len(self.b), len(self.objective))
        assert len(self.b) >= 1
        if names is None:
            names = tuple('v{}'.format(k + 1) for k in range(self.dimension))
        self.names = tuple(names)
        self.set_id = set_id

    @property
    def dimension(self):
        return len(self.objective)

    @property
    def degenerate(self):
        """Every bound is nonpositive, so the origin is feasible."""
        return bool(np.all(self.b <= 0.))

    def feasible(self, v, tol=1e-9):
        v = np.asarray(v, dtype=float)
        slack = v @ self.A.T - self.b
        ok = np.all(slack >= -tol * (1. + np.abs(self.b)), axis=-1)
        return ok & np.all(v >= -tol, axis=-1)

    def scaled(self, factor):
        return ExponentProblem(factor * self.objective, self.A, self.b,
                               self.names, self.set_id)

    def __repr__(self):
        return 'ExponentProblem(set={}, dim={}, objective={}, A={}, b={})'.format(
            self.set_id, self.dimension, self.objective.tolist(),
            self.A.tolist(), self.b.tolist())


def _bounds(a, r):
    return 6. - 3. * r - 2. * a, 6. - 6. * r + 2. * a


def _check_point(a, r):
    a = float(a)
    if not 0. < a < 1.:
        raise DomainError('outage sets need a in (0, 1), got {}'.format(a))
    r = float(r)
    if not 0. <= r <= dmt.IA_DOF + 1e-12:
        raise DomainError('r={} outside [0, 4/3]'.format(r))
    return a, r


def build_problem(set_id, a, r):
    a, r = _check_point(a, r)
    b1, b2 = _bounds(a, r)
    p, q, s = 3. * (1. - a), 4. * a, a + 3.
    if set_id == 'O1':
        layout = (('v11', 'v22'), (2, 2), [[s, p]], [b1])
    elif set_id == 'O2':
        layout = (('v11', 'v12', 'v21'), (1, 1, 1),
                  [[q, p, p], [1, -1, -1]], [b1, 0.])
    elif set_id == 'O3':
        layout = (('v11', 'v22', 'v11[22]'), (4, 4, 1), [[s, p, q]], [b2])
    elif set_id == 'O4':
        layout = (('v11[12]', 'v22[11]', 'v11[11]', 'v11[22]'), (3, 3, 1, 1),
                  [[p, p, q, q], [-1, -1, 1, 0]], [b2, 0.])
    elif set_id == 'B1a':
        # the weaker Alamouti coefficient is v11 itself
        layout = (('v11', 'v22', 'v12+v21', 'v11[12]'), (1, 1, 1, 1),
                  [[s, p, 0, 0], [q, 0, p, 0], [-1, 0, 0, 1]], [b1, b1, 0.])
    elif set_id == 'B1b':
        # the weaker Alamouti coefficient is v11[12]
        layout = (('v11', 'v22', 'v12+v21', 'v11[12]'), (1, 1, 1, 1),
                  [[p, p, 0, q], [0, 0, p, q], [1, 0, 0, -1]], [b1, b1, 0.])
    elif set_id == 'B2':
        layout = (('v11', 'v22', 'v11[11]', 'v11[22]'), (4, 4, 1, 1),
                  [[s, p, q, 0], [s, p, 0, q]], [b2, b2])
    else:
        raise DomainError('unknown outage set "{}"'.format(set_id))
    names, objective, A, b = layout
    problem = ExponentProblem(objective, A, b, names, set_id)
    if problem.degenerate:
        logger.debug('set %s degenerate at a=%s r=%s', set_id, a, r)
    return problem


def _entry(n, k, l):
    """Exponent name of the gain from antenna k of transmitter l to antenna n of receiver 1."""
    return 'v{}{}[1{}]'.format(n, k, l)


# Coefficients entering the IA-stage rate: one candidate list per min() term.
_GAIN_GROUPS = {
    ('ia', 'E1'): (('v11[11]',),),
    ('iaa', 'E1'): (('v11[11]', 'v11[12]'),),
    ('ia', 'E2'): (('v11[11]',), ('v11[22]',)),
    ('iaa', 'E2'): (('v11[11]', 'v11[12]'), ('v11[21]', 'v11[22]')),
}


def build_unreduced(scheme, event, a, r):
    """Outage set of one event over every channel exponent it involves.

    Each min() over Alamouti candidates and each pair of columns in the
    determinant expansion becomes its own constraint, and every exponent
    costs one unit. No symmetry or case split is applied, so the minimum
    must equal the one over the reduced sets of the event.
    """
    key = _event_key(scheme, event)
    a, r = _check_point(a, r)
    b1, b2 = _bounds(a, r)
    p, q = 3. * (1. - a), 4. * a
    # E1 sees H^[11] alone, E2 the 2x4 matrix [H^[11] H^[12]].
    columns = [(k, l) for l in ((1,) if key[1] == 'E1' else (1, 2)) for k in (1, 2)]
    groups = _GAIN_GROUPS[key]
    names = [_entry(n, k, l) for n in (1, 2) for k, l in columns]
    names += [g for group in groups for g in group if g not in names]
    index = {name: j for j, name in enumerate(names)}
    rows = []
    for choice in itertools.product(*groups):
        for first, second in itertools.permutations(columns, 2):
            row = np.zeros(len(names))
            for g in choice:
                row[index[g]] += q
            row[index[_entry(1, *first)]] += p
            row[index[_entry(2, *second)]] += p
            rows.append(row)
    bound = b1 if key[1] == 'E1' else b2
    return ExponentProblem(np.ones(len(names)), rows, [bound] * len(rows), names,
                           '{}-{}'.format(*key))


def lp_solve(p, tol=1e-9):
    """Exact minimum and minimizing vertex by enumerating all vertices."""
    d = p.dimension
    planes = np.vstack([p.A, np.eye(d)])
    rhs = np.concatenate([p.b, np.zeros(d)])
    best, best_v = math.inf, None
    for combo in itertools.combinations(range(len(rhs)), d):
        M = planes[list(combo)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, rhs[list(combo)])
        if not p.feasible(v, tol):
            continue
        value = float(p.objective @ v)
        if value < best:
            best, best_v = value, np.maximum(v, 0.)
    if best_v is None:
        raise InfeasibleProblem('no feasible vertex for {!r}'.format(p))
    return best, best_v


def lp_min(p):
    return lp_solve(p)[0]


def linprog_min(p):
    res = linprog(p.objective, A_ub=-p.A, b_ub=-p.b,
                  bounds=[(0., None)] * p.dimension, method='highs')
    if res.status != 0:
        raise InfeasibleProblem('linprog failed on {!r}: {}'.format(p, res.message))
    return float(res.fun)


def _complete_last_axis(p, head, unit, v_top, tol):
    """Cheapest feasible last coordinate on the lattice for each head point.

    All objective coefficients are positive, so the smallest admissible value
    of the last coordinate is optimal for a fixed head.
    """
    partial = head @ p.A[:, :-1].T
    column = p.A[:, -1]
    n = len(head)
    lower = np.zeros(n)
    upper = np.full(n, v_top)
    ok = np.ones(n, dtype=bool)
    for j, coef in enumerate(column):
        rem = p.b[j] - partial[:, j]
        if coef > 0.:
            lower = np.maximum(lower, rem / coef)
        elif coef < 0.:
            upper = np.minimum(upper, rem / coef)
        else:
            ok &= rem <= tol * (1. + abs(p.b[j]))
    last = np.ceil(lower / unit - 1e-9) * unit
    ok &= last <= upper + 1e-9
    points = np.hstack([head, last[:, None]])
    ok &= p.feasible(points, tol)
    if not np.any(ok):
        return math.inf
    return float(np.min(points[ok] @ p.objective))


def _lattice_search(p, step, stride, n_max, budget, tol=1e-9):
    """Smallest objective on the stride sublattice among points costing at most ``budget``.

    Axes are fixed one at a time, depth first. A partial point is dropped
    once its cost plus the cheapest way to meet any single unmet constraint
    with the free axes exceeds the budget, which never removes a point that
    could still win.
    """
    c, A, b = p.objective, p.A, p.b
    d = p.dimension
    unit = stride * step
    v_top = n_max * step
    n_top = n_max // stride
    ratio = np.where(A > 0., c / np.where(A > 0., A, 1.), np.inf)
    # tail[j, k]: cheapest cost per unit of constraint j using axes k and up
    tail = np.hstack([np.minimum.accumulate(ratio[:, ::-1], axis=1)[:, ::-1],
                      np.full((len(b), 1), np.inf)])
    slack = tol * (1. + np.abs(b))
    limit, best = budget, math.inf
    pending = [(np.zeros((1, 0)), np.zeros((1, len(b))), np.zeros(1))]
    while pending:
        head, partial, spent = pending.pop()
        k = head.shape[1]
        if k == d - 1:
            best = min(best, _complete_last_axis(p, head, unit, v_top, tol))
            limit = min(limit, best)
            continue
        margin = limit + 1e-9 * (1. + abs(limit))
        counts = np.floor((margin - spent) / (c[k] * unit) + 1e-9)
        counts = np.clip(counts, -1, n_top).astype(np.int64) + 1
        if counts.sum() > _EXPAND_LIMIT and len(head) > 1:
            half = len(head) // 2
            pending.append((head[half:], partial[half:], spent[half:]))
            pending.append((head[:half], partial[:half], spent[:half]))
            continue
        rows = np.repeat(np.arange(len(head)), counts)
        values = (np.arange(len(rows)) - np.repeat(np.cumsum(counts) - counts, counts)) * unit
        head = np.hstack([head[rows], values[:, None]])
        partial = partial[rows] + values[:, None] * A[:, k]
        spent = spent[rows] + c[k] * values
        rem = b - partial
        with np.errstate(invalid='ignore'):
            need = np.where(rem > slack, rem * tail[:, k + 1], 0.)
        keep = spent + need.max(axis=1) <= margin
        if np.any(keep):
            pending.append((head[keep], partial[keep], spent[keep]))
    return best


def _seed_budget(p, step, v_top):
    """Objective of the cheapest feasible lattice point on an axis or the diagonal."""
    best = math.inf
    for direction in np.vstack([np.eye(p.dimension), np.ones(p.dimension)]):
        rate = p.A @ direction
        rising = rate > 0.
        t = max([0.] + list(p.b[rising] / rate[rising]))
        t = math.ceil(t / step - 1e-9) * step
        if t > v_top or not p.feasible(t * direction):
            continue
        best = min(best, float(p.objective @ (t * direction)))
    return best


def grid_min(p, step):
    """Exhaustive minimum over the lattice step*Z^d inside [0, v_max]^d.

    The search starts from the best axis or diagonal point and then runs on
    sublattices of stride 2^k, 2^(k-1), ..., 1. Every pass is a subset of the
    full lattice, so its best value bounds the optimum and the next pass only
    visits points whose objective can still beat it.
    """
    if not 0. < step <= 0.05:
        raise DomainError('grid step must lie in (0, 0.05], got {}'.format(step))
    if np.any(p.objective <= 0.):
        raise DomainError('grid_min needs a positive objective')
    positive = p.A[p.A > 0.]
    v_max = 10.
    if len(positive):
        v_max = max(v_max, 2. * max(float(np.max(p.b)), 0.) / float(np.min(positive)))
    n_max = int(math.floor(v_max / step + 1e-9))
    stride = 1
    while n_max > 32 * stride:
        stride *= 2
    incumbent = _seed_budget(p, step, n_max * step)
    budget = min(incumbent, float(p.objective.sum() * v_max))
    while stride >= 1:
        incumbent = min(incumbent, _lattice_search(p, step, stride, n_max, budget))
        budget = min(budget, incumbent)
        stride //= 2
    if not math.isfinite(incumbent):
        raise InfeasibleProblem('no feasible lattice point for {!r}'.format(p))
    return incumbent


def _solver(method, step):
    if method == 'lp':
        return lp_min
    if method == 'linprog':
        return linprog_min
    if method == 'grid':
        return lambda p: grid_min(p, step)
    raise DomainError('unknown method "{}" (choose from {})'.format(method, ', '.join(METHODS)))


def _event_key(scheme, event):
    family = dmt.get_scheme(scheme).family
    if (family, event) not in _EVENT_SETS:
        raise DomainError('no outage event {} for scheme "{}"'.format(
            event, dmt.get_scheme(scheme).name))
    return family, event


def event_problems(scheme, event, a, r):
    return [build_problem(s, a, r) for s in _EVENT_SETS[_event_key(scheme, event)]]


def closed_form_exponent(scheme, event, a, r):
    family, event = _event_key(scheme, event)
    e1, e2 = dmt.event_exponents(family, r, a)
    return e1 if event == 'E1' else e2


def closed_form_is_bound(scheme, event):
    """True when the closed form only bounds the event's exponent from below."""
    return _event_key(scheme, event) in _BOUND_EVENTS


def tight_exponent(scheme, event, a, r):
    """Minimum over the event's outage sets in closed form.

    Equal to ``closed_form_exponent`` except for the Alamouti E1 event. Its
    closed form leaves out the cost of the second Alamouti coefficient,
    which has to be as small as the first one at the binding vertex.
    """
    closed = closed_form_exponent(scheme, event, a, r)
    if not closed_form_is_bound(scheme, event):
        return closed
    a, r = float(a), float(r)
    b1 = _bounds(a, r)[0]
    if b1 <= 0.:
        return 0.
    factors = [3. / (a + 3.)]
    if a < 1.:
        factors.append(2. / (3. * (1. - a)))
    if a > 0.:
        factors.append(1. / (2. * a))
    return min(factors) * b1


def grid_tolerance(scheme, event, step):
    """Resolution bound of grid_min for the sets of one event."""
    sets = _EVENT_SETS[_event_key(scheme, event)]
    # Objective sums do not depend on (a, r).
    return step * max(float(build_problem(s, 0.5, 0.).objective.sum()) for s in sets)


def outage_exponent(scheme, event, a, r, method='lp', step=0.05):
    """Exponent of one dominant outage event, minimized over its outage sets."""
    solve = _solver(method, step)
    a = float(a)
    if a <= 0. or a >= 1.:
        return tight_exponent(scheme, event, a, r)
    value = min(solve(p) for p in event_problems(scheme, event, a, r))
    return max(value, 0.)


def oracle_sweep(a_values=SWEEP_A, r_values=SWEEP_R, method='lp', tol=1e-9, step=0.05,
                 schemes=('onoff-ia', 'onoff-iaa'), unreduced=False):
    """Compare oracle exponents and the closed forms over an (a, r) grid.

    Returns a list of mismatch records; empty means every case agreed. Each
    oracle value is held to ``tight_exponent``; an event whose closed form is
    only a bound must not fall below it. Grid values are judged against the
    lattice resolution instead of ``tol``. With ``unreduced`` every event is
    also solved over all of its exponents with linprog.
    """
    mismatches = []

    def mismatch(scheme, event, a, r, value, reference):
        mismatches.append({'scheme': scheme, 'event': event, 'a': a, 'r': r,
                           'oracle': value, 'closed_form': reference})

    for scheme in schemes:
        for a in a_values:
            for r in r_values:
                exps = {}
                for event in EVENTS:
                    value = outage_exponent(scheme, event, a, r, method, step)
                    exact = tight_exponent(scheme, event, a, r)
                    if method == 'grid':
                        ok = -_GRID_FLOOR <= value - exact <= grid_tolerance(scheme, event, step)
                    else:
                        ok = abs(value - exact) <= tol
                    if not ok or closed_form_exponent(scheme, event, a, r) > exact + tol:
                        mismatch(scheme, event, a, r, value, exact)
                    if unreduced and 0. < a < 1.:
                        full = max(linprog_min(build_unreduced(scheme, event, a, r)), 0.)
                        if abs(full - exact) > max(tol, _LINPROG_TOL):
                            mismatch(scheme, event + '-full', a, r, full, exact)
                    exps[event] = value
                if method != 'grid':
                    combined = max(0., min(exps['E1'], exps['E2'], dmt.d_star_22(r)))
                    closed = dmt.diversity(scheme, r, a)
                    if any(closed_form_is_bound(scheme, e) for e in EVENTS):
                        ok = combined >= closed - tol
                    else:
                        ok = abs(combined - closed) <= tol
                    if not ok:
                        mismatch(scheme, 'd', a, r, combined, closed)
    logger.info('oracle sweep method=%s cases=%d mismatches=%d', method,
                len(schemes) * len(a_values) * len(r_values), len(mismatches))
    return mismatches
