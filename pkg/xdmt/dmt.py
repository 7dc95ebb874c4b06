"""Closed-form diversity-multiplexing tradeoff of the X-channel schemes.

Every on-off scheme's diversity is the smaller of two outage-event exponents,
capped by the 2x2 point-to-point tradeoff:

    d(r, a) = max(0, min(min(2/(a+3), 1/(k a)) (6 - 3r - 2a),
                         min(4/(a+3), 1/(k a)) (6 - 6r + 2a),
                         d*_{2,2}(r)))

with k = 4 for plain IA and k = 2 when the IA portion uses Alamouti coding.
At a = 0 the 1/(k a) coefficient is treated as +inf.
"""
import math

import numpy as np

from xdmt.errors import DomainError

IA_DOF = 4. / 3.
_TOL = 1e-12

# Coefficient k of the 1/(k a) branch per scheme family.
_IA_COEF = {'ia': 4., 'iaa': 2.}


class Scheme(object):
    def __init__(self, name, family, fixed_a, r_max, label):
        self.name = name
        self.family = family
        self.fixed_a = fixed_a
        self.r_max = r_max
        self.label = label

    @property
    def is_onoff(self):
        return self.family in _IA_COEF and self.fixed_a is None

    def __repr__(self):
        return 'Scheme(name={}, family={}, fixed_a={})'.format(
            self.name, self.family, self.fixed_a)


schemes = {
    'onoff-ia': Scheme('onoff-ia', 'ia', None, IA_DOF, 'On-off switched IA'),
    'onoff-iaa': Scheme('onoff-iaa', 'iaa', None, IA_DOF, 'On-off switched IA with Alamouti'),
    'conv-ia': Scheme('conv-ia', 'ia', 1., IA_DOF, 'Conventional IA'),
    'no-ia': Scheme('no-ia', 'ia', 0., IA_DOF, 'Without IA'),
    'iaa-fixed': Scheme('iaa-fixed', 'iaa', 1., IA_DOF, 'IA with Alamouti'),
    'p2p22': Scheme('p2p22', 'p2p', None, 2., '2x2 point-to-point MIMO'),
}


def get_scheme(scheme):
    if isinstance(scheme, Scheme):
        return scheme
    try:
        return schemes[scheme]
    except KeyError:
        raise DomainError('unknown scheme "{}" (choose from {})'.format(
            scheme, ', '.join(sorted(schemes))))


def _check_interval(name, value, low, high):
    value = float(value)
    if not (low - _TOL <= value <= high + _TOL):
        raise DomainError('{}={} outside [{:.6g}, {:.6g}]'.format(name, value, low, high))
    return min(max(value, low), high)


def _check_a(a):
    return _check_interval('a', a, 0., 1.)


def d_star(m, n, r):
    """Optimal m x n point-to-point MIMO tradeoff, linear between integers."""
    top = min(m, n)
    r = _check_interval('r', r, 0., top)
    k = min(int(math.floor(r)), top - 1)
    left = (m - k) * (n - k)
    right = (m - k - 1) * (n - k - 1)
    return left + (r - k) * (right - left)


def d_star_22(r):
    return d_star(2, 2, r)


def _inverse_branch(k, a):
    return math.inf if a == 0. else 1. / (k * a)


def _exponents(k, r, a):
    inv = _inverse_branch(k, a)
    e1 = min(2. / (a + 3.), inv) * (6. - 3. * r - 2. * a)
    e2 = min(4. / (a + 3.), inv) * (6. - 6. * r + 2. * a)
    return max(e1, 0.), max(e2, 0.)


def event_exponents(family, r, a):
    """Closed-form exponents (E1, E2) of the two dominant outage events."""
    if family not in _IA_COEF:
        raise DomainError('no IA outage events for family "{}"'.format(family))
    r = _check_interval('r', r, 0., IA_DOF)
    return _exponents(_IA_COEF[family], r, _check_a(a))


def _onoff(k, r, a):
    r = _check_interval('r', r, 0., IA_DOF)
    a = _check_a(a)
    return max(0., min(min(_exponents(k, r, a)), d_star_22(r)))


def d_onoff_ia(r, a):
    return _onoff(_IA_COEF['ia'], r, a)


def d_onoff_iaa(r, a):
    return _onoff(_IA_COEF['iaa'], r, a)


def optimal_a_ia(r):
    r = _check_interval('r', r, 0., IA_DOF)
    if r <= 0.8:
        return 0.
    if r <= 1.:
        return 0.2
    return 0.75 * r


def optimal_a_iaa(r):
    r = _check_interval('r', r, 0., IA_DOF)
    if r <= 0.8:
        return 0.
    if r <= 20. / 21.:
        return 1.5 * r - 1.
    if r <= 1.:
        return 3. / 7.
    # Crossing of the first and fourth component functions.
    return (3. * (2. - r) + 3. * math.sqrt(r * r + 16. * r - 16.)) / 10.


def _family_k(scheme):
    s = get_scheme(scheme)
    if s.family not in _IA_COEF:
        raise DomainError('scheme "{}" has no switch fraction'.format(s.name))
    return _IA_COEF[s.family]


def f_functions(scheme, a, r):
    """The four component functions whose lower envelope is the diversity.

    f2 and f4 are +inf at a = 0.
    """
    k = _family_k(scheme)
    a = _check_a(a)
    r = float(r)
    inv = _inverse_branch(k, a)
    b1 = 6. - 3. * r - 2. * a
    b2 = 6. - 6. * r + 2. * a
    f2 = math.inf if a == 0. else inv * b1
    f4 = math.inf if a == 0. else inv * b2
    return 2. / (a + 3.) * b1, f2, 4. / (a + 3.) * b2, f4


def _diversity_grid(k, r, a):
    inv = np.full_like(a, np.inf)
    inv[a > 0.] = 1. / (k * a[a > 0.])
    e1 = np.minimum(2. / (a + 3.), inv) * (6. - 3. * r - 2. * a)
    e2 = np.minimum(4. / (a + 3.), inv) * (6. - 6. * r + 2. * a)
    d = np.minimum(np.minimum(e1, e2), d_star_22(r))
    return np.maximum(d, 0.)


def optimize_a_grid(scheme, r, grid_step):
    """Exhaustive maximization over a in {0, step, 2 step, ..., 1}.

    Ties go to the smallest a.
    """
    s = get_scheme(scheme)
    if not s.is_onoff:
        raise DomainError('grid optimization needs an on-off scheme, got "{}"'.format(s.name))
    if not 0. < grid_step <= 0.01:
        raise DomainError('grid_step must lie in (0, 0.01], got {}'.format(grid_step))
    r = _check_interval('r', r, 0., IA_DOF)
    n = int(round(1. / grid_step))
    if abs(n * grid_step - 1.) < 1e-9:
        a = np.linspace(0., 1., n + 1)
    else:
        a = np.append(np.arange(0., 1., grid_step), 1.)
    d = _diversity_grid(_IA_COEF[s.family], r, a)
    best = int(np.argmax(d))
    return float(a[best]), float(d[best])


def optimal_a(scheme, r):
    """Switch fraction a scheme uses at r; None for point-to-point."""
    s = get_scheme(scheme)
    if s.family == 'p2p':
        return None
    if s.fixed_a is not None:
        return s.fixed_a
    return optimal_a_ia(r) if s.family == 'ia' else optimal_a_iaa(r)


def diversity(scheme, r, a=None):
    s = get_scheme(scheme)
    if s.family == 'p2p':
        return d_star_22(r)
    if a is None:
        a = optimal_a(s, r)
    return _onoff(_IA_COEF[s.family], r, a)


def optimal_d(scheme, r):
    return diversity(scheme, r, optimal_a(scheme, r))


class DmtPoint(object):
    def __init__(self, r, a, d):
        assert d >= 0.
        self.r = r
        self.a = a
        self.d = d

    def as_record(self):
        return {'r': self.r, 'a': self.a, 'd': self.d}

    def __repr__(self):
        return 'DmtPoint(r={}, a={}, d={})'.format(self.r, self.a, self.d)


class DmtCurve(object):
    def __init__(self, scheme, points):
        self.scheme = scheme
        self.points = list(points)

    @property
    def r(self):
        return np.array([p.r for p in self.points])

    @property
    def d(self):
        return np.array([p.d for p in self.points])

    def as_records(self):
        return [p.as_record() for p in self.points]

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return 'DmtCurve(scheme={}, points={})'.format(self.scheme.name, len(self.points))


def dmt_curve(scheme, r_grid, a_policy='auto'):
    """Sample a scheme's tradeoff on ``r_grid``.

    ``a_policy`` is 'auto' (the scheme's own a(r)) or a fixed fraction for
    the on-off schemes.
    """
    s = get_scheme(scheme)
    r_grid = [float(r) for r in r_grid]
    if any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise DomainError('r grid must be strictly increasing')
    fixed = None
    if a_policy != 'auto':
        fixed = _check_a(a_policy)
        if s.family == 'p2p':
            raise DomainError('scheme "{}" has no switch fraction'.format(s.name))
        if s.fixed_a is not None and fixed != s.fixed_a:
            raise DomainError('scheme "{}" fixes a={}, got a={}'.format(
                s.name, s.fixed_a, fixed))
    points = []
    for r in r_grid:
        _check_interval('r', r, 0., s.r_max)
        a = optimal_a(s, r) if fixed is None else fixed
        points.append(DmtPoint(r, a, diversity(s, r, a)))
    return DmtCurve(s, points)
