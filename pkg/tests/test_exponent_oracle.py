import os
import unittest

import numpy as np

from xdmt import dmt
from xdmt.errors import DomainError, InfeasibleProblem
from xdmt.exponent_oracle import (
    OUTAGE_SETS,
    ExponentProblem,
    build_problem,
    build_unreduced,
    closed_form_exponent,
    closed_form_is_bound,
    event_problems,
    grid_min,
    grid_tolerance,
    linprog_min,
    lp_min,
    lp_solve,
    oracle_sweep,
    outage_exponent,
    tight_exponent,
)


class TestBuildProblem(unittest.TestCase):
    def test_first_set_numbers(self):
        p = build_problem('O1', 0.2, 1.)
        np.testing.assert_allclose(p.A, [[3.2, 2.4]])
        np.testing.assert_allclose(p.b, [2.6])
        np.testing.assert_array_equal(p.objective, [2., 2.])

    def test_coupling_constraint(self):
        p = build_problem('O2', 0.3, 0.9)
        self.assertEqual(p.dimension, 3)
        np.testing.assert_array_equal(p.A[1], [1., -1., -1.])
        self.assertEqual(p.b[1], 0.)

    def test_dimensions(self):
        dims = {s: build_problem(s, 0.5, 1.).dimension for s in OUTAGE_SETS}
        self.assertEqual(dims, {'O1': 2, 'O2': 3, 'O3': 3, 'O4': 4,
                                'B1a': 4, 'B1b': 4, 'B2': 4})

    def test_alamouti_sets_split_on_the_weaker_coefficient(self):
        a, r = 0.5, 1.
        low, high = build_problem('B1a', a, r), build_problem('B1b', a, r)
        for p in (low, high):
            self.assertEqual(p.names, ('v11', 'v22', 'v12+v21', 'v11[12]'))
            np.testing.assert_array_equal(p.objective, [1., 1., 1., 1.])
            np.testing.assert_allclose(p.b, [2., 2., 0.])
        np.testing.assert_allclose(low.A, [[3.5, 1.5, 0., 0.], [2., 0., 1.5, 0.], [-1., 0., 0., 1.]])
        np.testing.assert_allclose(high.A, [[1.5, 1.5, 0., 2.], [0., 0., 1.5, 2.], [1., 0., 0., -1.]])

    def test_degenerate_bound(self):
        p = build_problem('O3', 0.5, 4. / 3.)
        self.assertTrue(p.degenerate)
        self.assertEqual(lp_min(p), 0.)
        self.assertFalse(build_problem('O3', 0.5, 1.).degenerate)

    def test_rejects_bad_arguments(self):
        for a in (0., 1., 1.2):
            with self.assertRaises(DomainError):
                build_problem('O1', a, 1.)
        with self.assertRaises(DomainError):
            build_problem('O5', 0.5, 1.)
        with self.assertRaises(DomainError):
            build_problem('O1', 0.5, 1.5)


class TestVertexEnumeration(unittest.TestCase):
    def test_axis_intercept(self):
        p = ExponentProblem([2., 2.], [[3.2, 2.4]], [2.6])
        value, vertex = lp_solve(p)
        self.assertAlmostEqual(value, 1.625, places=12)
        np.testing.assert_allclose(vertex, [0.8125, 0.], atol=1e-12)

    def test_single_variable(self):
        self.assertAlmostEqual(lp_min(ExponentProblem([1.], [[1.]], [5.])), 5.)

    def test_symmetric_tie(self):
        self.assertAlmostEqual(lp_min(ExponentProblem([2., 2.], [[1., 1.]], [1.])), 2.)

    def test_infeasible(self):
        p = ExponentProblem([1.], [[1.], [-1.]], [1., 0.])
        with self.assertRaises(InfeasibleProblem):
            lp_min(p)

    def test_homogeneous_in_objective(self):
        for s in OUTAGE_SETS:
            p = build_problem(s, 0.35, 0.8)
            self.assertAlmostEqual(lp_min(p.scaled(3.)), 3. * lp_min(p), places=10)

    def test_matches_linprog(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            a, r = rng.uniform(0.02, 0.98), rng.uniform(0., 4. / 3.)
            for s in OUTAGE_SETS:
                p = build_problem(s, a, r)
                self.assertAlmostEqual(lp_min(p), linprog_min(p), delta=1e-7)


class TestGridSearch(unittest.TestCase):
    def test_two_dimensional_example(self):
        p = ExponentProblem([2., 2.], [[3.2, 2.4]], [2.6])
        self.assertAlmostEqual(grid_min(p, 0.005), 1.625, delta=0.02)

    def test_origin_feasible(self):
        self.assertEqual(grid_min(ExponentProblem([1., 1.], [[1., 2.]], [-1.]), 0.01), 0.)

    def test_agrees_with_vertex_enumeration(self):
        rng = np.random.default_rng(3)
        step = 0.05
        for _ in range(100):
            a, r = rng.uniform(0.05, 0.95), rng.uniform(0., 4. / 3.)
            for s in OUTAGE_SETS:
                p = build_problem(s, a, r)
                exact, coarse = lp_min(p), grid_min(p, step)
                self.assertGreaterEqual(coarse, exact - 1e-7, (s, a, r))
                self.assertLessEqual(coarse - exact, step * p.objective.sum() + 1e-9, (s, a, r))

    def test_rejects_bad_step(self):
        with self.assertRaises(DomainError):
            grid_min(build_problem('O1', 0.5, 1.), 0.1)


class TestOutageExponent(unittest.TestCase):
    def test_examples(self):
        self.assertAlmostEqual(outage_exponent('onoff-ia', 'E1', 0.2, 1.), 1.625, places=12)
        self.assertAlmostEqual(outage_exponent('onoff-ia', 'E2', 0.2, 1.), 0.5, places=12)
        self.assertAlmostEqual(outage_exponent('onoff-ia', 'E1', 0.5, 1.), 1., places=12)
        self.assertAlmostEqual(outage_exponent('onoff-iaa', 'E1', 3. / 7., 1.), 1.875, places=12)
        self.assertAlmostEqual(closed_form_exponent('onoff-iaa', 'E1', 3. / 7., 1.), 1.25, places=12)

    def test_boundary_fractions_use_closed_form(self):
        self.assertAlmostEqual(outage_exponent('onoff-ia', 'E2', 0., 0.9), 0.8)
        self.assertAlmostEqual(outage_exponent('onoff-ia', 'E1', 1., 1.), 0.25)

    def test_alamouti_sets_are_one_representative_each(self):
        self.assertEqual([p.set_id for p in event_problems('onoff-iaa', 'E1', 0.5, 1.)],
                         ['B1a', 'B1b'])
        self.assertEqual([p.set_id for p in event_problems('onoff-iaa', 'E2', 0.5, 1.)], ['B2'])

    def test_lp_sweep_matches_closed_forms(self):
        self.assertEqual(oracle_sweep(method='lp'), [])

    def test_linprog_sweep_matches_closed_forms(self):
        self.assertEqual(oracle_sweep(a_values=(0.15, 0.5, 0.85), r_values=(0.3, 1., 1.3),
                                      method='linprog', tol=1e-7), [])

    def test_grid_sweep_within_resolution(self):
        self.assertEqual(oracle_sweep(a_values=(0.25, 0.6), r_values=(0.5, 1.1),
                                      method='grid', step=0.05), [])

    def test_grid_tolerance(self):
        self.assertAlmostEqual(grid_tolerance('onoff-ia', 'E2', 0.01), 0.09)
        self.assertAlmostEqual(grid_tolerance('onoff-iaa', 'E2', 0.01), 0.1)

    def test_combined_exponents_give_the_diversity(self):
        for a in (0.05, 0.45, 0.95):
            for r in (0.1, 0.7, 1.3):
                e1 = outage_exponent('onoff-ia', 'E1', a, r)
                e2 = outage_exponent('onoff-ia', 'E2', a, r)
                self.assertAlmostEqual(max(0., min(e1, e2, dmt.d_star_22(r))),
                                       dmt.diversity('onoff-ia', r, a), delta=1e-9)

    def test_combined_alamouti_exponents_bound_the_diversity(self):
        for a in (0.05, 0.45, 0.95):
            for r in (0.1, 0.7, 1.3):
                e1 = outage_exponent('onoff-iaa', 'E1', a, r)
                e2 = outage_exponent('onoff-iaa', 'E2', a, r)
                self.assertGreaterEqual(max(0., min(e1, e2, dmt.d_star_22(r))),
                                        dmt.diversity('onoff-iaa', r, a) - 1e-9)

    def test_sweep_with_unreduced_sets(self):
        self.assertEqual(oracle_sweep(a_values=(0.2, 0.55, 0.9), r_values=(0.4, 1., 1.25),
                                      unreduced=True), [])

    def test_dropped_branches_never_bind(self):
        for a in np.linspace(0., 0.999, 200):
            self.assertLessEqual(2. / (a + 3.), 2. / (3. * (1. - a)) + 1e-15)
            self.assertLessEqual(4. / (a + 3.), 4. / (3. * (1. - a)) + 1e-15)

    def test_unknown_method_and_event(self):
        with self.assertRaises(DomainError):
            outage_exponent('onoff-ia', 'E1', 0.5, 1., method='simplex')
        with self.assertRaises(DomainError):
            closed_form_exponent('onoff-ia', 'E3', 0.5, 1.)
        with self.assertRaises(DomainError):
            closed_form_exponent('p2p22', 'E1', 0.5, 1.)


class TestAlamoutiBound(unittest.TestCase):
    def test_only_alamouti_first_event_is_a_bound(self):
        self.assertTrue(closed_form_is_bound('onoff-iaa', 'E1'))
        self.assertTrue(closed_form_is_bound('iaa-fixed', 'E1'))
        self.assertFalse(closed_form_is_bound('onoff-iaa', 'E2'))
        self.assertFalse(closed_form_is_bound('onoff-ia', 'E1'))

    def test_tight_value_exceeds_closed_form_inside(self):
        for a in np.linspace(0.01, 0.99, 50):
            for r in (0., 0.5, 1., 1.3):
                closed = closed_form_exponent('onoff-iaa', 'E1', a, r)
                tight = tight_exponent('onoff-iaa', 'E1', a, r)
                self.assertGreater(tight, closed)
                self.assertAlmostEqual(tight, lp_min_of_event('onoff-iaa', 'E1', a, r), delta=1e-9)

    def test_forms_meet_at_the_ends(self):
        for r in (0., 0.6, 1.2):
            for a in (0., 1.):
                self.assertAlmostEqual(tight_exponent('onoff-iaa', 'E1', a, r),
                                       closed_form_exponent('onoff-iaa', 'E1', a, r), places=12)

    def test_other_events_are_tight(self):
        for scheme, event in (('onoff-ia', 'E1'), ('onoff-ia', 'E2'), ('onoff-iaa', 'E2')):
            self.assertEqual(tight_exponent(scheme, event, 0.3, 0.9),
                             closed_form_exponent(scheme, event, 0.3, 0.9))


def lp_min_of_event(scheme, event, a, r):
    return min(lp_min(p) for p in event_problems(scheme, event, a, r))


class TestUnreducedSets(unittest.TestCase):
    def test_sizes(self):
        sizes = {}
        for scheme in ('onoff-ia', 'onoff-iaa'):
            for event in ('E1', 'E2'):
                p = build_unreduced(scheme, event, 0.4, 1.)
                sizes[p.set_id] = (p.dimension, len(p.b))
                np.testing.assert_array_equal(p.objective, np.ones(p.dimension))
        self.assertEqual(sizes, {'ia-E1': (4, 2), 'iaa-E1': (5, 4),
                                 'ia-E2': (9, 12), 'iaa-E2': (10, 48)})

    def test_plain_first_event_rows(self):
        p = build_unreduced('onoff-ia', 'E1', 0.2, 1.)
        self.assertEqual(p.names, ('v11[11]', 'v12[11]', 'v21[11]', 'v22[11]'))
        np.testing.assert_allclose(p.A, [[3.2, 0., 0., 2.4], [0.8, 2.4, 2.4, 0.]])
        np.testing.assert_allclose(p.b, [2.6, 2.6])

    def test_alamouti_first_event_carries_both_coefficients(self):
        p = build_unreduced('onoff-iaa', 'E1', 0.5, 1.)
        self.assertEqual(p.names[-1], 'v11[12]')
        self.assertEqual(sorted(p.A[:, -1].tolist()), [0., 0., 2., 2.])

    def test_reduced_sets_keep_the_minimum(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            a, r = rng.uniform(0.02, 0.98), rng.uniform(0., 4. / 3.)
            for scheme in ('onoff-ia', 'onoff-iaa'):
                for event in ('E1', 'E2'):
                    full = linprog_min(build_unreduced(scheme, event, a, r))
                    self.assertAlmostEqual(full, lp_min_of_event(scheme, event, a, r),
                                           delta=1e-7, msg=(scheme, event, a, r))

    def test_grid_on_unreduced_sets(self):
        step = 0.05
        cases = [('onoff-ia', 'E2', 0.2, 1.), ('onoff-iaa', 'E2', 0.5, 1.1),
                 ('onoff-ia', 'E1', 0.5, 1.), ('onoff-iaa', 'E1', 0.5, 1.)]
        for scheme, event, a, r in cases:
            p = build_unreduced(scheme, event, a, r)
            exact = lp_min_of_event(scheme, event, a, r)
            coarse = grid_min(p, step)
            self.assertGreaterEqual(coarse, exact - 1e-7, (scheme, event))
            self.assertLessEqual(coarse - exact, step * p.dimension + 1e-9, (scheme, event))

    def test_lattice_aligned_optima_are_hit(self):
        self.assertAlmostEqual(grid_min(build_unreduced('onoff-ia', 'E2', 0.2, 1.), 0.05),
                               0.5, delta=1e-7)
        self.assertAlmostEqual(grid_min(build_unreduced('onoff-iaa', 'E2', 0.5, 1.1), 0.05),
                               0.4, delta=1e-7)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(DomainError):
            build_unreduced('p2p22', 'E1', 0.5, 1.)
        with self.assertRaises(DomainError):
            build_unreduced('onoff-ia', 'E2', 1., 1.)


@unittest.skipUnless(os.environ.get('XDMT_SLOW') == '1', 'set XDMT_SLOW=1 for the fine lattice sweep')
class TestSlowGridSweep(unittest.TestCase):
    def test_fine_lattice_over_the_full_grid(self):
        self.assertEqual(oracle_sweep(method='grid', step=0.005), [])


if __name__ == '__main__':
    unittest.main()
