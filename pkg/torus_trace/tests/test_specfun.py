import cmath
import math

import mpmath
import numpy as np
from django.test import SimpleTestCase

from torus_trace.exceptions import ConfigurationError, ConvergenceError, DomainError
from torus_trace.specfun import (ComplexModulus, SeriesConfig, dedekind_eta, dedekind_eta_pentagonal, dilog,
                                 euler_gamma, jacobi_theta1, jacobi_theta1_prime0, log_abs_dedekind_eta,
                                 reduce_modulus)

mpmath.mp.dps = 30


def mp_eta(z: complex) -> complex:
    q = mpmath.exp(2j * mpmath.pi * mpmath.mpc(z))
    return complex(mpmath.exp(2j * mpmath.pi * mpmath.mpc(z) / 24) * mpmath.qp(q))


class DedekindEtaTests(SimpleTestCase):

    def test_matches_q_pochhammer(self):
        for z in (0.3 + 0.8j, -0.45 + 1.7j, 0.5 + math.sqrt(3) / 2 * 1j):
            with self.subTest(z=z):
                expected = mp_eta(z)
                self.assertLess(abs(dedekind_eta(z) - expected) / abs(expected), 1e-12)

    def test_pentagonal_series_agrees_with_product(self):
        for re in (-0.5, -0.25, 0.0, 0.25, 0.5):
            for im in (0.6, 0.9, 1.3, 2.0):
                z = complex(re, im)
                with self.subTest(z=z):
                    self.assertLess(abs(dedekind_eta_pentagonal(z) - dedekind_eta(z, reduce=False)), 1e-12)

    def test_reduction_for_small_imaginary_part(self):
        z = 0.02 + 0.05j
        expected = mp_eta(z)
        self.assertLess(abs(dedekind_eta(z) - expected) / abs(expected), 1e-9)
        self.assertAlmostEqual(log_abs_dedekind_eta(z), math.log(abs(expected)), delta=1e-9)

    def test_value_at_i(self):
        expected = float(mpmath.gamma(0.25) / (2 * mpmath.pi ** 0.75))
        self.assertAlmostEqual(abs(dedekind_eta(1j)), expected, delta=1e-14)
        self.assertAlmostEqual(log_abs_dedekind_eta(1j), math.log(expected), delta=1e-13)

    def test_inversion_law(self):
        z = 0.37 + 0.91j
        lhs = abs(dedekind_eta(-1 / z))
        rhs = abs(cmath.sqrt(-1j * z)) * abs(dedekind_eta(z))
        self.assertAlmostEqual(lhs, rhs, delta=1e-13)

    def test_log_abs_does_not_underflow(self):
        y = 1e5
        value = log_abs_dedekind_eta(complex(0.001, y))
        self.assertTrue(math.isfinite(value))
        self.assertAlmostEqual(value / (-math.pi * y / 12.0), 1.0, delta=1e-12)

    def test_series_guard(self):
        with self.assertRaises(ConvergenceError):
            dedekind_eta(0.5j, SeriesConfig(max_terms=1))

    def test_config_validation_is_a_configuration_error(self):
        with self.assertRaises(ConfigurationError) as ctx:
            SeriesConfig.from_options(abs_tol=-1.0)
        self.assertEqual(ctx.exception.details['errors'][0]['field'], 'abs_tol')

    def test_modulus_must_be_in_upper_half_plane(self):
        with self.assertRaises(DomainError):
            ComplexModulus(0.0, -1.0)


class ReduceModulusTests(SimpleTestCase):

    def test_lands_in_fundamental_domain(self):
        for z in (3.3 + 0.05j, -7.9 + 0.001j, 0.49 + 0.87j, 12.0 + 40.0j):
            with self.subTest(z=z):
                reduced, word, _ = reduce_modulus(z)
                self.assertLessEqual(abs(reduced.real), 0.5 + 1e-12)
                self.assertGreaterEqual(abs(reduced), 1.0 - 1e-12)
                self.assertIsInstance(word, list)

    def test_multiplier_tracks_eta(self):
        z = 0.21 + 0.13j
        reduced, _, log_multiplier = reduce_modulus(z)
        expected = math.log(abs(mp_eta(z)))
        self.assertAlmostEqual(log_multiplier.real + math.log(abs(mp_eta(reduced))), expected, delta=1e-10)


class ThetaTests(SimpleTestCase):

    def setUp(self):
        self.tau = 0.2 + 1.1j
        self.q = mpmath.exp(1j * mpmath.pi * mpmath.mpc(self.tau))

    def test_theta1_matches_mpmath(self):
        w = np.array([0.1 + 0.05j, 0.37 - 0.4j, -0.25 + 0.5j, 0.5])
        values = jacobi_theta1(w, self.tau)
        for wi, value in zip(w, values):
            expected = complex(mpmath.jtheta(1, mpmath.pi * mpmath.mpc(wi), self.q))
            self.assertLess(abs(value - expected), 1e-13 * max(1.0, abs(expected)))

    def test_scalar_in_scalar_out(self):
        self.assertIsInstance(jacobi_theta1(0.25, self.tau), complex)

    def test_theta1_prime_matches_mpmath(self):
        expected = complex(mpmath.jtheta(1, 0, self.q, 1)) * math.pi
        self.assertLess(abs(jacobi_theta1_prime0(self.tau) - expected), 1e-13)

    def test_theta1_vanishes_at_zero(self):
        self.assertEqual(jacobi_theta1(0.0, self.tau), 0)

    def test_theta1_quasi_periodicity(self):
        w = 0.13 + 0.07j
        value = jacobi_theta1(w, self.tau)
        self.assertLess(abs(jacobi_theta1(w + 1, self.tau) + value), 1e-13)
        shifted = -cmath.exp(-1j * math.pi * self.tau - 2j * math.pi * w) * value
        self.assertLess(abs(jacobi_theta1(w + self.tau, self.tau) - shifted), 1e-12 * max(1.0, abs(shifted)))

    def test_theta1_prime_matches_central_difference(self):
        h = 1e-5
        difference = (jacobi_theta1(h, self.tau) - jacobi_theta1(-h, self.tau)) / (2 * h)
        self.assertLess(abs(jacobi_theta1_prime0(self.tau) - difference), 1e-8)

    def test_jacobi_derivative_identity(self):
        # theta_1'(0) = 2 pi eta^3
        for tau in (1j, 0.5 + 0.866j, 0.3 + 2.0j):
            with self.subTest(tau=tau):
                self.assertAlmostEqual(abs(jacobi_theta1_prime0(tau)), 2 * math.pi * abs(dedekind_eta(tau)) ** 3,
                                       delta=1e-12)


class DilogTests(SimpleTestCase):

    def test_matches_mpmath_polylog(self):
        for x in (-100.0, -5.0, -1.0, -0.3, 0.0, 0.5, 0.999, 1.0):
            with self.subTest(x=x):
                expected = float(mpmath.polylog(2, x))
                self.assertAlmostEqual(dilog(x), expected, delta=1e-13 * max(1.0, abs(expected)))

    def test_value_at_one(self):
        self.assertAlmostEqual(dilog(1.0), math.pi ** 2 / 6, delta=1e-15)

    def test_rejects_branch_cut(self):
        with self.assertRaises(DomainError):
            dilog(2.0)


class ConstantTests(SimpleTestCase):

    def test_euler_gamma(self):
        self.assertAlmostEqual(euler_gamma(), float(mpmath.euler), delta=1e-15)
