import csv
import json
import math
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from torus_trace.exceptions import EXIT_CONVERGENCE, EXIT_DOMAIN, EXIT_USAGE
from torus_trace.flat_trace import sphere_constant, ztilde_flat
from torus_trace.lattice import square_torus
from torus_trace.management.commands.sweep import COLUMNS
from torus_trace.result_cache import result_cache


def parse_table(text):
    """label/value lines of a command's text output"""
    rows = {}
    for line in text.strip().splitlines():
        label, _, value = line.strip().partition('  ')
        rows[label] = value.strip()
    return rows


class CommandTestCase(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_command(self, name, *args):
        out, err = StringIO(), StringIO()
        call_command(name, *args, stdout=out, stderr=err)
        return out.getvalue()

    def assertExitCode(self, code, name, *args):
        with self.assertRaises(CommandError) as ctx:
            self.run_command(name, *args)
        self.assertEqual(ctx.exception.returncode, code)

    def write_config(self, text):
        path = self.dir / 'tolerances.conf'
        path.write_text(text)
        return str(path)


class FlatCommandTests(CommandTestCase):

    def test_hexagonal_report(self):
        rows = parse_table(self.run_command('flat', '--hex'))
        self.assertEqual(rows['class'], 'fat')
        self.assertAlmostEqual(float(rows['ztilde1']), -0.22871, delta=5e-6)
        self.assertEqual(rows['shape'], 'hexagonal')

    def test_rect_is_skinny(self):
        rows = parse_table(self.run_command('flat', '--rect', '10'))
        self.assertEqual(rows['class'], 'skinny')
        self.assertAlmostEqual(float(rows['ztilde1']), -0.1378, delta=1e-4)

    def test_twelve_significant_digits(self):
        rows = parse_table(self.run_command('flat', '--square'))
        self.assertEqual(rows['ztilde1'], f"{ztilde_flat(square_torus()):.12g}")

    def test_json_output_and_manifest(self):
        target = self.dir / 'hex.json'
        self.run_command('flat', '--hex', '--json', str(target))
        payload = json.loads(target.read_text())
        self.assertAlmostEqual(payload['ztilde1'], -0.22871, delta=5e-6)
        self.assertEqual(payload['shape_class'], 'fat')
        manifest = json.loads((self.dir / 'hex.json.manifest.json').read_text())
        self.assertEqual(manifest['command'], 'flat')
        self.assertTrue(manifest['parameters']['hex'])
        self.assertEqual(manifest['tolerances']['OUTPUT_DIGITS'], 12)

    def test_usage_errors(self):
        self.assertExitCode(EXIT_USAGE, 'flat')
        self.assertExitCode(EXIT_USAGE, 'flat', '--tau', '0.1')
        self.assertExitCode(EXIT_USAGE, 'flat', '--tau', 'x', '1')

    def test_domain_errors(self):
        self.assertExitCode(EXIT_DOMAIN, 'flat', '--tau', '0', '-1')
        self.assertExitCode(EXIT_DOMAIN, 'flat', '--rect', '-2')

    def test_config_file(self):
        config = self.write_config("output_digits = 4\n")
        rows = parse_table(self.run_command('flat', '--hex', '--config', config))
        self.assertEqual(rows['ztilde1'], '-0.2287')

    def test_bad_config_file(self):
        self.assertExitCode(EXIT_USAGE, 'flat', '--hex', '--config', self.write_config("NOT_A_KEY = 1\n"))
        self.assertExitCode(EXIT_USAGE, 'flat', '--hex', '--config', self.write_config("OUTPUT_DIGITS = many\n"))
        self.assertExitCode(EXIT_USAGE, 'flat', '--hex', '--config', str(self.dir / 'missing.conf'))

    def test_classify_tolerance_from_config(self):
        near_threshold = str(math.pi ** 2 / 2.0 * (1.0 + 1e-6))
        rows = parse_table(self.run_command('flat', '--rect', near_threshold))
        self.assertEqual(rows['class'], 'skinny')
        config = self.write_config("CLASSIFY_TOL = 1.0\n")
        rows = parse_table(self.run_command('flat', '--rect', near_threshold, '--config', config))
        self.assertEqual(rows['class'], 'borderline')


class SweepCommandTests(CommandTestCase):

    def sweep(self, target, *extra):
        return self.run_command('sweep', '--a-min', '2', '--a-max', '4', '--steps', '3', '--out', str(target),
                                '--n', '4096', *extra)

    def test_csv_contract(self):
        target = self.dir / 'sweep.csv'
        self.sweep(target)
        with open(target, newline='') as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(tuple(rows[0]), COLUMNS)
        self.assertEqual(len(rows), 4)
        records = [dict(zip(COLUMNS, map(float, row))) for row in rows[1:]]
        self.assertEqual([record['a'] for record in records], [2.0, 3.0, 4.0])
        for record in records:
            self.assertEqual(record['sphere_constant'], sphere_constant())
            self.assertAlmostEqual(record['ztilde_bubble'], record['ztilde_flat'] + record['F_phi'], delta=1e-15)
            self.assertAlmostEqual(record['gap'], record['ztilde_bubble'] - record['sphere_constant'], delta=1e-15)
            self.assertLess(record['gap'], 0.0)

    def test_output_is_byte_stable(self):
        first, second = self.dir / 'first.csv', self.dir / 'second.csv'
        self.sweep(first, '--workers', '1')
        self.sweep(second, '--workers', '3')
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_manifest(self):
        target = self.dir / 'sweep.csv'
        self.sweep(target)
        manifest = json.loads((self.dir / 'sweep.csv.manifest.json').read_text())
        self.assertEqual(manifest['command'], 'sweep')
        self.assertEqual(manifest['parameters']['steps'], 3)
        self.assertIn('library_version', manifest)
        self.assertIn('POTENTIAL_RESIDUAL_TOL', manifest['tolerances'])

    def test_errors(self):
        self.assertExitCode(EXIT_USAGE, 'sweep', '--a-min', '4', '--a-max', '2', '--steps', '3',
                            '--out', str(self.dir / 'x.csv'))
        self.assertExitCode(EXIT_DOMAIN, 'sweep', '--a-min', '2', '--a-max', '4', '--steps', '3',
                            '--out', str(self.dir / 'missing' / 'x.csv'), '--n', '4096')


class ConformalCommandTests(CommandTestCase):

    def test_bubble(self):
        rows = parse_table(self.run_command('bubble', '--a', '5'))
        self.assertLess(float(rows['gap']), 0.0)
        self.assertAlmostEqual(float(rows['gap']), -math.pi / 240.0, delta=5e-4)
        self.assertLessEqual(float(rows['potential_residual']), 1e-6)

    def test_smoothed_bubble(self):
        rows = parse_table(self.run_command('bubble', '--a', '5', '--smooth', '0.5'))
        self.assertEqual(rows['factor'], 'smoothed_bubble(a=5, width=0.5)')

    def test_residual_guard_exits_with_convergence_code(self):
        config = self.write_config("POTENTIAL_RESIDUAL_TOL = 1e-12\n")
        self.assertExitCode(EXIT_CONVERGENCE, 'bubble', '--a', '5', '--config', config)

    def test_variation(self):
        rows = parse_table(self.run_command('variation', '--a', '10', '--mode', '1'))
        self.assertEqual(rows['minimum'], 'False')
        self.assertEqual(rows['class'], 'skinny')
        self.assertAlmostEqual(float(rows['second_variation']), float(rows['closed_form']), delta=1e-10)
        self.assertAlmostEqual(float(rows['finite_difference']), float(rows['closed_form']), delta=1e-4)

    def test_variation_square_rectangle_is_a_minimum(self):
        rows = parse_table(self.run_command('variation', '--a', str(math.pi), '--mode', '3'))
        self.assertEqual(rows['minimum'], 'True')

    def test_variation_rejects_zero_step(self):
        self.assertExitCode(EXIT_USAGE, 'variation', '--a', '10', '--mode', '1', '--lam', '0')

    def test_variation_classify_tolerance_from_config(self):
        config = self.write_config("CLASSIFY_TOL = 1.0\n")
        rows = parse_table(self.run_command('variation', '--a', '5', '--mode', '1', '--config', config))
        self.assertEqual(rows['class'], 'borderline')


class GreensCommandTests(CommandTestCase):

    def test_green(self):
        rows = parse_table(self.run_command('green', '--tau', '0', '1', '--x', '0', '0', '--y', '0.3', '0.1'))
        self.assertAlmostEqual(float(rows['G']), float(rows['log_part']) + float(rows['H']), delta=1e-11)
        self.assertAlmostEqual(float(rows['distance']), math.hypot(0.3, 0.1), delta=1e-12)

    def test_green_coincident_points(self):
        self.assertExitCode(EXIT_DOMAIN, 'green', '--tau', '0', '1', '--x', '0.2', '0.2', '--y', '0.2', '0.2')

    def test_green_spectral_cross_check(self):
        rows = parse_table(self.run_command('green', '--tau', '0.2', '1.1', '--x', '0', '0', '--y', '0.3', '0.1',
                                            '--spectral'))
        self.assertAlmostEqual(float(rows['G_spectral']), float(rows['G']), delta=1e-6)
        self.assertLessEqual(abs(float(rows['spectral_gap'])), 1e-6)
        self.assertNotIn('G_spectral', parse_table(self.run_command(
            'green', '--tau', '0', '1', '--x', '0', '0', '--y', '0.3', '0.1')))

    def test_green_spectral_time_from_config(self):
        config = self.write_config("GREENS_SPECTRAL_TIME = 0\n")
        self.assertExitCode(EXIT_DOMAIN, 'green', '--tau', '0', '1', '--x', '0', '0', '--y', '0.3', '0.1',
                            '--spectral', '--config', config)

    def test_green_eigenvalue_limit_from_config(self):
        config = self.write_config("EIGENVALUE_COUNT_LIMIT = 10\n")
        self.assertExitCode(EXIT_CONVERGENCE, 'green', '--tau', '0', '1', '--x', '0', '0', '--y', '0.3', '0.1',
                            '--spectral', '--config', config)

    def test_mass(self):
        rows = parse_table(self.run_command('mass', '--tau', '0.5', str(math.sqrt(3) / 2), '--points', '8'))
        self.assertEqual(rows['points'], '8')
        self.assertLessEqual(float(rows['mass_spread']), 1e-12)
        self.assertLessEqual(abs(float(rows['mass_trace_residual'])), 1e-6)

    def test_twist(self):
        output = self.run_command('twist', '--y', '1.2', '--x-list', '0', '0.25', '0.5')
        self.assertIn('monotone  True', output)

    def test_twist_domain(self):
        self.assertExitCode(EXIT_DOMAIN, 'twist', '--y', '0.5', '--x-list', '0.1')


class MonteCarloCommandTests(CommandTestCase):

    def setUp(self):
        super().setUp()
        result_cache.clear()

    def test_hitting_time(self):
        rows = parse_table(self.run_command('mc', '--tau', '0', '1', '--eps', '0.2', '--trials', '100',
                                            '--seed', '1'))
        self.assertEqual(rows['trials'], '100')
        self.assertGreater(float(rows['mean_hitting_time']), 0.0)
        self.assertNotIn('trace_estimate', rows)

    def test_calibrated_square_returns_its_trace(self):
        target = self.dir / 'mc.json'
        self.run_command('mc', '--tau', '0', '1', '--eps', '0.2', '--trials', '100', '--calibrate',
                         '--json', str(target))
        payload = json.loads(target.read_text())
        self.assertAlmostEqual(payload['trace']['value'], -0.2270288670, delta=1e-9)

    def test_invalid_configuration(self):
        self.assertExitCode(EXIT_USAGE, 'mc', '--tau', '0', '1', '--eps', '0.2', '--trials', '10')
        self.assertExitCode(EXIT_USAGE, 'mc', '--tau', '0', '1', '--eps', '0.2', '--trials', '100', '--dt', '0.1')
        self.assertExitCode(EXIT_USAGE, 'mc', '--tau', '0', '1', '--trials', '100')

    def test_time_limit_exits_with_convergence_code(self):
        config = self.write_config("MC_MAX_TIME = 0.001\n")
        self.assertExitCode(EXIT_CONVERGENCE, 'mc', '--tau', '0', '1', '--eps', '0.01', '--trials', '100',
                            '--config', config)

    def test_step_fraction_from_config(self):
        args = ('mc', '--tau', '0', '1', '--eps', '0.2', '--trials', '100', '--seed', '3')
        default = parse_table(self.run_command(*args))
        config = self.write_config("MC_STEP_FRACTION = 0.05\n")
        finer = parse_table(self.run_command(*args, '--config', config))
        self.assertNotEqual(default['mean_hitting_time'], finer['mean_hitting_time'])
        self.assertExitCode(EXIT_USAGE, *args, '--config', self.write_config("MC_STEP_FRACTION = 0.5\n"))
