import math

from ...conformal import (QuadratureConfig, conformal_change_functional, first_variation, longitudinal_mode,
                          second_variation, variation_factor)
from ...lattice import classify, make_rect_torus
from ...serializers import VariationInputSerializer
from ..base import TorusTraceCommand, quadrature_options


def finite_difference(a: float, psi, lam: float, cfg: QuadratureConfig) -> float:
    """(F[lam psi] - 2 F[0] + F[-lam psi]) / lam^2 with F[0] = 0"""
    plus = conformal_change_functional(variation_factor(a, psi, lam), cfg)
    minus = conformal_change_functional(variation_factor(a, psi, -lam), cfg)
    return (plus + minus) / (lam * lam)


class Command(TorusTraceCommand):
    help = 'First and second variation of the trace along a longitudinal mode'
    input_serializer = VariationInputSerializer

    def add_command_arguments(self, parser):
        parser.add_argument('--a', type=float, required=True)
        parser.add_argument('--mode', type=int, required=True, metavar='K')
        parser.add_argument('--lam', type=float, default=1e-3)
        parser.add_argument('--n', type=int, help='Quadrature panels')

    def run(self, data):
        a, lam = data['a'], data['lam']
        cfg = QuadratureConfig.from_options(**quadrature_options(self, data.get('n')))
        shape = make_rect_torus(a)
        psi, eigenvalue = longitudinal_mode(a, data['mode'])

        second = second_variation(shape, psi, cfg)
        result = {
            'a': a,
            'mode': data['mode'],
            'eigenvalue': eigenvalue,
            'class': classify(shape, self.tolerance('CLASSIFY_TOL')).value,
            'first_variation': first_variation(shape, psi, cfg),
            'second_variation': second,
            'closed_form': 1.0 / (4.0 * math.pi) - 2.0 / eigenvalue,
            'finite_difference': finite_difference(a, psi, lam, cfg),
            'minimum': second > 0,
        }
        self.emit(result.items())
        return result
