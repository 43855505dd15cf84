from ...conformal import (QuadratureConfig, bubble_factor, conformal_change_functional, functional_richardson,
                          smoothed_bubble, solve_potential)
from ...flat_trace import sphere_constant, ztilde_flat
from ...lattice import make_rect_torus
from ...serializers import BubbleInputSerializer
from ..base import TorusTraceCommand, quadrature_options


class Command(TorusTraceCommand):
    help = 'Blow a bubble in the rectangle torus of parameter a and compare with the round sphere'
    input_serializer = BubbleInputSerializer

    def add_command_arguments(self, parser):
        parser.add_argument('--a', type=float, required=True)
        parser.add_argument('--smooth', type=float, metavar='WIDTH', help='Smooth the seam over this width')
        parser.add_argument('--n', type=int, help='Quadrature panels')

    def run(self, data):
        a = data['a']
        cfg = QuadratureConfig.from_options(**quadrature_options(self, data.get('n')))
        factor = smoothed_bubble(a, data['smooth']) if data.get('smooth') is not None else bubble_factor(a)

        potential = solve_potential(factor, cfg)
        functional = conformal_change_functional(factor, cfg)
        richardson = functional_richardson(factor, cfg)
        flat = ztilde_flat(make_rect_torus(a), self.series_config())
        sphere = sphere_constant()
        result = {
            'a': a,
            'factor': factor.describe(),
            'F_phi': functional,
            'ztilde_bubble': flat + functional,
            'ztilde_flat': flat,
            'sphere_constant': sphere,
            'gap': flat + functional - sphere,
            'potential_residual': potential.residual,
            'potential_relative_residual': potential.relative_residual,
            'richardson_value': richardson.value,
            'richardson_error': richardson.error,
        }
        self.emit(result.items())
        return result
