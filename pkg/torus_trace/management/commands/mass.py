import numpy as np

from ...flat_trace import ztilde_flat
from ...greens import mass_trace_check, robin_mass_field
from ...lattice import make_torus
from ...serializers import MassInputSerializer
from ..base import TorusTraceCommand

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def sample_points(shape, count: int) -> np.ndarray:
    """Deterministic points k/K omega_1 + frac(k g) omega_2 spread over the torus"""
    k = np.arange(count)
    coeffs = np.stack([k / count, np.mod(k * GOLDEN, 1.0)], axis=-1)
    return coeffs @ shape.basis


class Command(TorusTraceCommand):
    help = "Robin's mass over sample points and the mass/trace identity"
    input_serializer = MassInputSerializer

    def add_command_arguments(self, parser):
        parser.add_argument('--tau', nargs=2, type=float, required=True, metavar=('RE', 'IM'))
        parser.add_argument('--points', type=int, default=16, metavar='K')

    def run(self, data):
        shape = make_torus(*data['tau'])
        cfg = self.series_config()
        field = robin_mass_field(shape, sample_points(shape, data['points']), cfg)
        result = {
            'points': int(field.mass.size),
            'mass_min': float(np.min(field.mass)),
            'mass_max': float(np.max(field.mass)),
            'mass_spread': field.spread,
            'ztilde1': ztilde_flat(shape, cfg),
            'mass_trace_residual': mass_trace_check(shape, cfg),
        }
        self.emit(result.items())
        return result
