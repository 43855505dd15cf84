from ...greens import greens_flat, greens_spectral_sum, robin_mass
from ...lattice import make_torus
from ...serializers import GreenInputSerializer, GreensEvalSerializer
from ..base import TorusTraceCommand


class Command(TorusTraceCommand):
    help = "Green's function G(x, y) of a flat torus and its split -(1/2pi) log d + H"
    input_serializer = GreenInputSerializer

    def add_command_arguments(self, parser):
        parser.add_argument('--tau', nargs=2, type=float, required=True, metavar=('RE', 'IM'))
        parser.add_argument('--x', nargs=2, type=float, required=True, metavar=('X1', 'X2'))
        parser.add_argument('--y', nargs=2, type=float, required=True, metavar=('Y1', 'Y2'))
        parser.add_argument('--spectral', action='store_true',
                            help='Cross-check G against the heat-smoothed eigenfunction sum')

    def run(self, data):
        shape = make_torus(*data['tau'])
        cfg = self.series_config()
        evaluation = greens_flat(shape, data['x'], data['y'], cfg)
        mass = robin_mass(shape, cfg=cfg)
        rows = [
            ('G', evaluation.g),
            ('log_part', evaluation.log_part),
            ('H', evaluation.h),
            ('distance', evaluation.dist),
            ('robin_mass', mass),
        ]
        payload = {**GreensEvalSerializer(evaluation).data, 'robin_mass': mass}

        if data.get('spectral'):
            spectral = greens_spectral_sum(
                shape, data['x'], data['y'],
                smoothing_time=self.tolerance('GREENS_SPECTRAL_TIME'),
                count_limit=self.tolerance('EIGENVALUE_COUNT_LIMIT'),
            )
            rows += [('G_spectral', spectral), ('spectral_gap', spectral - evaluation.g)]
            payload.update(G_spectral=spectral, spectral_gap=spectral - evaluation.g)
        self.emit(rows)
        return payload
