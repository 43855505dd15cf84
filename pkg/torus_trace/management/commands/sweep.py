from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ...conformal import QuadratureConfig, bubble_factor, conformal_change_functional
from ...flat_trace import sphere_constant, ztilde_flat
from ...lattice import make_rect_torus
from ...reporting import write_csv
from ...serializers import SweepInputSerializer, SweepRowSerializer
from ..base import TorusTraceCommand, quadrature_options

COLUMNS = ('a', 'ztilde_flat', 'F_phi', 'ztilde_bubble', 'sphere_constant', 'gap')


def sweep_row(a: float, cfg: QuadratureConfig, series_cfg) -> dict:
    flat = ztilde_flat(make_rect_torus(a), series_cfg)
    functional = conformal_change_functional(bubble_factor(a), cfg)
    bubbled = flat + functional
    sphere = sphere_constant()
    return {
        'a': a,
        'ztilde_flat': flat,
        'F_phi': functional,
        'ztilde_bubble': bubbled,
        'sphere_constant': sphere,
        'gap': bubbled - sphere,
    }


class Command(TorusTraceCommand):
    help = 'Bubbled trace of skinny rectangles over a range of a, written as CSV'
    input_serializer = SweepInputSerializer

    def add_command_arguments(self, parser):
        parser.add_argument('--a-min', type=float, required=True)
        parser.add_argument('--a-max', type=float, required=True)
        parser.add_argument('--steps', type=int, required=True)
        parser.add_argument('--out', required=True, metavar='FILE.csv')
        parser.add_argument('--workers', type=int)
        parser.add_argument('--n', type=int, help='Quadrature panels')

    def run(self, data):
        cfg = QuadratureConfig.from_options(**quadrature_options(self, data.get('n')))
        series_cfg = self.series_config()
        a_values = [float(a) for a in np.linspace(data['a_min'], data['a_max'], data['steps'])]
        workers = data.get('workers') or self.tolerance('WORKERS')

        # rows come back in input order
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda a: sweep_row(a, cfg, series_cfg), a_values))

        write_csv(data['out'], COLUMNS, rows, self.manifest(data))
        self.emit_columns(COLUMNS, rows)
        return SweepRowSerializer(rows, many=True).data
