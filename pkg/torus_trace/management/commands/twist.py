from ...flat_trace import twist_comparison
from ...serializers import TwistInputSerializer, TwistTableSerializer
from ..base import TorusTraceCommand


class Command(TorusTraceCommand):
    help = 'Regularized trace of x + iy against the untwisted torus iy'
    input_serializer = TwistInputSerializer

    def add_command_arguments(self, parser):
        parser.add_argument('--y', type=float, required=True)
        parser.add_argument('--x-list', nargs='+', type=float, required=True, metavar='X')

    def run(self, data):
        table = twist_comparison(data['y'], data['x_list'], self.series_config())
        rows = [{'x': row.x, 'ztilde': row.ztilde, 'gap': row.gap, 'decreased': row.decreased}
                for row in table.rows]
        self.emit_columns(('x', 'ztilde', 'gap', 'decreased'), rows)
        self.emit([('monotone', table.monotone)])
        return TwistTableSerializer(table).data
