from ...flat_trace import spectral_report
from ...serializers import ModulusInputSerializer, SpectralReportSerializer
from ..base import TorusTraceCommand, shape_from


class Command(TorusTraceCommand):
    help = 'Spectral report of a flat unit-area torus: lambda_1, class, regularized trace, log det'
    input_serializer = ModulusInputSerializer

    def add_command_arguments(self, parser):
        group = parser.add_mutually_exclusive_group()
        group.add_argument('--tau', nargs=2, type=float, metavar=('RE', 'IM'), help='Modulus tau = RE + i IM')
        group.add_argument('--rect', type=float, metavar='A', help='Rectangle [-a,a] x [0,2pi]')
        group.add_argument('--hex', action='store_true', help='Hexagonal torus')
        group.add_argument('--square', action='store_true', help='Square torus')

    def run(self, data):
        shape = shape_from(data)
        report = spectral_report(shape, self.series_config(), self.tolerance('CLASSIFY_TOL'))
        self.emit([
            ('shape', shape.describe()),
            ('lambda1', report.lambda1),
            ('class', report.shape_class.value),
            ('ztilde1', report.ztilde1),
            ('logdet', report.logdet),
            ('tau', f"{report.modulus.re:.{self.digits}g} {report.modulus.im:.{self.digits}g}"),
            ('tau_reduced', f"{report.reduced_modulus.re:.{self.digits}g} {report.reduced_modulus.im:.{self.digits}g}"),
        ])
        return SpectralReportSerializer(report).data
