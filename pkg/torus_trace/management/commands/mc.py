from ...flat_trace import ztilde_flat
from ...hideseek import McConfig, green_prediction, simulate_hitting, trace_estimate
from ...serializers import HitTimeEstimateSerializer, McInputSerializer, TraceEstimateSerializer
from ..base import TorusTraceCommand, shape_from


class Command(TorusTraceCommand):
    help = 'Monte Carlo hide-and-seek hitting time, optionally turned into a trace estimate'
    input_serializer = McInputSerializer

    def add_command_arguments(self, parser):
        group = parser.add_mutually_exclusive_group()
        group.add_argument('--tau', nargs=2, type=float, metavar=('RE', 'IM'))
        group.add_argument('--rect', type=float, metavar='A')
        parser.add_argument('--eps', type=float, required=True, help='Target ball radius')
        parser.add_argument('--trials', type=int, required=True)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--dt', type=float, help='Time step, at most eps^2/10')
        parser.add_argument('--calibrate', action='store_true',
                            help='Calibrate on the square torus and report the trace estimate')

    def run(self, data):
        shape = shape_from(data)
        cfg = McConfig.from_options(
            epsilon=data['eps'],
            n_trials=data['trials'],
            seed=data['seed'],
            step_dt=data.get('dt') or self.tolerance('MC_STEP_FRACTION') * data['eps'] ** 2,
            block_size=self.tolerance('MC_BLOCK_SIZE'),
            max_time=self.tolerance('MC_MAX_TIME'),
            workers=self.tolerance('WORKERS'),
        )
        estimate = simulate_hitting(shape, cfg)
        rows = [
            ('shape', shape.describe()),
            ('mean_hitting_time', estimate.mean),
            ('std_err', estimate.std_err),
            ('trials', estimate.n),
            ('green_prediction', green_prediction(shape, cfg.epsilon)),
        ]
        payload = {'hitting_time': HitTimeEstimateSerializer(estimate).data}

        if data.get('calibrate'):
            trace = trace_estimate(shape, cfg, estimate)
            rows += [
                ('offset', trace.offset),
                ('trace_estimate', trace.value),
                ('trace_std_err', trace.std_err),
                ('ztilde_flat', ztilde_flat(shape, self.series_config())),
            ]
            payload['trace'] = TraceEstimateSerializer(trace).data
        self.emit(rows)
        return payload
