"""
Shared plumbing for the torus_trace management commands: --json and --config,
serializer validation, exit codes and 12-digit output.
"""
import logging
import sys
from typing import Any, Dict, Iterable, Optional, Tuple

from django.core.management.base import BaseCommand, CommandError, CommandParser

from ..conf import load_config_file, setting
from ..exceptions import EXIT_USAGE, TorusTraceError, exit_code_for
from ..lattice import hexagonal_torus, make_rect_torus, make_torus, square_torus
from ..reporting import RunManifest, format_columns, format_table, write_json
from ..specfun import SeriesConfig

logger = logging.getLogger(__name__)


class UsageParser(CommandParser):
    """Parse errors exit with the usage code instead of argparse's 2"""

    def error(self, message):
        if self.called_from_command_line:
            self.print_usage(sys.stderr)
            self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")
        raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)


class TorusTraceCommand(BaseCommand):
    """
    Subclasses implement ``add_command_arguments`` and ``run``. ``run`` returns
    the JSON payload; text goes through ``emit``.
    """
    input_serializer = None

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.__class__ = UsageParser
        self._usage = parser.format_usage()
        return parser

    def add_arguments(self, parser):
        parser.add_argument('--json', metavar='PATH', help='Also write the result as JSON')
        parser.add_argument('--config', metavar='PATH', help='key = value tolerance overrides')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def run(self, data: Dict[str, Any]) -> Any:
        raise NotImplementedError

    def handle(self, *args, **options):
        self.overrides = {}
        try:
            if options.get('config'):
                self.overrides = load_config_file(options['config'])
            data = self.validate(options)
            self.digits = self.tolerance('OUTPUT_DIGITS')
            payload = self.run(data)
            if options.get('json'):
                write_json(options['json'], payload, self.manifest(data))
        except TorusTraceError as exc:
            raise CommandError(exc.message, returncode=exit_code_for(exc, command=self.command_name))

    @property
    def command_name(self) -> str:
        return self.__module__.rsplit('.', 1)[-1]

    def validate(self, options: Dict[str, Any]) -> Dict[str, Any]:
        if self.input_serializer is None:
            return options
        fields = self.input_serializer().fields
        serializer = self.input_serializer(data={k: v for k, v in options.items() if k in fields})
        if not serializer.is_valid():
            self.stderr.write(getattr(self, '_usage', ''))
            logger.info(f"Rejected input for {self.command_name}", extra={'errors': serializer.errors})
            raise CommandError(f"Invalid input: {dict(serializer.errors)}", returncode=EXIT_USAGE)
        return dict(serializer.validated_data)

    def tolerance(self, name: str):
        return setting(name, self.overrides)

    def series_config(self) -> SeriesConfig:
        return SeriesConfig.from_options(
            abs_tol=self.tolerance('SERIES_ABS_TOL'),
            max_terms=self.tolerance('SERIES_MAX_TERMS'),
        )

    def manifest(self, data: Dict[str, Any]) -> RunManifest:
        parameters = {key: value for key, value in data.items() if key not in ('shape_source',)}
        return RunManifest.build(self.command_name, parameters, self.overrides)

    def emit(self, rows: Iterable[Tuple[str, Any]]):
        for line in format_table(rows, self.digits):
            self.stdout.write(line)

    def emit_columns(self, columns, rows):
        for line in format_columns(columns, rows, self.digits):
            self.stdout.write(line)


def shape_from(data: Dict[str, Any]):
    """TorusShape named by a validated ModulusInputSerializer or McInputSerializer"""
    source = data.get('shape_source', 'tau')
    if source == 'tau':
        return make_torus(*data['tau'])
    if source == 'rect':
        return make_rect_torus(data['rect'])
    if source == 'hex':
        return hexagonal_torus()
    return square_torus()


def quadrature_options(command: TorusTraceCommand, n: Optional[int] = None) -> Dict[str, Any]:
    return {
        'n': n or command.tolerance('QUADRATURE_PANELS'),
        'rule': command.tolerance('QUADRATURE_RULE'),
        'rel_tol': command.tolerance('QUADRATURE_REL_TOL'),
        'residual_tol': command.tolerance('POTENTIAL_RESIDUAL_TOL'),
        'area_tol': command.tolerance('AREA_TOL'),
    }
