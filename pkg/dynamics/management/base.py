"""
Shared base for the experiment management commands.
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from dynamics.exceptions import ContractViolation
from dynamics.services.report_service import EXIT_OK, RunConfig, run

logger = logging.getLogger(__name__)


class ExperimentCommand(BaseCommand):
    """
    Subclasses set ``command_name``, add their own flags in
    ``add_command_arguments`` and map options to report parameters in
    ``build_params``.
    """
    command_name = None
    takes_input = True

    def add_arguments(self, parser):
        if self.takes_input:
            parser.add_argument(
                'input',
                nargs='?',
                default=None,
                help='Polynomial such as "u^4-u^3-u^2-u+1", a JSON object, or a .json file with {"matrix": ...}',
            )
            parser.add_argument('--poly', default=None, help='Polynomial text (alternative to the positional input)')
        parser.add_argument('--seed', type=int, default=0, help='Run seed (default: 0)')
        parser.add_argument('--precision-bits', type=int, default=None, help='Working precision for central frames')
        parser.add_argument('--point-budget', type=int, default=None, help='Cap on simulated points')
        parser.add_argument('--quadrature-points', type=int, default=None, help='Quadrature nodes')
        parser.add_argument('--trials', type=int, default=None, help='Samples for fitted constants')
        parser.add_argument('--output', default=None, help='Report path (default: report directory)')
        parser.add_argument('--format', choices=['json', 'csv'], default='json', help='Report format')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def build_params(self, options):
        return {}

    def handle(self, *args, **options):
        try:
            config = RunConfig(
                command=self.command_name,
                input=(options.get('poly') or options.get('input') or '') if self.takes_input else '',
                seed=options['seed'],
                precision_bits=options['precision_bits'],
                point_budget=options['point_budget'],
                quadrature_points=options['quadrature_points'],
                trials=options['trials'],
                output=options['output'],
                format=options['format'],
                params=self.build_params(options),
            )
        except ContractViolation as e:
            raise CommandError(str(e), returncode=2)

        result = run(config)
        if result.exit_code != EXIT_OK:
            raise CommandError(result.error, returncode=result.exit_code)

        self.stdout.write(self.style.SUCCESS(f'{self.command_name} report written to {result.output}'))
        self.write_summary(result.payload['result'])

    def write_summary(self, result):
        pass


def value_of(entry):
    """Unwrap a provenance-tagged value."""
    return entry['value'] if isinstance(entry, dict) and 'provenance' in entry else entry
