"""
Management command to build and export the central frame of a polynomial.
"""
from dynamics.management.base import ExperimentCommand, value_of


class Command(ExperimentCommand):
    help = 'Build the central frame (unit-circle places, W0 basis, projections) of an ergodic unit polynomial'
    command_name = 'frame'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--samples',
            type=int,
            default=1000,
            help='Random central vectors for the isometry and round-trip checks (default: 1000)',
        )

    def build_params(self, options):
        return {'samples': options['samples']}

    def write_summary(self, result):
        self.stdout.write(f"  s = {value_of(result['s'])}, precision {value_of(result['precision_bits'])} bits")
        self.stdout.write(f"  isometry error {value_of(result['isometry_error']):.3e}")
        self.stdout.write(f"  round-trip error {value_of(result['roundtrip_error']):.3e}")
