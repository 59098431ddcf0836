"""
Management command to estimate leaf mass profiles of invariant samples.
"""
from dynamics.management.base import ExperimentCommand, value_of


class Command(ExperimentCommand):
    help = 'Estimate the leaf mass profile of an invariant sample and diagnose finiteness'
    command_name = 'leafsim'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--kind',
            choices=['haar', 'central_orbit_closure', 'periodic_orbit'],
            default='central_orbit_closure',
        )
        parser.add_argument('--count', type=int, default=10**4, help='Sample size or period budget')
        parser.add_argument('--x', default=None, help='Leaf base point, comma separated (default: 0)')
        parser.add_argument(
            '--radii',
            type=float,
            nargs='+',
            default=[1.5, 3.0, 6.0, 12.0, 16.0],
            help='Increasing radii; the first one normalises the profile',
        )
        parser.add_argument('--tube-eps', type=float, default=None, help='Complement tolerance of the tubes')
        parser.add_argument('--profile-csv', default=None, help='Also write the profile as CSV')

    def build_params(self, options):
        return {
            'kind': options['kind'],
            'count': options['count'],
            'x': options['x'],
            'radii': options['radii'],
            'tube_eps': options['tube_eps'],
            'profile_csv': options['profile_csv'],
        }

    def write_summary(self, result):
        diagnostic = result['diagnostic']
        if diagnostic is None:
            self.stdout.write(self.style.WARNING('  too few radii for a finiteness verdict'))
            return
        self.stdout.write(
            f"  {diagnostic['verdict']} (exponent {value_of(diagnostic['exponent']):.3f})"
        )
