"""
Management command to evaluate the map tau on synthetic leaf-measure fixtures.
"""
from dynamics.management.base import ExperimentCommand, value_of


class Command(ExperimentCommand):
    help = 'Evaluate tau(x) = x + pi(center of mass of rho_x) along leaf translates'
    command_name = 'tau'

    def add_command_arguments(self, parser):
        parser.add_argument('--count', type=int, default=16, help='Base points (default: 16)')
        parser.add_argument('--translates', type=int, default=8, help='Leaf translates per base point')
        parser.add_argument('--atoms', type=int, default=5, help='Atoms per leaf measure')
        parser.add_argument('--radius', type=float, default=1.0, help='Center-of-mass ball radius')
        parser.add_argument('--rule', choices=['relative', 'reciprocal', 'moment'], default='relative')

    def build_params(self, options):
        return {
            'count': options['count'],
            'translates': options['translates'],
            'atoms': options['atoms'],
            'radius': options['radius'],
            'rule': options['rule'],
        }

    def write_summary(self, result):
        self.stdout.write(f"  max spread along leaves {value_of(result['max_spread']):.3e}")
