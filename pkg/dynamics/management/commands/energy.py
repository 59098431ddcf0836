"""
Management command for the character energy estimate and Cesaro averages.
"""
from dynamics.management.base import ExperimentCommand, value_of


class Command(ExperimentCommand):
    help = 'Energy integral, Gamma-averaged character energy and Cesaro averages over a separated set'
    command_name = 'energy'

    def add_command_arguments(self, parser):
        parser.add_argument('--a', default=None, help='Character, comma separated (default: 1,0,...,0)')
        parser.add_argument('--R', type=float, default=10.0, help='Separation (default: 10)')
        parser.add_argument('--K', type=int, default=100, help='Number of points (default: 100)')
        parser.add_argument('--N', type=int, default=10**5, help='Cesaro length (default: 100000)')
        parser.add_argument('--x0', default=None, help='Base point, comma separated')
        parser.add_argument('--strategy', choices=['grid', 'greedy-random'], default='grid')

    def build_params(self, options):
        return {
            'a': options['a'],
            'R': options['R'],
            'K': options['K'],
            'N': options['N'],
            'x0': options['x0'],
            'strategy': options['strategy'],
        }

    def write_summary(self, result):
        self.stdout.write(f"  energy {value_of(result['energy_integral']):.6f} <= {value_of(result['energy_bound']):.6f}")
        self.stdout.write(
            f"  limsup proxy {value_of(result['limsup_proxy']):.3e} vs bound {value_of(result['limsup_bound']):.3e}"
        )
