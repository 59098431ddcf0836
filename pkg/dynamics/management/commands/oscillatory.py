"""
Management command to fit the oscillatory-integral constant c_2.
"""
from dynamics.management.base import ExperimentCommand, value_of


class Command(ExperimentCommand):
    help = 'Fit c_2 with |int exp(i p)| <= c_2 ||p||^(-1/2s) over random trigonometric polynomials'
    command_name = 'oscillatory'
    takes_input = False

    def add_command_arguments(self, parser):
        parser.add_argument('--s', type=int, default=1, help='Number of terms (default: 1)')
        parser.add_argument('--M', type=int, default=1, help='Largest frequency (default: 1)')
        parser.add_argument('--bessel', type=float, default=None, help='Also integrate exp(i a cos 2 pi t) for this a')
        parser.add_argument('--A-s', action='store_true', dest='A_s', help='Also estimate the polynomial constant A_s')
        parser.add_argument('--A-s-grid', type=int, default=4, dest='A_s_grid', help='Coefficient grid for A_s')

    def build_params(self, options):
        return {
            's': options['s'],
            'M': options['M'],
            'bessel': options['bessel'],
            'A_s': options['A_s'],
            'A_s_grid': options['A_s_grid'],
        }

    def write_summary(self, result):
        self.stdout.write(f"  c_2(s={value_of(result['s'])}, M={value_of(result['M'])}) = {value_of(result['c2']):.6f}")
        self.stdout.write(f"  top-decade slope {value_of(result['top_decade_slope']):.4f}")
