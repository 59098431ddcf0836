"""
Management command to run the epsilon-density experiment for inverse-orbit
unions of separated central sets.
"""
from dynamics.management.base import ExperimentCommand, value_of


class Command(ExperimentCommand):
    help = 'Check epsilon-density of truncated inverse-orbit unions of an R-separated central set'
    command_name = 'density'

    def add_command_arguments(self, parser):
        parser.add_argument('--eps', type=float, default=0.25, help='Density radius in (0, 1/2) (default: 0.25)')
        parser.add_argument('--n-max', type=int, default=2**14, help='Largest N tried (default: 16384)')
        parser.add_argument(
            '--mode',
            choices=['practical', 'lemma'],
            default='practical',
            help='practical: use --R and --K; lemma: derive them from the Fourier recipe',
        )
        parser.add_argument('--R', type=float, default=5.0, help='Separation in practical mode (default: 5)')
        parser.add_argument('--K', type=int, default=100, help='Set size in practical mode (default: 100)')
        parser.add_argument('--x0', default=None, help='Base point, comma separated, e.g. "1/3,0,0,0"')
        parser.add_argument('--strategy', choices=['grid', 'greedy-random'], default='grid')
        parser.add_argument('--head', type=int, default=1, help='Fit c_a for |a_i| <= head (default: 1)')
        parser.add_argument('--with-lemma', action='store_true', help='Also report the lemma (R, K) in practical mode')
        parser.add_argument('--points-csv', default=None, help='Dump the final point cloud as CSV')

    def build_params(self, options):
        return {
            'eps': options['eps'],
            'n_max': options['n_max'],
            'mode': options['mode'],
            'R': options['R'],
            'K': options['K'],
            'x0': options['x0'],
            'strategy': options['strategy'],
            'head': options['head'],
            'with_lemma': options['with_lemma'],
            'points_csv': options['points_csv'],
        }

    def write_summary(self, result):
        verdict = 'dense' if result['dense'] else 'not dense'
        self.stdout.write(
            f"  {verdict} at N = {value_of(result['N_used'])} "
            f"(worst gap {value_of(result['worst_gap']):.6f}, R = {value_of(result['R'])}, K = {value_of(result['K'])})"
        )
