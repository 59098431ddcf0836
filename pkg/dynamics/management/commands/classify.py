"""
Management command to classify an integer polynomial or matrix.
"""
from dynamics.management.base import ExperimentCommand, value_of


class Command(ExperimentCommand):
    help = 'Classify the automorphism defined by an integer polynomial or matrix'
    command_name = 'classify'

    def write_summary(self, result):
        flags = ['irreducible', 'ergodic', 'expansive', 'totally_irreducible', 'algebraic_unit']
        self.stdout.write(f"  {result['input']['text']}")
        for flag in flags:
            self.stdout.write(f'  {flag}: {value_of(result[flag])}')
        self.stdout.write(f"  s0_count: {value_of(result['s0_count'])}")
        for note in result['notes']:
            self.stdout.write(self.style.WARNING(f'  note: {note}'))
