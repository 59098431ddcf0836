from django.db import models
from django.utils import timezone


class FittedConstant(models.Model):
    """
    Empirically fitted constant (c_2, c_a or A_s), keyed by everything that
    determines its value so that reruns with the same seed reuse it.
    """
    KIND_CHOICES = [
        ('c2', 'Oscillatory constant c_2'),
        ('ca', 'Character constant c_a'),
        ('A_s', 'Polynomial sup constant A_s'),
    ]

    kind = models.CharField(max_length=8, choices=KIND_CHOICES, db_index=True)
    # Canonical coefficient key, e.g. "1,-1,-1,-1,1"; empty for c_2 and A_s
    polynomial = models.CharField(max_length=512, blank=True, default='')
    # Character vector for c_a, (s, M) for c_2, (s, grid) for A_s
    character = models.CharField(max_length=256, blank=True, default='')
    seed = models.BigIntegerField(default=0)
    samples = models.IntegerField()
    value = models.FloatField()
    created_at = models.DateTimeField(default=timezone.now)

    class Meta:
        unique_together = ('kind', 'polynomial', 'character', 'seed', 'samples')
        indexes = [
            models.Index(fields=['kind', 'polynomial'], name='dynamics_fi_kind_poly_idx'),
        ]
        ordering = ['kind', 'polynomial', 'character']

    def __str__(self):
        return f"{self.kind}[{self.polynomial}|{self.character}|seed={self.seed}|n={self.samples}]={self.value:.6g}"

    def as_key(self):
        return {
            'kind': self.kind,
            'f': self.polynomial,
            'a': self.character,
            'seed': self.seed,
            'samples': self.samples,
        }
