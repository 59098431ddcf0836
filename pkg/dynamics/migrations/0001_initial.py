# Generated manually for the FittedConstant model

from django.db import migrations, models
import django.utils.timezone


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='FittedConstant',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('c2', 'Oscillatory constant c_2'), ('ca', 'Character constant c_a'), ('A_s', 'Polynomial sup constant A_s')], db_index=True, max_length=8)),
                ('polynomial', models.CharField(blank=True, default='', max_length=512)),
                ('character', models.CharField(blank=True, default='', max_length=256)),
                ('seed', models.BigIntegerField(default=0)),
                ('samples', models.IntegerField()),
                ('value', models.FloatField()),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now)),
            ],
            options={
                'ordering': ['kind', 'polynomial', 'character'],
                'unique_together': {('kind', 'polynomial', 'character', 'seed', 'samples')},
            },
        ),
        migrations.AddIndex(
            model_name='fittedconstant',
            index=models.Index(fields=['kind', 'polynomial'], name='dynamics_fi_kind_poly_idx'),
        ),
    ]
