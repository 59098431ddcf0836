from django.apps import AppConfig


class DynamicsConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "dynamics"
    verbose_name = "Toral dynamics"
