from django.apps import AppConfig


class TorusTraceConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'torus_trace'
    verbose_name = 'Regularized trace on tori'
