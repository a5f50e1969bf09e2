from django.apps import AppConfig


class CellpackConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'cellpack'
    verbose_name = 'Cell-level inverter pack simulator'
