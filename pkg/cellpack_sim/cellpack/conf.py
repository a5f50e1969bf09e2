"""
Settings for the cellpack app live in the ``CELLPACK`` dict of the Django settings module,
looked up lazily over the defaults below::

    CELLPACK = {
        'LP_METHOD': 'highs',
        'PARALLELISM': 4,
    }
"""
import os
from pathlib import Path

from django.conf import settings
from django.core.signals import setting_changed
from rest_framework.settings import APISettings

DEFAULTS = {
    'LP_METHOD': 'highs',
    'PARALLELISM': None,
    'OUTPUT_DIR': 'results',
    'LONGTERM_PERIOD_S': 60.0,
    'DRIVE_CYCLE_PERIOD_S': 1.0,
    'RUNTIME_GUARD_YEARS': 30.0,
    'TRAJECTORY_SAMPLES': 500,
    'AGING_PARAMS': Path(__file__).resolve().parent / 'fixtures' / 'aging_params.json',
    'SEED_ENV_VAR': 'CELLPACK_SIM_SEED',
}


class CellpackSettings(APISettings):
    @property
    def user_settings(self):
        if not hasattr(self, '_user_settings'):
            self._user_settings = getattr(settings, 'CELLPACK', {})
        return self._user_settings

    @property
    def parallelism(self):
        return self.PARALLELISM or os.cpu_count() or 1


cellpack_settings = CellpackSettings(None, DEFAULTS)


def reload_cellpack_settings(*args, **kwargs):
    if kwargs['setting'] == 'CELLPACK':
        cellpack_settings.reload()


setting_changed.connect(reload_cellpack_settings)
