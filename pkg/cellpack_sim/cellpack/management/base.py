import os
from pathlib import Path

from asgiref.sync import async_to_sync
from django.core.management.base import BaseCommand, CommandError

from ..conf import cellpack_settings
from ..exceptions import CellpackError, ConfigurationError
from ..helpers import render_json
from ..serializers import load_aging_params


def parse_seeds(value):
    """``"10"`` means seeds 0..9; ``"3,7,11"`` lists seeds explicitly."""
    value = str(value).strip()
    try:
        if ',' in value:
            seeds = [int(part) for part in value.split(',') if part.strip()]
        else:
            seeds = list(range(int(value)))
    except ValueError:
        raise CommandError(f'Cannot read a seed list from "{value}".', returncode=1)
    if not seeds or min(seeds) < 0:
        raise CommandError('At least one non-negative seed is required.', returncode=1)
    return seeds


class CellpackCommand(BaseCommand):
    """
    Runs ``ahandle`` to completion and turns package errors into ``CommandError`` with the
    error's exit code. Configuration errors print their JSON:API document first.
    """
    requires_system_checks = []
    seeded = False

    def add_arguments(self, parser):
        parser.add_argument('--out', default=None, help='Output directory.')
        if self.seeded:
            parser.add_argument('--seeds', default='1', help='Seed count or comma-separated seed list.')
            parser.add_argument('--parallel', type=int, default=None, help='Worker processes.')

    def handle(self, *args, **options):
        try:
            return async_to_sync(self.ahandle)(*args, **options)
        except ConfigurationError as exc:
            self.stderr.write(render_json(exc.document or {'errors': [exc.get_full_details()]}).decode())
            raise CommandError(exc.detail, returncode=exc.exit_code)
        except FileNotFoundError as exc:
            raise CommandError(str(exc), returncode=1)
        except CellpackError as exc:
            raise CommandError(exc.detail, returncode=exc.exit_code)

    async def ahandle(self, *args, **options):
        raise NotImplementedError('subclasses of CellpackCommand must provide an ahandle() method')

    def output_dir(self, options):
        return Path(options['out'] or cellpack_settings.OUTPUT_DIR)

    def seeds(self, options):
        return parse_seeds(os.environ.get(cellpack_settings.SEED_ENV_VAR) or options['seeds'])

    def aging_params(self):
        return load_aging_params(cellpack_settings.AGING_PARAMS)
