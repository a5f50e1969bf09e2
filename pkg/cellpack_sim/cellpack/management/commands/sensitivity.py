from django.core.management.base import CommandError

from ...helpers import awrite_csv, awrite_json
from ...runner import NOISE_LEVELS, run_options, run_sensitivity
from ...serializers import ScenarioConfigSerializer, load_scenario
from ...simulation import SENSITIVITY_ROWS
from ..base import CellpackCommand


class Command(CellpackCommand):
    help = 'Paired lifetime improvements for every sensitivity row, chemistry and noise level.'
    seeded = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--scenario', default=None, help='Base scenario JSON file.')
        parser.add_argument('--chemistry', choices=['lfp', 'lmo', 'both'], default='both')
        parser.add_argument('--rows', default=None, help='Comma-separated subset of rows.')

    async def ahandle(self, *args, **options):
        base = load_scenario(options['scenario'])
        rows = options['rows'].split(',') if options['rows'] else list(SENSITIVITY_ROWS)
        unknown = [row for row in rows if row not in SENSITIVITY_ROWS]
        if unknown:
            raise CommandError(f'Unknown sensitivity rows: {", ".join(unknown)}', returncode=1)
        chemistries = ['lfp', 'lmo'] if options['chemistry'] == 'both' else [options['chemistry']]
        seeds, out = self.seeds(options), self.output_dir(options)
        table = await run_sensitivity(
            base, seeds, rows, chemistries, NOISE_LEVELS, options['parallel'], run_options(self.aging_params()),
        )
        await awrite_csv(out / 'sensitivity.csv', table, scenario=ScenarioConfigSerializer(base).data)
        await awrite_json(out / 'sensitivity.json', {
            'scenario': ScenarioConfigSerializer(base).data,
            'seeds': seeds,
            'rows': {row: SENSITIVITY_ROWS[row] for row in rows},
            'table': table.astype(object).where(table.notna(), None).to_dict(orient='records'),
        })
        self.stdout.write(table.to_string(index=False))
