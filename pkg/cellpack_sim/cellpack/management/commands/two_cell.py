from ...helpers import awrite_csv
from ...simulation import run_two_cell_comparison
from ..base import CellpackCommand


class Command(CellpackCommand):
    help = 'Compare throughput controls on a weak and a healthy cell over one charge and full discharge.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--weak-soh', type=float, default=0.8)
        parser.add_argument('--crate', type=float, default=0.5)

    async def ahandle(self, *args, **options):
        scenario = {'soh': [options['weak_soh'], 1.0], 'crate': options['crate']}
        table = run_two_cell_comparison(soh=tuple(scenario['soh']), crate=scenario['crate'])
        await awrite_csv(self.output_dir(options) / 'two_cell.csv', table.reset_index(), scenario=scenario)
        self.stdout.write(table.to_string())
