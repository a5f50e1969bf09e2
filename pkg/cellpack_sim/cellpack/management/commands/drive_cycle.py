from asgiref.sync import sync_to_async

from ...conf import cellpack_settings
from ...helpers import awrite_csv, awrite_json
from ...serializers import load_profile_csv
from ...simulation import DRIVE_CYCLE_CELLS, DRIVE_CYCLE_REST_H, DRIVE_CYCLE_SOH, DRIVE_CYCLE_TARGET, run_drive_cycle
from ..base import CellpackCommand

run_drive_cycle = sync_to_async(run_drive_cycle, thread_sensitive=False)


class Command(CellpackCommand):
    help = 'Charge ten LFP cells within a window, rest 6 h and discharge to depletion, sampled every second.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--window', type=float, default=1.5, help='Charging window in hours.')
        parser.add_argument('--profile', default=None, help='CSV with a per-second "crate" column.')

    async def ahandle(self, *args, **options):
        window, out = options['window'], self.output_dir(options)
        profile = load_profile_csv(options['profile']) if options['profile'] else None
        source = options['profile'] or 'synthetic'
        period_s = cellpack_settings.DRIVE_CYCLE_PERIOD_S
        result = await run_drive_cycle(
            window, profile=profile, profile_source=source, period_s=period_s,
            lp_method=cellpack_settings.LP_METHOD,
        )
        stem = f'drive_cycle_{window:g}h'
        scenario = {
            'n_cells': DRIVE_CYCLE_CELLS, 'soh_range': list(DRIVE_CYCLE_SOH), 'target_pack_soc': DRIVE_CYCLE_TARGET,
            'window_h': window, 'rest_h': DRIVE_CYCLE_REST_H, 'period_s': period_s, 'profile': source,
            'lp_method': cellpack_settings.LP_METHOD,
        }
        await awrite_csv(out / f'{stem}.csv', result.trajectory, scenario=scenario)
        await awrite_json(out / f'{stem}.json', {
            'scenario': scenario,
            'optimized': result.optimized,
            'end_of_charge_soc': result.end_of_charge_soc,
            'end_of_charge_ah': result.end_of_charge_ah,
            'end_of_charge_soc_variance': result.end_of_charge_variance,
            'stranded_ah': result.stranded_ah,
            'stranded_fraction': result.stranded_ah / result.pack_capacity_ah,
            'balanced_at_fraction': result.balanced_at_fraction,
            'charge_duration_h': result.charge_duration_h,
            'discharge_duration_h': result.discharge_duration_h,
        })
        self.stdout.write(f'Wrote {out / stem}.csv and {stem}.json')
