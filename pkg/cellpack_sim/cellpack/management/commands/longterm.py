import numpy as np

from ...choices import Strategy
from ...helpers import awrite_csv, awrite_json
from ...runner import Job, run_jobs, run_options, run_paired, summarize_pairs
from ...serializers import ScenarioConfigSerializer, SimResultSerializer, load_records_csv, load_scenario
from ..base import CellpackCommand

STRATEGIES = {'soh': Strategy.SOC_SOH_AWARE, 'soc': Strategy.SOC_BALANCE}


class Command(CellpackCommand):
    help = 'Cycle charging records until the pack reaches EOL and report lifetimes.'
    seeded = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--scenario', default=None, help='Scenario JSON file.')
        parser.add_argument('--chemistry', choices=['lfp', 'lmo'], default=None)
        parser.add_argument('--strategy', choices=['soc', 'soh', 'both'], default='both')
        parser.add_argument('--noise', type=float, default=None, help='SOH-estimate noise standard deviation.')
        parser.add_argument('--records', default=None, help='CSV of charging records replacing the generator.')

    async def ahandle(self, *args, **options):
        scenario = load_scenario(options['scenario'], chemistry=options['chemistry'], soh_noise_std=options['noise'])
        records = load_records_csv(options['records']) if options['records'] else None
        run = run_options(self.aging_params(), records)
        seeds, out = self.seeds(options), self.output_dir(options)
        prefix = f'longterm_{scenario.chemistry}'

        if options['strategy'] == 'both':
            pairs = await run_paired(scenario, seeds, options['parallel'], run)
            results = [result for pair in pairs for result in (pair.proposed, pair.baseline)]
        else:
            jobs = [
                Job(scenario.with_overrides(seed=seed, strategy=STRATEGIES[options['strategy']]), run)
                for seed in seeds
            ]
            pairs, results = None, await run_jobs(jobs, options['parallel'])

        for result in results:
            stem = f'{prefix}_{result.scenario.strategy}_seed{result.scenario.seed}'
            await awrite_json(out / f'{stem}.json', SimResultSerializer(result).data)
            await awrite_csv(
                out / f'{stem}_soh.csv', result.trajectory_frame(),
                scenario=ScenarioConfigSerializer(result.scenario).data,
            )

        if pairs is not None:
            summary = summarize_pairs(pairs)
            resolved = ScenarioConfigSerializer(scenario).data
            await awrite_csv(out / f'{prefix}_summary.csv', summary, scenario=resolved)
            await awrite_json(out / f'{prefix}_summary.json', {
                'scenario': resolved,
                'seeds': seeds,
                'median_improvement_days': float(np.median(summary['improvement_days'])),
                'median_improvement_efc': float(np.median(summary['improvement_efc'])),
            })
            self.stdout.write(
                f'Median lifetime improvement over {len(seeds)} seeds: '
                f'{100 * np.median(summary["improvement_days"]):.2f} %'
            )
        self.stdout.write(f'Wrote {len(results)} results to {out}')
