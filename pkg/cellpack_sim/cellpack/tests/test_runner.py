from django.test import SimpleTestCase, override_settings

from ..choices import Strategy
from ..runner import Job, paired_jobs, run_jobs, run_options, run_paired, run_sensitivity, summarize_pairs
from ..simulation import ScenarioConfig

SMALL = ScenarioConfig(n_cells=4, n_records=8)
OPTIONS = {'period_s': 600.0}


class TestRunner(SimpleTestCase):

    def test_paired_jobs_alternate(self):
        jobs = paired_jobs(SMALL, [3, 5], OPTIONS)
        self.assertEqual([job.scenario.seed for job in jobs], [3, 3, 5, 5])
        self.assertEqual(
            [job.scenario.strategy for job in jobs],
            [Strategy.SOC_SOH_AWARE, Strategy.SOC_BALANCE] * 2,
        )

    @override_settings(CELLPACK={'LONGTERM_PERIOD_S': 600.0, 'LP_METHOD': 'simplex', 'TRAJECTORY_SAMPLES': 50})
    def test_run_options_follow_settings(self):
        options = run_options()
        self.assertEqual((options['period_s'], options['lp_method'], options['samples']), (600.0, 'simplex', 50))
        self.assertEqual(options['guard_years'], 30.0)

    async def test_parallelism_does_not_change_results(self):
        jobs = [Job(SMALL.with_overrides(seed=seed), OPTIONS) for seed in (0, 1)]
        serial = await run_jobs(jobs, parallelism=1)
        parallel = await run_jobs(jobs, parallelism=2)
        self.assertEqual(
            [result.lifetime_days for result in serial], [result.lifetime_days for result in parallel],
        )
        self.assertEqual([result.scenario.seed for result in parallel], [0, 1])

    async def test_paired_summary(self):
        pairs = await run_paired(SMALL, [0], parallelism=1, options=OPTIONS)
        self.assertEqual(pairs[0].proposed.scenario.strategy, Strategy.SOC_SOH_AWARE)
        self.assertEqual(pairs[0].baseline.scenario.strategy, Strategy.SOC_BALANCE)
        summary = summarize_pairs(pairs)
        self.assertEqual(list(summary['seed']), [0])
        self.assertAlmostEqual(
            summary['improvement_days'][0],
            pairs[0].proposed.lifetime_days / pairs[0].baseline.lifetime_days - 1,
        )

    async def test_sensitivity_table(self):
        table = await run_sensitivity(
            SMALL, [0], rows=['default', 'calendar_x2'], chemistries=['lfp'], noise_levels=(0.0,),
            parallelism=1, options=OPTIONS,
        )
        self.assertEqual(list(table['row']), ['default', 'calendar_x2'])
        self.assertEqual(list(table.columns), ['row', 'lfp', 'average', 'average_effect'])
        self.assertEqual(table.loc[0, 'average_effect'], 0.0)
        self.assertEqual(table.loc[1, 'average'], table.loc[1, 'lfp'])

    async def test_health_aware_charging_outlives_soc_balancing(self):
        scenario = ScenarioConfig(n_cells=10, n_records=16)
        pairs = await run_paired(scenario, [0, 1], parallelism=2, options=OPTIONS)
        summary = summarize_pairs(pairs)
        self.assertGreater(summary['improvement_days'].median(), 0.0)
        self.assertTrue((summary['lifetime_days_proposed'] > 0).all())
