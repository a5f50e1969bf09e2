"""
Concurrent execution of (scenario, seed) jobs. Jobs are independent and results come back in
job order, so aggregation does not depend on completion order or on the degree of parallelism.
"""
import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .choices import Chemistry, Strategy
from .conf import cellpack_settings
from .simulation import SENSITIVITY_ROWS, ScenarioConfig, improvement, run_longterm

logger = logging.getLogger(__name__)

NOISE_LEVELS = (0.0, 0.02)


@dataclass(frozen=True)
class Job:
    scenario: ScenarioConfig
    options: dict = field(default_factory=dict)


@dataclass
class PairedResult:
    seed: int
    proposed: object
    baseline: object

    @property
    def improvement(self):
        return improvement(self.proposed, self.baseline)


def run_options(aging_params=None, records=None):
    """Keyword arguments for ``run_longterm`` taken from the ``CELLPACK`` settings."""
    return {
        'aging_params': aging_params,
        'records': records,
        'period_s': cellpack_settings.LONGTERM_PERIOD_S,
        'guard_years': cellpack_settings.RUNTIME_GUARD_YEARS,
        'samples': cellpack_settings.TRAJECTORY_SAMPLES,
        'lp_method': cellpack_settings.LP_METHOD,
    }


def run_job(job):
    return run_longterm(job.scenario, **job.options)


async def run_jobs(jobs, parallelism=None):
    parallelism = parallelism or cellpack_settings.parallelism
    if parallelism <= 1 or len(jobs) <= 1:
        return [run_job(job) for job in jobs]
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=min(parallelism, len(jobs))) as executor:
        return await asyncio.gather(*(loop.run_in_executor(executor, run_job, job) for job in jobs))


def paired_jobs(scenario, seeds, options):
    return [
        Job(scenario.with_overrides(seed=seed, strategy=strategy), options)
        for seed in seeds
        for strategy in (Strategy.SOC_SOH_AWARE, Strategy.SOC_BALANCE)
    ]


async def run_paired(scenario, seeds, parallelism=None, options=None):
    options = run_options() if options is None else options
    results = await run_jobs(paired_jobs(scenario, seeds, options), parallelism)
    pairs = [PairedResult(seed, results[2 * i], results[2 * i + 1]) for i, seed in enumerate(seeds)]
    logger.info(
        'Median improvement over %d seeds: %.2f %%', len(pairs),
        100 * float(np.median([pair.improvement for pair in pairs])),
    )
    return pairs


def summarize_pairs(pairs):
    return pd.DataFrame([
        {
            'seed': pair.seed,
            'lifetime_days_proposed': pair.proposed.lifetime_days,
            'lifetime_days_baseline': pair.baseline.lifetime_days,
            'lifetime_efc_proposed': pair.proposed.lifetime_efc,
            'lifetime_efc_baseline': pair.baseline.lifetime_efc,
            'improvement_days': pair.improvement,
            'improvement_efc': pair.proposed.lifetime_efc / pair.baseline.lifetime_efc - 1,
            'sessions_unoptimized': pair.proposed.sessions_unoptimized,
        }
        for pair in pairs
    ])


async def run_sensitivity(base, seeds, rows=None, chemistries=None, noise_levels=NOISE_LEVELS,
                          parallelism=None, options=None):
    """
    Median lifetime improvement per sensitivity row, chemistry and SOH-noise level, with the
    row-average and its difference from the default row.
    """
    rows = rows or list(SENSITIVITY_ROWS)
    chemistries = chemistries or list(Chemistry.values)
    options = run_options() if options is None else options
    cases = [
        (row, chemistry, noise)
        for row in rows for chemistry in chemistries for noise in noise_levels
    ]
    jobs = []
    for row, chemistry, noise in cases:
        scenario = base.with_overrides(chemistry=chemistry, soh_noise_std=noise, **SENSITIVITY_ROWS[row])
        jobs.extend(paired_jobs(scenario, seeds, options))
    results = await run_jobs(jobs, parallelism)

    records, offset = [], 0
    for row, chemistry, noise in cases:
        gains = [
            improvement(results[offset + 2 * i], results[offset + 2 * i + 1]) for i in range(len(seeds))
        ]
        offset += 2 * len(seeds)
        column = chemistry if noise == 0 else f'{chemistry}_noise'
        records.append({'row': row, 'column': column, 'improvement': float(np.median(gains))})

    table = pd.DataFrame(records).pivot(index='row', columns='column', values='improvement').reindex(rows)
    table['average'] = table.mean(axis=1)
    default = table.loc['default', 'average'] if 'default' in table.index else np.nan
    table['average_effect'] = table['average'] - default
    return table.reset_index()
