from dataclasses import replace

from ...charging import ChargeTargets, assemble_lp, optimize_charge_plan, validate_plan
from ...conf import cellpack_settings
from ...exceptions import InfeasiblePlanError
from ...helpers import render_json, write_json
from ...lp import dump_problem
from ...serializers import ChargePlanSerializer, load_pack_state
from ..base import CellpackCommand


class Command(CellpackCommand):
    help = 'Optimize one charging session for the pack state in a JSON file and print the plan.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('pack_state', help='Pack-state JSON file with cells, session and optimizer blocks.')
        parser.add_argument('--dump-lp', default=None, help='Write the chosen LP as a plain-text matrix dump.')

    async def ahandle(self, *args, **options):
        pack, session, cfg = load_pack_state(options['pack_state'])
        cfg = replace(cfg, lp_method=cellpack_settings.LP_METHOD)
        plan = optimize_charge_plan(pack, session, cfg)
        if plan is None:
            raise InfeasiblePlanError()
        document = dict(ChargePlanSerializer(plan).data)
        document['violations'] = validate_plan(plan, pack, session, cfg)
        if options['dump_lp']:
            view_q = pack.remaining if session.q_initial is None else session.q_initial
            targets = ChargeTargets(view_q, plan.total_charge + view_q[plan.active].sum())
            problem = assemble_lp(pack, targets, plan.grid, plan.u_phase, cfg, session.t_total, session.soh_estimate)
            with open(options['dump_lp'], 'w') as stream:
                dump_problem(problem, stream)
        if options['out']:
            write_json(self.output_dir(options) / 'plan.json', document)
        self.stdout.write(render_json(document).decode(), ending='')
