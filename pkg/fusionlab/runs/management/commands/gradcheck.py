from django.core.management.base import CommandError

from fusionlab.runs.management.base import FusionLabCommand
from fusionlab.runs.services import run_gradcheck


class Command(FusionLabCommand):
    help = 'Checks every model gradient against central differences.'

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--eps', type=float)
        parser.add_argument('--tolerance', type=float)
        parser.add_argument('--coords', type=int, help='cap on coordinates checked per parameter; every coordinate when omitted')

    def run(self, **options):
        report = run_gradcheck(seed=options['seed'], eps=options['eps'], tolerance=options['tolerance'],
                               max_coords=options['coords'])
        self.stdout.write(report.to_text())
        if not report.passed:
            raise CommandError(f'gradient check failed: max relative error {report.max_error:.3e}')
