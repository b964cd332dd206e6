from fusionlab.runs.management.base import FusionLabCommand
from fusionlab.runs.serializers import read_run_config
from fusionlab.runs.services import run_ablation_suite


class Command(FusionLabCommand):
    help = 'Trains the full model and the six ablation variants and prints the averaged table.'

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument('--data', help='dataset directory; synthesized per seed when omitted')
        parser.add_argument('--seeds', type=int)
        parser.add_argument('--out', help='output directory for ablation.txt and the per-run configs, logs and metrics')

    def run(self, **options):
        table = run_ablation_suite(
            config=read_run_config(options['config']),
            seeds=options['seeds'],
            data_dir=options['data'],
            out_dir=options['out'],
        )
        self.stdout.write(table.to_text(), ending='')
