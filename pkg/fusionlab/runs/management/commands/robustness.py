from fusionlab.runs.management.base import FusionLabCommand
from fusionlab.runs.serializers import read_run_config
from fusionlab.runs.services import run_noise_robustness


class Command(FusionLabCommand):
    help = 'Compares learned confidence with a fixed alpha on clean and on text-corrupted data.'

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument('--seeds', type=int)
        parser.add_argument('--noise-rate', type=float, default=0.5)
        parser.add_argument('--out', help='output directory for robustness.txt and the per-run configs, logs and metrics')

    def run(self, **options):
        report = run_noise_robustness(
            config=read_run_config(options['config']),
            seeds=options['seeds'],
            noise_rate=options['noise_rate'],
            out_dir=options['out'],
        )
        self.stdout.write(report.to_text(), ending='')
