from fusionlab.runs.management.base import FusionLabCommand
from fusionlab.runs.serializers import read_run_config
from fusionlab.runs.services import generate_data


class Command(FusionLabCommand):
    help = 'Writes a synthetic dataset: train.nbemb, val.nbemb, manifest.txt and config.txt.'

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--out', required=True, help='output directory')
        parser.add_argument('--no-calibration', action='store_true', help='skip the linear-probe calibration')

    def run(self, **options):
        config = read_run_config(options['config'], seed=options['seed'])
        paths = generate_data(config=config, out_dir=options['out'], calibrate_probes=not options['no_calibration'])
        for path in paths.values():
            self.stdout.write(str(path))
