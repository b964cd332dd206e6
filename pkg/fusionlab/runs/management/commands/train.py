from pathlib import Path

from fusionlab.runs.management.base import FusionLabCommand
from fusionlab.runs.serializers import read_run_config
from fusionlab.runs.services import load_data, train_run


class Command(FusionLabCommand):
    help = 'Trains the fusion model; writes model.nbck, log.txt, metrics.txt and config.txt.'

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument('--data', required=True, help='directory with train.nbemb and val.nbemb')
        parser.add_argument('--out', required=True, help='output directory')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--epochs', type=int)

    def run(self, **options):
        config = read_run_config(options['config'], seed=options['seed'], epochs=options['epochs'])
        train_data, val_data = load_data(config=config, data_dir=options['data'])
        out_dir = Path(options['out'])
        out_dir.mkdir(parents=True, exist_ok=True)
        outcome = train_run(config=config, train_data=train_data, val_data=val_data, out_dir=out_dir)
        self.stdout.write(outcome.evaluation.report.to_record(), ending='')
