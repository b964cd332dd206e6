from fusionlab.runs.management.base import FusionLabCommand
from fusionlab.runs.services import evaluate_checkpoint


class Command(FusionLabCommand):
    help = 'Evaluates a checkpoint on a dataset split and writes the metrics record.'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True)
        parser.add_argument('--data', required=True, help='directory with train.nbemb and val.nbemb')
        parser.add_argument('--split', choices=('val', 'train'), default='val')
        parser.add_argument('--out', help='metrics file to write')

    def run(self, **options):
        evaluation = evaluate_checkpoint(
            checkpoint_path=options['checkpoint'],
            data_dir=options['data'],
            split=options['split'],
            out_path=options['out'],
        )
        self.stdout.write(evaluation.report.to_record(), ending='')
        self.stdout.write(evaluation.report.confusion.to_text())
