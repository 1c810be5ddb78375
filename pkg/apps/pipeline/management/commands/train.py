from django.conf import settings

from apps.neural.losses import LOSS_BCE, LOSS_CATEGORICAL
from apps.neural.params import HEAD_GRID, HEAD_KINDS
from apps.pipeline.commands import RunnerCommand
from apps.pipeline.runners.train_runner import run_train
from apps.pipeline.tasks import train_horizon


class Command(RunnerCommand):
    help = 'Train one LSTM per prediction horizon and write a checkpoint plus training log for each'

    def add_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Dataset directory written by generate')
        parser.add_argument('--out', help='Output directory (default: the dataset directory)')
        parser.add_argument('--delta', type=float, action='append',
                            help='Prediction horizon in seconds, repeatable (default 0.5, 1.0 and 2.0)')
        parser.add_argument('--head', choices=HEAD_KINDS, default=HEAD_GRID, help='Output head (default grid)')
        parser.add_argument('--seed', type=int, default=0, help='Seed for the split and training (default 0)')
        parser.add_argument('--epochs', type=int, help='Maximum number of epochs')
        parser.add_argument('--window', type=int, help='Input window length in 100 ms steps (default 20)')
        parser.add_argument('--loss', choices=(LOSS_BCE, LOSS_CATEGORICAL), help='Loss form (default bce)')
        parser.add_argument('--background', action='store_true',
                            help='Queue one Celery task per horizon instead of training in-process')
        self.add_geometry_arguments(parser)

    def handle(self, *args, **options):
        deltas = options['delta'] or list(settings.PREDICTOR['HORIZONS'])
        if options['epochs'] is not None and options['epochs'] < 1:
            raise self.usage_error('--epochs must be at least 1')
        if options['window'] is not None and options['window'] < 1:
            raise self.usage_error('--window must be at least 1')
        inputs = {'data_dir': options['data'], 'out_dir': options['out'] or options['data']}
        for delta in deltas:
            params = {
                'delta': delta,
                'head': options['head'],
                'seed': options['seed'],
                'max_epochs': options['epochs'],
                'window': options['window'],
                'loss_form': options['loss'],
                'm_x': options['m_x'],
                'm_y': options['m_y'],
                'cell_length': options['cell_length'],
                'cell_width': options['cell_width'],
            }
            if options['background']:
                task = train_horizon.delay(inputs, params)
                self.stdout.write(f'delta={delta}s queued as task {task.id}')
            else:
                self.finish(run_train(inputs, params))
