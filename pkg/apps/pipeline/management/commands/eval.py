from apps.neural.params import HEAD_KINDS
from apps.pipeline.commands import RunnerCommand
from apps.pipeline.runners.eval_runner import SPLITS, run_eval
from apps.trajectories.scenarios import SCENARIO_KINDS


class Command(RunnerCommand):
    help = 'Compare trained checkpoints with the constant-velocity Kalman baseline (MAE X, MAE Y, MAE per horizon)'

    def add_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Dataset directory written by generate')
        parser.add_argument('--checkpoint', action='append', required=True,
                            help='Checkpoint file, repeatable (one per horizon)')
        parser.add_argument('--out', help='Report directory (default: the dataset directory)')
        parser.add_argument('--head', choices=HEAD_KINDS, help='Fail unless every checkpoint has this head')
        parser.add_argument('--seed', type=int, default=0, help='Split seed used for training (default 0)')
        parser.add_argument('--split', choices=SPLITS, default='validation', help='Windows to score')
        parser.add_argument('--scenario', choices=SCENARIO_KINDS, help='Score one scenario kind only')
        parser.add_argument('--window', type=int, help='Input window length (default: the one stored in each checkpoint)')
        parser.add_argument('--top-k', type=int, dest='top_k', help='k for the top-k accuracy column (default 5)')

    def handle(self, *args, **options):
        if options['top_k'] is not None and options['top_k'] < 1:
            raise self.usage_error('--top-k must be at least 1')
        self.finish(run_eval(
            {'data_dir': options['data'], 'checkpoints': options['checkpoint'], 'out_dir': options['out']},
            {
                'head': options['head'],
                'seed': options['seed'],
                'split': options['split'],
                'scenario': options['scenario'],
                'window': options['window'],
                'top_k': options['top_k'],
            },
        ))
