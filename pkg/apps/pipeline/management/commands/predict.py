from apps.pipeline.commands import RunnerCommand
from apps.pipeline.runners.predict_runner import run_predict


class Command(RunnerCommand):
    help = 'Predict and fuse the occupancy of every vehicle in a scene file (PGM, CSV, PNG and top-k cells)'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='Grid-head checkpoint')
        parser.add_argument('--scene', required=True, help='Scene file: 100 ms JSONL, one or more tracks')
        parser.add_argument('--out', required=True, help='Output directory')
        parser.add_argument('--window', type=int, help='Samples taken from the end of each track (default: the checkpoint window)')
        parser.add_argument('--top-k', type=int, dest='top_k', help='Cells listed in the summary (default 5)')

    def handle(self, *args, **options):
        if options['top_k'] is not None and options['top_k'] < 1:
            raise self.usage_error('--top-k must be at least 1')
        self.finish(run_predict(
            {'checkpoint': options['checkpoint'], 'scene': options['scene'], 'out_dir': options['out']},
            {'window': options['window'], 'top_k': options['top_k']},
        ))
