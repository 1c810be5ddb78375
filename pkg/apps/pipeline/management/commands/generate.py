from apps.pipeline.commands import RunnerCommand
from apps.pipeline.runners.generate_runner import run_generate


class Command(RunnerCommand):
    help = 'Generate a seeded synthetic highway dataset (raw 10 ms and resampled 100 ms JSONL plus manifest)'

    def add_arguments(self, parser):
        parser.add_argument('--out', required=True, help='Output directory')
        parser.add_argument('--tracks', type=int, default=500, help='Number of tracks (default 500)')
        parser.add_argument('--seed', type=int, default=0, help='Random seed (default 0)')

    def handle(self, *args, **options):
        if options['tracks'] < 1:
            raise self.usage_error(f'--tracks must be at least 1, got {options["tracks"]}')
        self.finish(run_generate(
            {'out_dir': options['out']},
            {'tracks': options['tracks'], 'seed': options['seed']},
        ))
