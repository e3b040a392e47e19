from ...audio_io import load_pcm
from ...bench import DEFAULT_SIZES, run_bench
from ...synth import scenario
from ._base import WorkloadCommand

class Command(WorkloadCommand):
    help = 'Time feature extraction across window sizes.'

    def add_command_arguments(self, parser):
        parser.add_argument('--sizes', type=float, nargs='+', default=list(DEFAULT_SIZES),
                            help='Window sizes in seconds')
        parser.add_argument('--repeats', type=int, default=10)
        parser.add_argument('--audio', help='WAV file to time on (default: synthetic speech)')
        parser.add_argument('--format', choices=['text', 'csv'], default='text')
        parser.add_argument('-o', '--output', help='Output file (default: stdout)')

    def handle(self, *args, **options):
        cfg = self.engine_config(options)
        if options['audio']:
            audio = load_pcm(self.require_file(options['audio']))
        else:
            audio = scenario('speech-mix', duration_s=max(options['sizes']) + 1)
        result = run_bench(audio, options['sizes'], options['repeats'], cfg)
        if options['format'] == 'csv':
            text = result.table.to_csv(index=False)
        else:
            text = result.to_text() + '\n'
        self.emit(options['output'], text, header=cfg.echo())
