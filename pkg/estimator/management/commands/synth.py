from ...audio_io import save_pcm
from ...synth import DEFAULT_RATE, SCENARIOS, scenario, write_corpus
from ._base import WorkloadCommand

class Command(WorkloadCommand):
    help = 'Generate synthetic audio with known ground truth.'

    def add_command_arguments(self, parser):
        parser.add_argument('scenario', choices=SCENARIOS + ('corpus', ))
        parser.add_argument('-o', '--output', required=True, help='WAV file, or directory for corpus')
        parser.add_argument('--duration', type=float, default=5.0, help='Seconds (per participant for corpus)')
        parser.add_argument('--rate', type=int, default=DEFAULT_RATE)
        parser.add_argument('--f0', type=float, default=120.0, help='Fundamental or tone frequency in Hz')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--channels', type=int, choices=[1, 2], default=1)
        parser.add_argument('--bits', type=int, choices=[16, 32], default=16)
        parser.add_argument('--participants', type=int, default=5)
        parser.add_argument('--paradigm', default='synthetic')

    def handle(self, *args, **options):
        if options['scenario'] == 'corpus':
            labels = write_corpus(options['output'], options['participants'], int(options['duration']),
                                  options['paradigm'], options['rate'], options['seed'])
            self.stdout.write(f'Wrote {options["participants"]} recording(s) and {labels}')
            return
        buf = scenario(options['scenario'], options['duration'], options['rate'], options['f0'], options['seed'],
                       options['channels'])
        save_pcm(options['output'], buf, options['bits'])
        self.stdout.write(f'Wrote {options["output"]} ({buf.duration_s:g} s, {buf.sample_rate} Hz)')
