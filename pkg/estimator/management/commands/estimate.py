import json

from django.conf import settings

from ...audio_io import load_pcm
from ...network import load_file
from ...pipeline import RespirationSeries, estimate_buffer, estimate_record, estimates_frame
from ._base import WorkloadCommand

class Command(WorkloadCommand):
    help = 'Estimate speech workload for every window of a WAV file.'
    window_options = True

    def add_command_arguments(self, parser):
        parser.add_argument('audio', help='PCM WAV file')
        parser.add_argument('--model', required=True, help='Model file written by train')
        parser.add_argument('--clamp', action='store_true', default=settings.CLAMP_ESTIMATES,
                            help='Clamp estimates to the 0-4 label range')
        parser.add_argument('--respiration', help='Respiration CSV: time_s, breaths_per_min')
        parser.add_argument('--format', choices=['csv', 'jsonl'], default='csv')
        parser.add_argument('-o', '--output', help='Output file (default: stdout)')

    def handle(self, *args, **options):
        cfg = self.engine_config(options)
        params = load_file(self.require_file(options['model']), cfg.features.feature_set)
        respiration = None
        if options['respiration']:
            respiration = RespirationSeries.read_csv(self.require_file(options['respiration']))
        audio = load_pcm(self.require_file(options['audio']))
        estimates = estimate_buffer(audio, params, cfg, respiration, options['clamp'])

        if options['format'] == 'jsonl':
            # JSONL stays one record per line; the config echo goes to stderr
            self.stderr.write(cfg.echo())
            text = ''.join(json.dumps(estimate_record(est)) + '\n' for est in estimates)
            self.emit(options['output'], text)
        else:
            frame = estimates_frame(estimates, cfg.features.feature_set)
            self.emit(options['output'], frame.to_csv(index=False), header=cfg.echo())
