import json
import logging
import sys

from django.conf import settings

from ...audio_io import read_chunks
from ...network import load_file
from ...pipeline import RespirationSeries, SourceError, estimate_record, stream_estimates
from ._base import WorkloadCommand

logger = logging.getLogger(__name__)

class Command(WorkloadCommand):
    help = 'Estimate workload online from a WAV stream, one JSON record per window.'

    def add_command_arguments(self, parser):
        parser.add_argument('--model', required=True, help='Model file written by train')
        parser.add_argument('--input', default='-', help='WAV file or - for stdin (default)')
        parser.add_argument('--chunk-ms', type=int, default=settings.STREAM_CHUNK_MS)
        parser.add_argument('--workers', type=int, default=settings.STREAM_WORKERS)
        parser.add_argument('--max-pending', type=int, default=settings.STREAM_MAX_PENDING)
        parser.add_argument('--clamp', action='store_true', default=settings.CLAMP_ESTIMATES)
        parser.add_argument('--respiration', help='Respiration CSV: time_s, breaths_per_min')

    def handle(self, *args, **options):
        cfg = self.engine_config(options)
        params = load_file(self.require_file(options['model']), cfg.features.feature_set)
        respiration = None
        if options['respiration']:
            respiration = RespirationSeries.read_csv(self.require_file(options['respiration']))

        if options['input'] == '-':
            stream = sys.stdin.buffer
        else:
            stream = open(self.require_file(options['input']), 'rb')
        self.stderr.write(cfg.echo())
        count = 0
        try:
            estimates = stream_estimates(read_chunks(stream, options['chunk_ms']), params, cfg, respiration,
                                         options['clamp'], options['workers'], options['max_pending'])
            for est in estimates:
                self.stdout.write(json.dumps(estimate_record(est)))
                self.stdout.flush()
                count += 1
                if est.latency_s > cfg.analysis.step_ms / 1000:
                    logger.warning('Window at %.1f s took %.3f s, longer than the step', est.start_time_s,
                                   est.latency_s)
        except SourceError:
            logger.error('Stream failed after %d window(s)', count)
            raise
        finally:
            if stream is not sys.stdin.buffer:
                stream.close()
        logger.info('Streamed %d window(s)', count)
