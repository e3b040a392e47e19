import logging

import numpy as np
import pandas as pd
from django.core.management.base import CommandError

from ...audio_io import load_pcm, to_mono
from ...evaluation import LabeledSeries
from ...framing import windows
from ...pipeline import RespirationSeries, extract_features
from ._base import USAGE_ERROR, WorkloadCommand

logger = logging.getLogger(__name__)

class Command(WorkloadCommand):
    help = 'Extract per-window voice features from a WAV file into a CSV table.'
    window_options = True

    def add_command_arguments(self, parser):
        parser.add_argument('audio', help='PCM WAV file')
        parser.add_argument('-o', '--output', help='Output CSV (default: stdout)')
        parser.add_argument('--labels', help='Label CSV: participant_id, paradigm, condition, time_s, label')
        parser.add_argument('--participant', help='Participant id to take labels for (default: the only one)')
        parser.add_argument('--respiration', help='Respiration CSV: time_s, breaths_per_min')

    def handle(self, *args, **options):
        cfg = self.engine_config(options)
        audio = to_mono(load_pcm(self.require_file(options['audio'])))
        respiration = None
        if options['respiration']:
            respiration = RespirationSeries.read_csv(self.require_file(options['respiration']))

        rows = []
        for win in windows([audio], cfg.analysis):
            row = {'start_s': win.start_time_s}
            row.update(extract_features(win, cfg, respiration).values())
            rows.append(row)
        frame = pd.DataFrame(rows, columns=['start_s'] + self._columns(cfg))
        logger.info('Extracted %d window(s) from %s', len(frame), options['audio'])

        if options['labels']:
            frame = self._attach_labels(frame, options)
        self.emit(options['output'], frame.to_csv(index=False), header=cfg.echo())

    def _columns(self, cfg):
        return list(cfg.features.feature_set.names)

    def _attach_labels(self, frame, options):
        labels = LabeledSeries.read_csv(self.require_file(options['labels'])).frame
        participant = options['participant']
        if participant is None:
            participants = pd.unique(labels['participant_id'])
            if len(participants) != 1:
                raise CommandError('Label file covers several participants; pass --participant',
                                   returncode=USAGE_ERROR)
            participant = participants[0]
        labels = labels[labels['participant_id'] == str(participant)].astype({'time_s': float})
        # A window takes the label of its start second
        keyed = frame.assign(time_s=np.floor(frame['start_s'].to_numpy(dtype=float)))
        merged = keyed.merge(labels, how='inner', on='time_s').drop(columns=['time_s'])
        leading = ['participant_id', 'paradigm', 'condition', 'start_s', 'label']
        return merged[leading + [c for c in merged.columns if c not in leading]]
