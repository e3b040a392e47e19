import numpy as np

from ...evaluation import LabeledSeries, feature_matrix
from ...network import FeatureSet, TrainConfig, fit, save_file
from ._base import WorkloadCommand

class Command(WorkloadCommand):
    help = 'Train the workload network on a labeled feature table.'

    def add_command_arguments(self, parser):
        parser.add_argument('features', help='Labeled feature CSV written by extract --labels')
        parser.add_argument('-o', '--output', required=True, help='Model file to write')
        parser.add_argument('--epochs', type=int, default=100)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--batch-size', type=int, default=64)
        parser.add_argument('--learning-rate', type=float, default=1e-3)
        parser.add_argument('--features', dest='feature_set', default='base', choices=['base', '+resp', '+fillers', '+both'],
                            help='Feature set the network is trained on')

    def handle(self, *args, **options):
        self.engine_config(options)
        series = LabeledSeries.read_features(self.require_file(options['features']))
        cfg = TrainConfig(learning_rate=options['learning_rate'], batch_size=options['batch_size'],
                          epochs=options['epochs'], seed=options['seed'],
                          feature_set=FeatureSet.from_name(options['feature_set']))
        # Silent windows never reach the network at inference time
        active = series.frame['vad_mean'].to_numpy(dtype=np.float64) > 0
        result = fit(feature_matrix(series, cfg.feature_set)[active],
                     series.frame['label'].to_numpy(dtype=np.float64)[active], cfg)
        save_file(options['output'], result.params)
        self.stdout.write(f'Trained {cfg.feature_set.label} model on {int(active.sum())} rows '
                          f'({result.rejected_rows} rejected), final loss {result.losses[-1]:.6f}')
