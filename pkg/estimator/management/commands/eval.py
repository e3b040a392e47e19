import json
import logging

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from ...evaluation import LabeledSeries, run_ablation, run_cross, run_emulated, run_loso
from ...network import FeatureSet, TrainConfig
from ._base import USAGE_ERROR, WorkloadCommand

logger = logging.getLogger(__name__)

MODES = ('emulated', 'loso', 'cross', 'ablation')
TRAIN_KEYS = {'learning_rate', 'batch_size', 'epochs', 'beta1', 'beta2', 'eps', 'seed', 'features'}

def train_config(path):
    """Training hyper-parameters from a JSON file; 'features' names the feature set."""
    if not path:
        return TrainConfig()
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f'Model config {path} is not valid JSON: {e}')
    unknown = sorted(set(data) - TRAIN_KEYS)
    if unknown:
        raise ValidationError(f'Unknown model config key(s): {", ".join(unknown)}.')
    if 'features' in data:
        data['feature_set'] = FeatureSet.from_name(data.pop('features'))
    return TrainConfig(**data)

class Command(WorkloadCommand):
    help = 'Evaluate the estimator on labeled feature tables.'

    def add_command_arguments(self, parser):
        parser.add_argument('features', nargs='+', help='Labeled feature CSV(s) written by extract --labels')
        parser.add_argument('--mode', choices=MODES, required=True)
        parser.add_argument('--model-config', help='Training config JSON')
        parser.add_argument('--workers', type=int, default=settings.EVAL_WORKERS)
        parser.add_argument('--format', choices=['text', 'csv'], default='text')
        parser.add_argument('-o', '--output', help='Report file (default: stdout)')

    def handle(self, *args, **options):
        cfg = self.engine_config(options)
        model_config = options['model_config']
        train_cfg = train_config(self.require_file(model_config) if model_config else None)
        tables = [LabeledSeries.read_features(self.require_file(path)) for path in options['features']]
        mode = options['mode']
        expected = 2 if mode in ('emulated', 'cross') else 1
        if len(tables) != expected:
            raise CommandError(f'--mode {mode} takes {expected} feature table(s), got {len(tables)}',
                               returncode=USAGE_ERROR)

        if mode == 'loso':
            report = run_loso(tables[0], train_cfg, options['workers'])
        elif mode == 'cross':
            report = run_cross(tables[0], tables[1], train_cfg, options['workers'])
        elif mode == 'emulated':
            report = run_emulated(tables[0], tables[1], train_cfg)
        else:
            available = [fs for fs in FeatureSet if all(c in tables[0].frame.columns for c in fs.names)]
            logger.info('Ablation over feature sets: %s', ', '.join(fs.label for fs in available))
            report = run_ablation(tables[0], available, train_cfg, options['workers'])

        text = report.to_csv() if options['format'] == 'csv' else report.to_text() + '\n'
        self.emit(options['output'], text, header=cfg.echo())
