import os

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from ...audio_io import DecodeError, UnsupportedFormatError
from ...bench import BenchError
from ...config import load_config, with_window
from ...evaluation import MetricError
from ...framing import EmptyWindowError
from ...network import FeatureSetMismatchError, ModelFormatError, TrainingError
from ...pipeline import SourceError
from ...signal_features import EmptyTrackError, GridMismatchError

"""
Shared plumbing for the workload management commands.
"""

USAGE_ERROR = 2
RUNTIME_ERROR = 1

ENGINE_ERRORS = (DecodeError, UnsupportedFormatError, EmptyWindowError, EmptyTrackError, GridMismatchError,
                 ModelFormatError, FeatureSetMismatchError, TrainingError, MetricError, BenchError, SourceError,
                 ValidationError)

def one_line(error):
    if isinstance(error, ValidationError):
        return '; '.join(error.messages)
    return ' '.join(str(error).split()) or type(error).__name__

class WorkloadCommand(BaseCommand):
    """
    Base command: adds --config, turns engine errors into one-line CommandErrors
    (exit 1) and missing inputs into usage errors (exit 2).
    """
    window_options = False

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Analysis config JSON (default: $WORKLOAD_CONFIG)')
        if self.window_options:
            parser.add_argument('--window-s', type=float, help='Window length in seconds')
            parser.add_argument('--step-s', type=float, help='Window step in seconds')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except ENGINE_ERRORS as e:
            raise CommandError(f'{type(e).__name__}: {one_line(e)}', returncode=RUNTIME_ERROR)
        except OSError as e:
            raise CommandError(f'{type(e).__name__}: {one_line(e)}', returncode=RUNTIME_ERROR)

    def require_file(self, path):
        if not path or not os.path.isfile(path):
            raise CommandError(f'No such file: {path}', returncode=USAGE_ERROR)
        return path

    def engine_config(self, options):
        path = options.get('config')
        if path:
            self.require_file(path)
        cfg = load_config(path)
        if self.window_options:
            cfg = with_window(cfg, options.get('window_s'), options.get('step_s'))
        return cfg

    def emit(self, path, text, header=None):
        """
        Write `text` to `path`, or to stdout for None / '-', after an optional
        comment header line.
        """
        if header:
            text = header + '\n' + text
        if path in (None, '-'):
            self.stdout.write(text, ending='')
        else:
            with open(path, 'w', newline='') as f:
                f.write(text)
