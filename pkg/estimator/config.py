import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace

from django.conf import settings
from django.core.exceptions import ValidationError

from .framing import AnalysisConfig
from .network import FeatureSet
from .pitch import PitchParams
from .vad import VadParams

"""
Analysis configuration: JSON files with `analysis`, `vad`, `pitch` and
`features` sections, layered over the built-in defaults.
"""

logger = logging.getLogger(__name__)

SWITCH_VALUES = {'on': True, 'off': False, True: True, False: False}

@dataclass(frozen=True)
class FeatureOptions:
    fillers: bool = False
    respiration: bool = False

    @property
    def feature_set(self):
        return FeatureSet.from_flags(respiration=self.respiration, fillers=self.fillers)

@dataclass(frozen=True)
class EngineConfig:
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    vad: VadParams = field(default_factory=VadParams)
    pitch: PitchParams = field(default_factory=PitchParams)
    features: FeatureOptions = field(default_factory=FeatureOptions)
    # Subtract each window's mean before analysis
    remove_dc: bool = False

    def as_dict(self):
        data = asdict(self)
        data['features'] = {k: 'on' if v else 'off' for k, v in data['features'].items()}
        return data

    def echo(self):
        """One-line rendering used as the header comment of every output file."""
        return '# config: ' + json.dumps(self.as_dict(), sort_keys=True)

def _section(cls, values, name):
    if not isinstance(values, dict):
        raise ValidationError(f'Config section {name!r} must be an object.')
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValidationError(f'Unknown key(s) in config section {name!r}: {", ".join(unknown)}.')
    return values

def _switches(values):
    try:
        return {k: SWITCH_VALUES[v] for k, v in values.items()}
    except (KeyError, TypeError):
        raise ValidationError('Feature switches must be "on" or "off".')

def from_dict(data, base=None):
    """
    Overlay a parsed config mapping on `base` (defaults when None).

    :return: EngineConfig
    """
    cfg = base or EngineConfig()
    if not isinstance(data, dict):
        raise ValidationError('Config must be a JSON object.')
    unknown = sorted(set(data) - {'analysis', 'vad', 'pitch', 'features'})
    if unknown:
        raise ValidationError(f'Unknown config section(s): {", ".join(unknown)}.')
    analysis = data.get('analysis', {})
    if not isinstance(analysis, dict):
        raise ValidationError("Config section 'analysis' must be an object.")
    analysis = dict(analysis)
    try:
        remove_dc = SWITCH_VALUES[analysis.pop('remove_dc', cfg.remove_dc)]
    except (KeyError, TypeError):
        raise ValidationError('analysis.remove_dc must be "on" or "off".')
    analysis = _section(AnalysisConfig, analysis, 'analysis')
    try:
        return EngineConfig(
            analysis=replace(cfg.analysis, **analysis),
            vad=replace(cfg.vad, **_section(VadParams, data.get('vad', {}), 'vad')),
            pitch=replace(cfg.pitch, **_section(PitchParams, data.get('pitch', {}), 'pitch')),
            features=replace(cfg.features, **_switches(_section(FeatureOptions, data.get('features', {}), 'features'))),
            remove_dc=remove_dc,
        )
    except TypeError as e:
        raise ValidationError(f'Invalid config value: {e}')

def load_config(path=None):
    """
    Read the analysis configuration from `path`, or from WORKLOAD_CONFIG.

    :return: EngineConfig
    """
    path = path or settings.WORKLOAD_CONFIG
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f'Config {path} is not valid JSON: {e}')
    logger.debug('Loaded analysis config from %s', path)
    return from_dict(data)

def with_window(cfg, window_s=None, step_s=None):
    """Override window length and step, given in seconds."""
    overrides = {}
    if window_s is not None:
        overrides['window_ms'] = int(round(window_s * 1000))
    if step_s is not None:
        overrides['step_ms'] = int(round(step_s * 1000))
    return replace(cfg, analysis=replace(cfg.analysis, **overrides)) if overrides else cfg
