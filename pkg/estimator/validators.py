import numpy as np
from django.core.exceptions import ValidationError

"""
This module contains validation functions.
"""

LABEL_COLUMNS = ('participant_id', 'paradigm', 'condition', 'time_s', 'label')

def is_valid_analysis_config(cfg):
    """
    Validate window and frame geometry.

    :param cfg: AnalysisConfig
    """
    for name in ('window_ms', 'step_ms', 'frame_step_ms', 'frame_span_ms'):
        if getattr(cfg, name) <= 0:
            raise ValidationError(f'{name} must be positive.')
    if cfg.frame_span_ms > cfg.window_ms:
        raise ValidationError('frame_span_ms must not exceed window_ms.')
    if cfg.frame_step_ms > cfg.frame_span_ms:
        raise ValidationError('frame_step_ms must not exceed frame_span_ms.')

def is_valid_vad_params(params):
    """
    Validate voice activity detector parameters.

    :param params: VadParams
    """
    if not 0 <= params.zcr_min < params.zcr_max:
        raise ValidationError('ZCR band must satisfy 0 <= zcr_min < zcr_max.')
    if params.primary_threshold <= 0:
        raise ValidationError('primary_threshold must be positive.')
    if params.init_span < 1:
        raise ValidationError('init_span must be at least one frame.')
    if params.min_run < 1 or params.pitch_search_radius < 0:
        raise ValidationError('Run and radius parameters must be non-negative.')
    if params.energy_floor <= 0:
        raise ValidationError('energy_floor must be positive.')
    if params.energy_scale <= 0:
        raise ValidationError('energy_scale must be positive.')

def is_valid_pitch_params(params):
    """
    Validate pitch tracker parameters.

    :param params: PitchParams
    """
    if not 0 < params.floor_hz < params.ceiling_hz <= params.search_ceiling_hz:
        raise ValidationError('Pitch range must satisfy 0 < floor < ceiling <= search ceiling.')
    if not 0 < params.voicing_threshold < 1:
        raise ValidationError('voicing_threshold must lie in (0, 1).')

def is_valid_labeled_series(frame):
    """
    Validate a labeled series table: required columns present, finite labels and
    strictly increasing times per participant. A participant whose times restart
    appears twice in the same file.

    :param frame: pandas DataFrame
    """
    missing = [c for c in LABEL_COLUMNS if c not in frame.columns]
    if missing:
        raise ValidationError(f'Missing label columns: {", ".join(missing)}.')
    if not np.isfinite(frame['label'].to_numpy(dtype=float)).all():
        raise ValidationError('Labels must be finite.')
    for participant, times in frame.groupby('participant_id', sort=False)['time_s']:
        if not np.all(np.diff(times.to_numpy(dtype=float)) > 0):
            raise ValidationError(f'Duplicate participant id {participant!r}: times are not strictly increasing.')
