import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from billiard.pool import Pool
from scipy import stats
from sklearn.model_selection import LeaveOneGroupOut

from .network import TrainConfig, forward_batch, train
from .validators import is_valid_labeled_series

"""
Accuracy metrics and the evaluation protocols: leave-one-participant-out,
two-fold cross-paradigm, emulated real-world and feature-set ablation.
"""

logger = logging.getLogger(__name__)

FILTERED = 'filtered'
UNFILTERED = 'unfiltered'
OVERALL = 'overall'
REPORT_COLUMNS = ['fold', 'dataset', 'condition', 'n', 'rmse', 'percent_error', 'pearson_r', 'p_value', 'stars',
                  'est_mean', 'est_std', 'est_min', 'est_max', 'lab_mean', 'lab_std', 'lab_min', 'lab_max']

class MetricError(Exception):
    """Raised when a metric or protocol is undefined for its input."""

class LabeledSeries:
    """
    Per-second labeled rows with columns participant_id, paradigm, condition,
    time_s and label, plus any feature columns.
    """
    def __init__(self, frame):
        is_valid_labeled_series(frame)
        self.frame = frame.reset_index(drop=True)

    @classmethod
    def read_csv(cls, path):
        return cls(pd.read_csv(path, comment='#', dtype={'participant_id': str}))

    @classmethod
    def read_features(cls, path):
        """Load a labeled feature table written by the extract command."""
        frame = pd.read_csv(path, comment='#', dtype={'participant_id': str})
        return cls(frame.rename(columns={'start_s': 'time_s'}))

    def __len__(self):
        return len(self.frame)

    @property
    def participants(self):
        return list(pd.unique(self.frame['participant_id']))

    @property
    def paradigms(self):
        return list(pd.unique(self.frame['paradigm']))

    @property
    def paradigm(self):
        paradigms = self.paradigms
        return paradigms[0] if len(paradigms) == 1 else '+'.join(map(str, paradigms))

    def subset(self, participants):
        return LabeledSeries(self.frame[self.frame['participant_id'].isin(list(participants))])

def _pair(est, lab):
    est = np.asarray(est, dtype=np.float64)
    lab = np.asarray(lab, dtype=np.float64)
    if est.shape != lab.shape or est.ndim != 1:
        raise MetricError(f'Length mismatch: {est.shape} estimates vs {lab.shape} labels')
    if not len(est):
        raise MetricError('No values to compare')
    return est, lab

def rmse(est, lab):
    est, lab = _pair(est, lab)
    return float(np.sqrt(np.mean((est - lab)**2)))

def pearson(est, lab):
    """
    Sample Pearson correlation and its two-tailed p-value from the t
    approximation with n - 2 degrees of freedom.

    :return: Tuple (r, p)
    """
    est, lab = _pair(est, lab)
    n = len(est)
    if n < 3:
        raise MetricError(f'Correlation needs at least 3 pairs, got {n}')
    de, dl = est - est.mean(), lab - lab.mean()
    denom = np.sqrt(np.sum(de * de) * np.sum(dl * dl))
    if denom == 0:
        raise MetricError('Correlation is undefined for a constant sequence')
    r = float(np.clip(np.sum(de * dl) / denom, -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1 - r * r))
    return r, float(2 * stats.t.sf(abs(t), n - 2))

def percent_error(rmse_value, lab):
    mean = float(np.mean(np.asarray(lab, dtype=np.float64)))
    if not mean > 0:
        raise MetricError(f'Percent error is undefined for label mean {mean}')
    return 100.0 * rmse_value / mean

def significance_stars(p):
    if p is None or np.isnan(p):
        return ''
    if p < 0.0001:
        return '**'
    if p < 0.05:
        return '*'
    return ''

def filter_agreement(labels, vad_flags):
    """
    Indices where the label and voice activity agree: a zero label with no voice
    activity, or a non-zero label with voice activity.

    :return: Sorted index array
    """
    labels = np.asarray(labels, dtype=np.float64)
    active = np.asarray(vad_flags, dtype=bool)
    if labels.shape != active.shape:
        raise MetricError(f'Length mismatch: {labels.shape} labels vs {active.shape} flags')
    return np.flatnonzero((labels == 0) & ~active | (labels != 0) & active)

@dataclass(frozen=True)
class DetectionScores:
    correct: int
    false_alarms: int
    missed: int

    @property
    def precision(self):
        found = self.correct + self.false_alarms
        return self.correct / found if found else 0.0

    @property
    def recall(self):
        expected = self.correct + self.missed
        return self.correct / expected if expected else 0.0

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

def detection_scores(detected, truth, tolerance=0.0):
    """
    Match detected events to reference events one-to-one, nearest first, when
    they lie within `tolerance` of each other.

    :param detected: Event positions (frame indices or seconds)
    :param truth: Reference event positions, same unit
    :return: DetectionScores
    """
    detected = np.unique(np.asarray(detected, dtype=np.float64))
    truth = np.unique(np.asarray(truth, dtype=np.float64))
    distance = np.abs(detected[:, np.newaxis] - truth[np.newaxis, :])
    candidates = np.argwhere(distance <= tolerance)
    order = np.argsort(distance[candidates[:, 0], candidates[:, 1]], kind='stable')
    used_detected, used_truth = set(), set()
    for i, j in candidates[order]:
        if i not in used_detected and j not in used_truth:
            used_detected.add(i)
            used_truth.add(j)
    correct = len(used_detected)
    return DetectionScores(correct, len(detected) - correct, len(truth) - correct)

def loso_splits(data):
    """
    Leave-one-participant-out splits.

    :param data: LabeledSeries
    :return: List of (train participant ids, test participant id)
    """
    participants = data.frame['participant_id'].to_numpy()
    if len(pd.unique(participants)) < 2:
        raise MetricError('Leave-one-participant-out needs at least 2 participants')
    splits = []
    for train_idx, test_idx in LeaveOneGroupOut().split(participants, groups=participants):
        splits.append((list(pd.unique(participants[train_idx])), participants[test_idx][0]))
    return splits

@dataclass(frozen=True)
class Fold:
    name: str
    train: LabeledSeries
    test: LabeledSeries

def cross_paradigm_splits(a, b):
    """
    Two folds: train on `a` and test on `b`, then the reverse.

    :return: List of two Folds named 'train→test' by paradigm
    """
    if not len(a) or not len(b):
        raise MetricError('Cross-paradigm evaluation needs two non-empty series')
    if set(a.paradigms) & set(b.paradigms):
        raise MetricError(f'Both series share paradigm {a.paradigm!r}')
    return [Fold(f'{a.paradigm}→{b.paradigm}', a, b), Fold(f'{b.paradigm}→{a.paradigm}', b, a)]

def _describe(values, prefix):
    return {
        f'{prefix}_mean': float(np.mean(values)),
        f'{prefix}_std': float(np.std(values)),
        f'{prefix}_min': float(np.min(values)),
        f'{prefix}_max': float(np.max(values)),
    }

def _row(fold, dataset, condition, est, lab):
    row = {'fold': fold, 'dataset': dataset, 'condition': condition, 'n': len(est)}
    if not len(est):
        return row
    row['rmse'] = rmse(est, lab)
    try:
        row['percent_error'] = percent_error(row['rmse'], lab)
    except MetricError:
        row['percent_error'] = np.nan
    # Correlation is reported for the unfiltered data only
    if dataset == UNFILTERED:
        try:
            row['pearson_r'], row['p_value'] = pearson(est, lab)
        except MetricError as e:
            logger.debug('No correlation for %s/%s: %s', fold, condition, e)
    row['stars'] = significance_stars(row.get('p_value', np.nan))
    row.update(_describe(est, 'est'))
    row.update(_describe(lab, 'lab'))
    return row

class EvalReport:
    """Metrics per fold, dataset and condition, with an overall row per dataset."""
    def __init__(self, rows=()):
        self.frame = pd.DataFrame(list(rows), columns=REPORT_COLUMNS)

    @classmethod
    def from_predictions(cls, predictions, fold=''):
        """
        :param predictions: DataFrame with columns condition, label, estimate, vad_mean
        """
        rows = []
        retained = filter_agreement(predictions['label'].to_numpy(), predictions['vad_mean'].to_numpy() > 0)
        datasets = ((UNFILTERED, predictions), (FILTERED, predictions.iloc[retained]))
        for dataset, frame in datasets:
            for condition in sorted(pd.unique(predictions['condition']).tolist()):
                part = frame[frame['condition'] == condition]
                rows.append(_row(fold, dataset, condition, part['estimate'].to_numpy(), part['label'].to_numpy()))
            rows.append(_row(fold, dataset, OVERALL, frame['estimate'].to_numpy(), frame['label'].to_numpy()))
        return cls(rows)

    @classmethod
    def concat(cls, reports):
        report = cls()
        report.frame = pd.concat([r.frame for r in reports], ignore_index=True)
        return report

    def row(self, fold, dataset, condition=OVERALL):
        match = self.frame[(self.frame['fold'] == fold) & (self.frame['dataset'] == dataset)
                           & (self.frame['condition'] == condition)]
        return match.iloc[0]

    def to_csv(self, path_or_buf=None):
        return self.frame.to_csv(path_or_buf, index=False)

    def to_text(self):
        text = self.frame.copy()
        text['pearson_r'] = [f'{r:.3f}{s}' if not pd.isna(r) else '-'
                             for r, s in zip(text['pearson_r'], text['stars'])]
        return text.drop(columns=['stars']).to_string(index=False, float_format=lambda v: f'{v:.3f}', na_rep='-')

def feature_matrix(series, feature_set):
    missing = [c for c in feature_set.names if c not in series.frame.columns]
    if missing:
        raise MetricError(f'Feature set {feature_set.label} needs columns missing from the table: '
                          f'{", ".join(missing)}')
    return series.frame[list(feature_set.names)].to_numpy(dtype=np.float64)

def fit_series(series, cfg):
    """Train on the voice-active rows of a labeled feature table."""
    active = series.frame['vad_mean'].to_numpy(dtype=np.float64) > 0
    if not active.any():
        raise MetricError('No voice-active rows to train on')
    x = feature_matrix(series, cfg.feature_set)[active]
    return train(x, series.frame['label'].to_numpy(dtype=np.float64)[active], cfg)

def predict_series(params, series):
    """
    Estimates for every row, 0 where the row has no voice activity.

    :return: DataFrame with condition, label, estimate and vad_mean columns
    """
    frame = series.frame
    active = frame['vad_mean'].to_numpy(dtype=np.float64) > 0
    estimates = np.zeros(len(frame))
    if active.any():
        estimates[active] = forward_batch(params, feature_matrix(series, params.feature_set)[active])
    return pd.DataFrame({
        'participant_id': frame['participant_id'].to_numpy(),
        'condition': frame['condition'].to_numpy(),
        'time_s': frame['time_s'].to_numpy(),
        'label': frame['label'].to_numpy(dtype=np.float64),
        'estimate': estimates,
        'vad_mean': frame['vad_mean'].to_numpy(dtype=np.float64),
    })

def _run_fold(train_series, test_series, cfg):
    return predict_series(fit_series(train_series, cfg), test_series)

def _map_folds(jobs, cfg, workers):
    if workers <= 0:
        return [_run_fold(train_s, test_s, cfg) for train_s, test_s in jobs]
    with Pool(processes=workers) as pool:
        results = [pool.apply_async(_run_fold, (train_s, test_s, cfg)) for train_s, test_s in jobs]
        return [r.get() for r in results]

def run_loso(series, cfg=TrainConfig(), workers=0, fold='loso'):
    """
    Leave-one-participant-out: one model per held-out participant, metrics on
    the pooled held-out predictions.

    :return: EvalReport
    """
    splits = loso_splits(series)
    jobs = [(series.subset(train_ids), series.subset([test_id])) for train_ids, test_id in splits]
    logger.info('Leave-one-participant-out over %d participants', len(splits))
    pooled = pd.concat(_map_folds(jobs, cfg, workers), ignore_index=True)
    return EvalReport.from_predictions(pooled, fold)

def run_cross(a, b, cfg=TrainConfig(), workers=0):
    """Two-fold cross-paradigm evaluation, one report block per fold."""
    folds = cross_paradigm_splits(a, b)
    results = _map_folds([(f.train, f.test) for f in folds], cfg, workers)
    return EvalReport.concat([EvalReport.from_predictions(r, f.name) for f, r in zip(folds, results)])

def run_emulated(train_series, test_series, cfg=TrainConfig()):
    """Train on one labeled set (e.g. condition-blocked trials), test on another (a continuous trial)."""
    return EvalReport.from_predictions(_run_fold(train_series, test_series, cfg), 'emulated')

def run_ablation(series, feature_sets, cfg=TrainConfig(), workers=0):
    """Leave-one-participant-out once per feature set."""
    reports = []
    for feature_set in feature_sets:
        reports.append(run_loso(series, replace(cfg, feature_set=feature_set), workers, fold=feature_set.label))
    return EvalReport.concat(reports)
