import hashlib
import json
import logging
import struct
from dataclasses import asdict, dataclass, field
from enum import IntEnum

import numpy as np
import torch
from sklearn.preprocessing import StandardScaler

"""
Feed-forward workload regressor: numpy inference, torch training and a
versioned binary weight format.
"""

logger = logging.getLogger(__name__)

BASE_FEATURES = ('intensity_mean', 'intensity_std', 'pitch_mean', 'pitch_std', 'vad_mean', 'vad_std',
                 'syllables_per_second')
RESPIRATION_FEATURE = 'respiration_rate'
FILLER_FEATURE = 'filler_count'
HIDDEN_LAYERS = (256, 256, 256)

MAGIC = b'SWLM'
FORMAT_VERSION = 1
HEADER = struct.Struct('<4sHBB16sI')

class ModelFormatError(Exception):
    """Raised when serialized weights cannot be decoded."""

class FeatureSetMismatchError(Exception):
    """Raised when a model and a pipeline disagree on the feature vector layout."""

class TrainingError(Exception):
    """Raised when training cannot start."""

class FeatureSet(IntEnum):
    BASE = 0
    RESPIRATION = 1
    FILLERS = 2
    BOTH = 3

    @classmethod
    def from_flags(cls, respiration=False, fillers=False):
        return cls(int(bool(respiration)) | int(bool(fillers)) << 1)

    @classmethod
    def from_name(cls, name):
        names = {'base': cls.BASE, '+resp': cls.RESPIRATION, '+fillers': cls.FILLERS, '+both': cls.BOTH}
        try:
            return names[name]
        except KeyError:
            raise ValueError(f'Unknown feature set {name!r}; expected one of {", ".join(names)}')

    @property
    def label(self):
        return ('base', '+resp', '+fillers', '+both')[self]

    @property
    def respiration(self):
        return bool(self & 1)

    @property
    def fillers(self):
        return bool(self & 2)

    @property
    def names(self):
        names = list(BASE_FEATURES)
        if self.respiration:
            names.append(RESPIRATION_FEATURE)
        if self.fillers:
            names.append(FILLER_FEATURE)
        return tuple(names)

    @property
    def size(self):
        return len(self.names)

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    feature_set: FeatureSet = FeatureSet.BASE
    hidden_layers: tuple = HIDDEN_LAYERS

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1 or self.eps <= 0:
            raise ValueError('Training hyper-parameters must be positive.')
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError('Adam betas must lie in [0, 1).')

    def digest(self):
        """16-byte hash of the configuration, stored with trained weights."""
        payload = json.dumps({**asdict(self), 'feature_set': int(self.feature_set)}, sort_keys=True)
        return hashlib.blake2b(payload.encode(), digest_size=16).digest()

@dataclass(frozen=True, eq=False)
class ModelParams:
    """
    Weights use the (out_features, in_features) layout, so layer l computes
    h @ weights[l].T + biases[l].
    """
    weights: tuple
    biases: tuple
    norm_mean: np.ndarray
    norm_std: np.ndarray
    feature_set: FeatureSet = FeatureSet.BASE
    config_hash: bytes = field(default=bytes(16))

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError('Need one bias vector per weight matrix.')
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0], ):
                raise ValueError(f'Layer {i}: weight {w.shape} and bias {b.shape} do not match')
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f'Layer {i} expects {w.shape[1]} inputs, previous layer gives '
                                 f'{self.weights[i - 1].shape[0]}')
        if self.weights[-1].shape[0] != 1:
            raise ValueError('Output layer must have a single unit.')
        if self.norm_mean.shape != (self.input_size, ) or self.norm_std.shape != (self.input_size, ):
            raise ValueError('Normalization statistics do not match the input size.')
        if np.any(self.norm_std <= 0):
            raise ValueError('Normalization std must be positive.')
        if len(self.config_hash) != 16:
            raise ValueError('Configuration hash must be 16 bytes.')

    @property
    def input_size(self):
        return self.weights[0].shape[1]

    @property
    def layer_sizes(self):
        return (self.input_size, ) + tuple(w.shape[0] for w in self.weights)

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        arrays = zip(self.weights + self.biases + (self.norm_mean, self.norm_std),
                     other.weights + other.biases + (other.norm_mean, other.norm_std))
        return (self.layer_sizes == other.layer_sizes and self.feature_set == other.feature_set
                and self.config_hash == other.config_hash and all(np.array_equal(a, b) for a, b in arrays))

@dataclass(frozen=True, eq=False)
class TrainResult:
    params: ModelParams
    # Mean squared error on the training set after each epoch
    losses: list
    rejected_rows: int = 0

def forward_batch(params, features):
    """
    Evaluate the network on a batch of feature vectors.

    :param params: ModelParams
    :param features: Array (n, input_size)
    :return: Array (n,) of unclamped estimates
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.input_size:
        raise FeatureSetMismatchError(f'Expected {params.input_size} features, got {x.shape[-1]}')
    h = (x - params.norm_mean) / params.norm_std
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        h = np.maximum(h @ w.T + b, 0.0)
    return (h @ params.weights[-1].T + params.biases[-1])[:, 0]

def forward(params, x):
    """Estimate workload for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise FeatureSetMismatchError('Expected a one-dimensional feature vector')
    return float(forward_batch(params, x[np.newaxis, :])[0])

def build_network(layer_sizes, generator):
    """
    ReLU multilayer perceptron in float64 with a linear output. Layers are
    initialized uniformly in +/- 1/sqrt(fan_in) from `generator`.
    """
    layers = []
    for i, (n_in, n_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
        linear = torch.nn.Linear(n_in, n_out).double()
        bound = 1.0 / np.sqrt(n_in)
        with torch.no_grad():
            linear.weight.copy_(torch.rand(n_out, n_in, generator=generator, dtype=torch.float64) * 2 * bound - bound)
            linear.bias.copy_(torch.rand(n_out, generator=generator, dtype=torch.float64) * 2 * bound - bound)
        layers.append(linear)
        if i < len(layer_sizes) - 2:
            layers.append(torch.nn.ReLU())
    return torch.nn.Sequential(*layers)

def _linear_layers(net):
    return [m for m in net if isinstance(m, torch.nn.Linear)]

def to_network(params):
    """Torch module computing the same function as `forward_batch`, normalization excluded."""
    net = build_network(params.layer_sizes, torch.Generator().manual_seed(0))
    with torch.no_grad():
        for linear, w, b in zip(_linear_layers(net), params.weights, params.biases):
            linear.weight.copy_(torch.from_numpy(w))
            linear.bias.copy_(torch.from_numpy(b))
    return net

def loss_gradients(params, features, labels):
    """
    Mean squared error of `params` on a batch and its gradient with respect to
    every weight and bias, by automatic differentiation.

    :return: Tuple (loss, weight gradients, bias gradients)
    """
    net = to_network(params)
    x = torch.from_numpy((np.asarray(features, dtype=np.float64) - params.norm_mean) / params.norm_std)
    y = torch.from_numpy(np.asarray(labels, dtype=np.float64))
    loss = torch.nn.functional.mse_loss(net(x)[:, 0], y)
    loss.backward()
    linears = _linear_layers(net)
    return (float(loss), [m.weight.grad.numpy().copy() for m in linears],
            [m.bias.grad.numpy().copy() for m in linears])

def _export(net, scaler, cfg):
    linears = _linear_layers(net)
    return ModelParams(
        weights=tuple(m.weight.detach().numpy().copy() for m in linears),
        biases=tuple(m.bias.detach().numpy().copy() for m in linears),
        norm_mean=scaler.mean_.astype(np.float64),
        norm_std=scaler.scale_.astype(np.float64),
        feature_set=cfg.feature_set,
        config_hash=cfg.digest(),
    )

def fit(features, labels, cfg=TrainConfig()):
    """
    Train a regressor with mini-batch Adam on mean squared error.

    Rows with non-finite values are dropped and counted. Normalization
    statistics come from the training rows only. Initialization and per-epoch
    shuffling draw from one generator seeded with `cfg.seed`, so equal inputs
    give bit-identical parameters.

    :param features: Array (n, cfg.feature_set.size)
    :param labels: Array (n,)
    :param cfg: TrainConfig
    :return: TrainResult
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or len(x) != len(y):
        raise TrainingError(f'Feature matrix {x.shape} does not match {len(y)} labels')
    if x.shape[1] != cfg.feature_set.size:
        raise FeatureSetMismatchError(f'Feature set {cfg.feature_set.label} has {cfg.feature_set.size} '
                                      f'features, data has {x.shape[1]}')
    finite = np.isfinite(x).all(axis=1) & np.isfinite(y)
    rejected = int(len(y) - finite.sum())
    if rejected:
        logger.warning('Rejected %d training row(s) with non-finite values', rejected)
    x, y = x[finite], y[finite]
    if not len(y):
        raise TrainingError('No training data')

    scaler = StandardScaler().fit(x)
    inputs = torch.from_numpy(scaler.transform(x))
    targets = torch.from_numpy(y)
    generator = torch.Generator().manual_seed(cfg.seed)
    net = build_network((x.shape[1], ) + tuple(cfg.hidden_layers) + (1, ), generator)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps)

    losses = []
    for epoch in range(cfg.epochs):
        order = torch.randperm(len(targets), generator=generator)
        for lo in range(0, len(order), cfg.batch_size):
            batch = order[lo:lo + cfg.batch_size]
            optimizer.zero_grad()
            loss = torch.nn.functional.mse_loss(net(inputs[batch])[:, 0], targets[batch])
            loss.backward()
            optimizer.step()
        with torch.no_grad():
            losses.append(float(torch.nn.functional.mse_loss(net(inputs)[:, 0], targets)))
        logger.debug('Epoch %d/%d: loss %.6f', epoch + 1, cfg.epochs, losses[-1])
    logger.info('Trained on %d rows for %d epochs, final RMSE %.4f', len(y), cfg.epochs, np.sqrt(losses[-1]))
    return TrainResult(_export(net, scaler, cfg), losses, rejected)

def train(features, labels, cfg=TrainConfig()):
    return fit(features, labels, cfg).params

def save(params):
    """
    Serialize parameters: a fixed header (magic, version, feature-set id,
    layer count, config hash, reserved), little-endian uint32 layer sizes, then
    little-endian float64 weights and biases per layer followed by the
    normalization mean and std.

    :return: bytes
    """
    sizes = params.layer_sizes
    parts = [HEADER.pack(MAGIC, FORMAT_VERSION, int(params.feature_set), len(sizes), params.config_hash, 0),
             np.asarray(sizes, dtype='<u4').tobytes()]
    for w, b in zip(params.weights, params.biases):
        parts.append(np.ascontiguousarray(w, dtype='<f8').tobytes())
        parts.append(np.ascontiguousarray(b, dtype='<f8').tobytes())
    parts.append(np.ascontiguousarray(params.norm_mean, dtype='<f8').tobytes())
    parts.append(np.ascontiguousarray(params.norm_std, dtype='<f8').tobytes())
    return b''.join(parts)

def load(data, expected=None):
    """
    Decode parameters written by `save`.

    :param data: bytes
    :param expected: Optional FeatureSet the caller's pipeline produces
    :return: ModelParams
    """
    if len(data) < HEADER.size:
        raise ModelFormatError('Model file truncated: header incomplete')
    magic, version, feature_id, n_sizes, config_hash, _ = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError(f'Not a model file: bad magic {magic!r}')
    if version != FORMAT_VERSION:
        raise ModelFormatError(f'Unsupported model format version {version} (expected {FORMAT_VERSION})')
    try:
        feature_set = FeatureSet(feature_id)
    except ValueError:
        raise ModelFormatError(f'Unknown feature-set id {feature_id}')
    offset = HEADER.size
    if n_sizes < 2 or len(data) < offset + 4 * n_sizes:
        raise ModelFormatError('Model file truncated: layer sizes incomplete')
    sizes = [int(s) for s in np.frombuffer(data, dtype='<u4', count=n_sizes, offset=offset)]
    offset += 4 * n_sizes
    expected_len = offset + 8 * (sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:])) + 2 * sizes[0])
    if len(data) != expected_len:
        raise ModelFormatError(f'Model file is {len(data)} bytes, layer sizes imply {expected_len}')

    def take(count, shape):
        nonlocal offset
        array = np.frombuffer(data, dtype='<f8', count=count, offset=offset).astype(np.float64).reshape(shape)
        offset += 8 * count
        return array

    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        weights.append(take(n_in * n_out, (n_out, n_in)))
        biases.append(take(n_out, (n_out, )))
    norm_mean = take(sizes[0], (sizes[0], ))
    norm_std = take(sizes[0], (sizes[0], ))
    if sizes[0] != feature_set.size:
        raise ModelFormatError(f'Feature set {feature_set.label} has {feature_set.size} features, '
                               f'model input is {sizes[0]}')
    if expected is not None and FeatureSet(expected) != feature_set:
        raise FeatureSetMismatchError(f'Model was trained on feature set {feature_set.label} '
                                      f'({feature_set.size} features), pipeline produces '
                                      f'{FeatureSet(expected).label} ({FeatureSet(expected).size} features)')
    try:
        return ModelParams(tuple(weights), tuple(biases), norm_mean, norm_std, feature_set, config_hash)
    except ValueError as e:
        raise ModelFormatError(str(e))

def save_file(path, params):
    with open(path, 'wb') as f:
        f.write(save(params))

def load_file(path, expected=None):
    with open(path, 'rb') as f:
        return load(f.read(), expected)
