# ====================================
#  ISOVIST SEQUENCE VAE  🧠
# ====================================
"""
Convolutional-recurrent variational auto-encoder over isovist sequences.

Encoder, per frame:  conv 3x3 + relu -> maxpool2 -> conv 3x3 + relu -> maxpool2
                     -> flatten; a GRU reads the t flattened frames in time
                     order and its last state feeds dense mu / logvar heads.
Decoder:             dense z -> first GRU input; the GRU runs t steps from a
                     zero state, each step's input being the previous step's
                     output. Every hidden state maps through a dense layer to a
                     (filters, ceil(W/4), ceil(W/4)) block, then
                     upsample2 + crop + conv + relu twice and a 1-channel conv
                     whose logits (clipped to +-30) go through a sigmoid.

Parameters live in one name -> array dict; param_shapes fixes their order.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np
from django.conf import settings

from neuralnet.gru import (
    GruParams, accumulate, gru_sequence_backward, gru_sequence_forward, gru_step_backward, gru_step_forward,
)
from neuralnet.layers import (
    activation_backward, activation_forward, conv2d_backward, conv2d_forward, crop_backward,
    crop_forward, dense_backward, dense_forward, maxpool2_backward, maxpool2_forward, sigmoid,
    upsample2_backward, upsample2_forward,
)
from neuralnet.losses import bce_backward, bce_loss, kl_backward, kl_diag_gaussian
from sequences.extract import IsovistSequence
from utils.exceptions import InvalidParams, ShapeMismatch

logger = logging.getLogger(__name__)

FILTERS = 10
LOGIT_CLIP = 30.0
MIN_WINDOW = 5


@dataclass(frozen=True)
class VaeConfig:
    t: int
    window: int
    latent_dim: int = 1
    gru_hidden: int = 250
    beta: float = 1.0
    filters: int = FILTERS

    def __post_init__(self):
        if self.t < 1 or self.t % 2 == 0:
            raise InvalidParams(f"Sequence length t must be odd and >= 1, got {self.t}")
        if self.window < MIN_WINDOW:
            raise InvalidParams(f"Window size must be >= {MIN_WINDOW}, got {self.window}")
        if self.latent_dim < 1:
            raise InvalidParams(f"Latent dimension must be >= 1, got {self.latent_dim}")
        if self.gru_hidden < 1 or self.filters < 1:
            raise InvalidParams("GRU hidden size and filter count must be positive")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise InvalidParams(f"KL weight must be finite and >= 0, got {self.beta}")

    @classmethod
    def from_settings(cls, t, window, **overrides):
        values = dict(
            latent_dim=settings.LATENT_DIM,
            gru_hidden=settings.GRU_HIDDEN,
            beta=settings.KL_WEIGHT,
        )
        values.update(overrides)
        return cls(t=t, window=window, **values)

    @property
    def pooled_once(self):
        return -(-self.window // 2)

    @property
    def pooled_twice(self):
        return -(-self.pooled_once // 2)

    @property
    def flat_size(self):
        return self.filters * self.pooled_twice ** 2

    @property
    def frame_elements(self):
        return self.t * self.window * self.window

    def __str__(self):
        return (f"VaeConfig t={self.t} W={self.window} d={self.latent_dim} "
                f"hidden={self.gru_hidden} beta={self.beta}")


def param_shapes(config):
    """name -> shape in checkpoint order"""
    f, hidden, d = config.filters, config.gru_hidden, config.latent_dim
    shapes = {
        'enc_conv1_w': (f, 1, 3, 3), 'enc_conv1_b': (f,),
        'enc_conv2_w': (f, f, 3, 3), 'enc_conv2_b': (f,),
    }
    shapes.update(_gru_shapes('enc_gru_', config.flat_size, hidden))
    shapes.update({
        'enc_mu_w': (d, hidden), 'enc_mu_b': (d,),
        'enc_logvar_w': (d, hidden), 'enc_logvar_b': (d,),
        'dec_in_w': (hidden, d), 'dec_in_b': (hidden,),
    })
    shapes.update(_gru_shapes('dec_gru_', hidden, hidden))
    shapes.update({
        'dec_feat_w': (config.flat_size, hidden), 'dec_feat_b': (config.flat_size,),
        'dec_conv1_w': (f, f, 3, 3), 'dec_conv1_b': (f,),
        'dec_conv2_w': (f, f, 3, 3), 'dec_conv2_b': (f,),
        'dec_out_w': (1, f, 3, 3), 'dec_out_b': (1,),
    })
    return shapes


def _gru_shapes(prefix, input_size, hidden):
    return {f'{prefix}{name}': value.shape for name, value in GruParams.zeros(input_size, hidden).tensors().items()}


def param_names(config):
    return list(param_shapes(config))


def _is_bias(name):
    return name.endswith('_b') or name.rsplit('_', 1)[-1] in ('bz', 'br', 'bh')


def _glorot(rng, shape):
    if len(shape) == 4:
        fan_out, fan_in = shape[0] * 9, shape[1] * 9
    else:
        fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass(frozen=True)
class LatentCode:
    mu: np.ndarray
    logvar: np.ndarray

    @property
    def dim(self):
        return self.mu.shape[-1]


@dataclass(frozen=True)
class LossTerms:
    loss: float
    bce: float
    kl: float   # mean per-sequence KL, before weighting


class VaeModel:
    def __init__(self, config, params):
        self.config = config
        expected = param_shapes(config)
        if set(params) != set(expected):
            raise ShapeMismatch(f"Parameter names do not match {config}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ShapeMismatch(f"{name} has shape {params[name].shape}, expected {shape}")
        self.params = {name: np.asarray(params[name], dtype=np.float64) for name in expected}

    @classmethod
    def initialize(cls, config, seed):
        """Glorot-uniform weights and zero biases from ``seed``"""
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), config.window, config.t]))
        params = {}
        for name, shape in param_shapes(config).items():
            params[name] = np.zeros(shape) if _is_bias(name) else _glorot(rng, shape)
        model = cls(config, params)
        logger.info(f"Initialized {model} (seed={seed})")
        return model

    @property
    def parameter_count(self):
        return sum(value.size for value in self.params.values())

    def copy(self):
        return VaeModel(self.config, {name: value.copy() for name, value in self.params.items()})

    def __str__(self):
        return f"VaeModel({self.config}, {self.parameter_count} parameters)"


# ====================================
#  INPUT SHAPING
# ====================================
def as_batch(config, data):
    """(N, t, W, W) float64 from sequences, a (t, W, W) / (t, 1, W, W) frame stack or a batch"""
    if isinstance(data, IsovistSequence):
        data = data.frames[None]
    elif isinstance(data, (list, tuple)):
        data = np.stack([item.frames if isinstance(item, IsovistSequence) else item for item in data])
    batch = np.asarray(data, dtype=np.float64)
    if batch.ndim == 5 and batch.shape[2] == 1:
        batch = batch[:, :, 0]
    elif batch.ndim == 4 and batch.shape[1] == 1 and config.t != 1:
        batch = batch[:, 0][None]
    elif batch.ndim == 3:
        batch = batch[None]
    expected = (config.t, config.window, config.window)
    if batch.ndim != 4 or batch.shape[1:] != expected:
        raise ShapeMismatch(f"Expected frames shaped {expected}, got {np.shape(data)}")
    return batch


# ====================================
#  ENCODER
# ====================================
def encoder_forward(params, config, batch):
    n = batch.shape[0]
    frames = batch.reshape(n * config.t, 1, config.window, config.window)

    conv1, conv1_cache = conv2d_forward(frames, params['enc_conv1_w'], params['enc_conv1_b'])
    act1, act1_cache = activation_forward(conv1, 'relu')
    pool1, pool1_cache = maxpool2_forward(act1)
    conv2, conv2_cache = conv2d_forward(pool1, params['enc_conv2_w'], params['enc_conv2_b'])
    act2, act2_cache = activation_forward(conv2, 'relu')
    pool2, pool2_cache = maxpool2_forward(act2)

    steps = pool2.reshape(n, config.t, config.flat_size).transpose(1, 0, 2)
    gru = GruParams.from_tensors(params, 'enc_gru_')
    hs, gru_caches = gru_sequence_forward(steps, np.zeros((n, config.gru_hidden)), gru)

    mu, mu_cache = dense_forward(hs[-1], params['enc_mu_w'], params['enc_mu_b'])
    logvar, logvar_cache = dense_forward(hs[-1], params['enc_logvar_w'], params['enc_logvar_b'])

    cache = (pool2.shape, hs.shape, conv1_cache, act1_cache, pool1_cache, conv2_cache, act2_cache,
             pool2_cache, gru_caches, mu_cache, logvar_cache)
    return LatentCode(mu, logvar), cache


def encoder_backward(dmu, dlogvar, cache):
    (pool2_shape, hs_shape, conv1_cache, act1_cache, pool1_cache, conv2_cache, act2_cache,
     pool2_cache, gru_caches, mu_cache, logvar_cache) = cache
    grads = {}

    dh_mu, grads['enc_mu_w'], grads['enc_mu_b'] = dense_backward(dmu, mu_cache)
    dh_logvar, grads['enc_logvar_w'], grads['enc_logvar_b'] = dense_backward(dlogvar, logvar_cache)
    dhs = np.zeros(hs_shape)
    dhs[-1] = dh_mu + dh_logvar
    dsteps, _, gru_grads = gru_sequence_backward(dhs, gru_caches)
    grads.update(gru_grads.tensors('enc_gru_'))

    dpool2 = dsteps.transpose(1, 0, 2).reshape(pool2_shape)
    dconv2 = activation_backward(maxpool2_backward(dpool2, pool2_cache), act2_cache)
    dpool1, grads['enc_conv2_w'], grads['enc_conv2_b'] = conv2d_backward(dconv2, conv2_cache)
    dconv1 = activation_backward(maxpool2_backward(dpool1, pool1_cache), act1_cache)
    _, grads['enc_conv1_w'], grads['enc_conv1_b'] = conv2d_backward(dconv1, conv1_cache)
    return grads


# ====================================
#  DECODER
# ====================================
def decoder_forward(params, config, z):
    """Probabilities shaped (N, t, W, W) for codes shaped (N, d)"""
    n = z.shape[0]
    if z.shape[1:] != (config.latent_dim,):
        raise ShapeMismatch(f"Latent codes must have dimension {config.latent_dim}, got {z.shape}")
    gru = GruParams.from_tensors(params, 'dec_gru_')

    x, in_cache = dense_forward(z, params['dec_in_w'], params['dec_in_b'])
    h = np.zeros((n, config.gru_hidden))
    hs, gru_caches = [], []
    for _ in range(config.t):
        h, step_cache = gru_step_forward(x, h, gru)
        hs.append(h)
        gru_caches.append(step_cache)
        x = h

    hidden = np.stack(hs, axis=1).reshape(n * config.t, config.gru_hidden)
    feat, feat_cache = dense_forward(hidden, params['dec_feat_w'], params['dec_feat_b'])
    block = feat.reshape(n * config.t, config.filters, config.pooled_twice, config.pooled_twice)

    up1, up1_cache = upsample2_forward(block)
    crop1, crop1_cache = crop_forward(up1, config.pooled_once, config.pooled_once)
    conv1, conv1_cache = conv2d_forward(crop1, params['dec_conv1_w'], params['dec_conv1_b'])
    act1, act1_cache = activation_forward(conv1, 'relu')
    up2, up2_cache = upsample2_forward(act1)
    crop2, crop2_cache = crop_forward(up2, config.window, config.window)
    conv2, conv2_cache = conv2d_forward(crop2, params['dec_conv2_w'], params['dec_conv2_b'])
    act2, act2_cache = activation_forward(conv2, 'relu')
    logits, out_cache = conv2d_forward(act2, params['dec_out_w'], params['dec_out_b'])

    clipped = np.clip(logits, -LOGIT_CLIP, LOGIT_CLIP)
    probs = sigmoid(clipped)
    cache = (config, in_cache, gru_caches, feat_cache, block.shape, up1_cache, crop1_cache, conv1_cache,
             act1_cache, up2_cache, crop2_cache, conv2_cache, act2_cache, out_cache, logits, probs)
    return probs.reshape(n, config.t, config.window, config.window), cache


def decoder_backward(dprobs, cache):
    """Returns (dz, grads)"""
    (config, in_cache, gru_caches, feat_cache, block_shape, up1_cache, crop1_cache, conv1_cache,
     act1_cache, up2_cache, crop2_cache, conv2_cache, act2_cache, out_cache, logits, probs) = cache
    n = dprobs.shape[0]
    grads = {}

    dlogits = dprobs.reshape(probs.shape) * probs * (1.0 - probs) * (np.abs(logits) <= LOGIT_CLIP)
    dact2, grads['dec_out_w'], grads['dec_out_b'] = conv2d_backward(dlogits, out_cache)
    dcrop2, grads['dec_conv2_w'], grads['dec_conv2_b'] = conv2d_backward(
        activation_backward(dact2, act2_cache), conv2_cache)
    dact1 = upsample2_backward(crop_backward(dcrop2, crop2_cache), up2_cache)
    dcrop1, grads['dec_conv1_w'], grads['dec_conv1_b'] = conv2d_backward(
        activation_backward(dact1, act1_cache), conv1_cache)
    dblock = upsample2_backward(crop_backward(dcrop1, crop1_cache), up1_cache)

    dhidden, grads['dec_feat_w'], grads['dec_feat_b'] = dense_backward(
        dblock.reshape(n * config.t, -1), feat_cache)
    dhs = dhidden.reshape(n, config.t, config.gru_hidden)

    total = GruParams.zeros(config.gru_hidden, config.gru_hidden)
    carry = np.zeros((n, config.gru_hidden))
    dx0 = None
    for k in reversed(range(config.t)):
        dx, dh_prev, step_grads = gru_step_backward(dhs[:, k] + carry, gru_caches[k])
        accumulate(total, step_grads)
        if k == 0:
            dx0 = dx
        else:
            # input of step k is the state of step k - 1
            carry = dh_prev + dx
    grads.update(total.tensors('dec_gru_'))

    dz, grads['dec_in_w'], grads['dec_in_b'] = dense_backward(dx0, in_cache)
    return dz, grads


# ====================================
#  PUBLIC OPERATIONS
# ====================================
def encode(model, data):
    """LatentCode for one sequence (mu shaped (d,)) or a batch (mu shaped (N, d))"""
    batch = as_batch(model.config, data)
    code, _ = encoder_forward(model.params, model.config, batch)
    if _is_single(model.config, data):
        return LatentCode(code.mu[0], code.logvar[0])
    return code


def _is_single(config, data):
    if isinstance(data, IsovistSequence):
        return True
    if isinstance(data, (list, tuple)):
        return False
    return np.ndim(data) == 3 or (np.ndim(data) == 4 and np.shape(data)[1] == 1 and config.t != 1)


def reparameterize(code, noise=None, train_mode=False):
    """z = mu + exp(logvar / 2) * noise when training, z = mu otherwise"""
    if not train_mode or noise is None:
        return np.array(code.mu, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != np.shape(code.mu):
        raise ShapeMismatch(f"Noise {noise.shape} does not match latent {np.shape(code.mu)}")
    return code.mu + np.exp(0.5 * code.logvar) * noise


def decode(model, z):
    """Probabilities shaped (t, 1, W, W) for z shaped (d,), or (N, t, 1, W, W) for (N, d)"""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    probs, _ = decoder_forward(model.params, model.config, z[None] if single else z)
    probs = probs[:, :, None]
    return probs[0] if single else probs


def predict_latent(model, data):
    """Deterministic latent (the posterior mean)"""
    return reparameterize(encode(model, data), train_mode=False)


def predict_latents(model, sequences, batch_size=256):
    """(N, d) latent means for many sequences, encoded in chunks"""
    sequences = list(sequences)
    if not sequences:
        return np.zeros((0, model.config.latent_dim))
    chunks = [
        encode(model, sequences[start:start + batch_size]).mu
        for start in range(0, len(sequences), batch_size)
    ]
    return np.concatenate(chunks)


def reconstruct(model, data):
    """Decoder output for the latent mean of each input, shaped like the input batch (N, t, W, W)"""
    batch = as_batch(model.config, data)
    code, _ = encoder_forward(model.params, model.config, batch)
    probs, _ = decoder_forward(model.params, model.config, code.mu)
    return probs[0] if _is_single(model.config, data) else probs


def elbo_terms(params, config, batch, noise=None, beta=None):
    """
    Loss and gradients for raw parameters:

        bce  = mean binary cross entropy over every frame pixel of the batch
        kl   = mean per-sequence KL(q(z|x) || N(0, I))
        loss = bce + beta * kl / (t * W * W)

    ``noise`` (N, d) draws the reparameterized sample; None decodes mu.
    """
    beta = config.beta if beta is None else beta
    batch = as_batch(config, batch)
    n = batch.shape[0]

    code, encoder_cache = encoder_forward(params, config, batch)
    noise = np.zeros_like(code.mu) if noise is None else np.asarray(noise, dtype=np.float64)
    if noise.shape != code.mu.shape:
        raise ShapeMismatch(f"Noise {noise.shape} does not match latent batch {code.mu.shape}")
    std = np.exp(0.5 * code.logvar)
    z = code.mu + std * noise

    probs, decoder_cache = decoder_forward(params, config, z)
    bce, bce_cache = bce_loss(probs, batch)
    kl = kl_diag_gaussian(code.mu, code.logvar)
    kl_scale = beta / config.frame_elements
    loss = bce + kl_scale * float(np.mean(kl))

    dz, grads = decoder_backward(bce_backward(bce_cache), decoder_cache)
    dmu_kl, dlogvar_kl = kl_backward(code.mu, code.logvar, np.full(n, kl_scale / n))
    dmu = dz + dmu_kl
    dlogvar = dz * noise * 0.5 * std + dlogvar_kl
    grads.update(encoder_backward(dmu, dlogvar, encoder_cache))

    return LossTerms(loss=float(loss), bce=float(bce), kl=float(np.mean(kl))), grads


def elbo_loss(model, batch, noise=None, beta=None):
    return elbo_terms(model.params, model.config, batch, noise, beta)
