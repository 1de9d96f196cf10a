# ====================================
#  GATED RECURRENT UNIT  🔁
# ====================================
"""
GRU cell with hand-derived backpropagation through time.

    z  = sigmoid(Wz x + Uz h_prev + bz)          update gate
    r  = sigmoid(Wr x + Ur h_prev + br)          reset gate
    hc = tanh(Wh x + Uh (r * h_prev) + bh)       candidate state
    h  = (1 - z) * h_prev + z * hc

x is (n,) or (N, n); h is (H,) or (N, H). W* are (H, n), U* are (H, H).
"""
from dataclasses import dataclass, fields
import logging

import numpy as np

from utils.exceptions import ShapeMismatch
from .layers import sigmoid

logger = logging.getLogger(__name__)

GRU_FIELDS = ('wz', 'uz', 'bz', 'wr', 'ur', 'br', 'wh', 'uh', 'bh')


@dataclass
class GruParams:
    wz: np.ndarray
    uz: np.ndarray
    bz: np.ndarray
    wr: np.ndarray
    ur: np.ndarray
    br: np.ndarray
    wh: np.ndarray
    uh: np.ndarray
    bh: np.ndarray

    @property
    def input_size(self):
        return self.wz.shape[1]

    @property
    def hidden_size(self):
        return self.wz.shape[0]

    def validate(self):
        n, hidden = self.input_size, self.hidden_size
        for gate in 'zrh':
            w, u, b = getattr(self, f'w{gate}'), getattr(self, f'u{gate}'), getattr(self, f'b{gate}')
            if w.shape != (hidden, n) or u.shape != (hidden, hidden) or b.shape != (hidden,):
                raise ShapeMismatch(
                    f"GRU gate {gate}: W {w.shape}, U {u.shape}, b {b.shape} "
                    f"inconsistent with input {n} / hidden {hidden}"
                )
        return self

    def tensors(self, prefix=''):
        """Flat name -> array mapping in GRU_FIELDS order"""
        return {f'{prefix}{f.name}': getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_tensors(cls, tensors, prefix=''):
        return cls(**{name: tensors[f'{prefix}{name}'] for name in GRU_FIELDS})

    @classmethod
    def zeros(cls, input_size, hidden_size):
        shapes = {'w': (hidden_size, input_size), 'u': (hidden_size, hidden_size), 'b': (hidden_size,)}
        return cls(**{name: np.zeros(shapes[name[0]]) for name in GRU_FIELDS})

    @classmethod
    def glorot(cls, rng, input_size, hidden_size):
        """Glorot-uniform weights, zero biases"""
        params = cls.zeros(input_size, hidden_size)
        for name in GRU_FIELDS:
            if name[0] == 'b':
                continue
            fan_out, fan_in = getattr(params, name).shape
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            setattr(params, name, rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        return params


def _check_inputs(x, h_prev, params):
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x.shape[-1] != params.input_size or h_prev.shape[-1] != params.hidden_size:
        raise ShapeMismatch(
            f"GRU step got x {x.shape} / h {h_prev.shape}, "
            f"expected input {params.input_size} / hidden {params.hidden_size}"
        )
    if x.shape[:-1] != h_prev.shape[:-1]:
        raise ShapeMismatch(f"GRU batch mismatch: x {x.shape} vs h {h_prev.shape}")
    return x, h_prev


def gru_step_forward(x, h_prev, params):
    x, h_prev = _check_inputs(x, h_prev, params)
    z = sigmoid(x @ params.wz.T + h_prev @ params.uz.T + params.bz)
    r = sigmoid(x @ params.wr.T + h_prev @ params.ur.T + params.br)
    reset_h = r * h_prev
    hc = np.tanh(x @ params.wh.T + reset_h @ params.uh.T + params.bh)
    h = (1.0 - z) * h_prev + z * hc
    cache = (x, h_prev, z, r, reset_h, hc, params)
    return h, cache


def _outer(a, b):
    return np.outer(a, b) if a.ndim == 1 else a.T @ b


def _bias_sum(a):
    return a.copy() if a.ndim == 1 else a.sum(axis=0)


def gru_step_backward(dh, cache):
    """
    Returns (dx, dh_prev, grads) where grads is a GruParams of gradients
    summed over the batch.
    """
    x, h_prev, z, r, reset_h, hc, params = cache

    dz = dh * (hc - h_prev)
    dhc = dh * z
    dh_prev = dh * (1.0 - z)

    da_h = dhc * (1.0 - hc * hc)
    d_reset_h = da_h @ params.uh
    dr = d_reset_h * h_prev
    dh_prev += d_reset_h * r

    da_z = dz * z * (1.0 - z)
    da_r = dr * r * (1.0 - r)

    dh_prev += da_z @ params.uz + da_r @ params.ur
    dx = da_z @ params.wz + da_r @ params.wr + da_h @ params.wh

    grads = GruParams(
        wz=_outer(da_z, x), uz=_outer(da_z, h_prev), bz=_bias_sum(da_z),
        wr=_outer(da_r, x), ur=_outer(da_r, h_prev), br=_bias_sum(da_r),
        wh=_outer(da_h, x), uh=_outer(da_h, reset_h), bh=_bias_sum(da_h),
    )
    return dx, dh_prev, grads


def gru_step(x, h_prev, params):
    return gru_step_forward(x, h_prev, params)[0]


def accumulate(total, grads):
    """Add GruParams ``grads`` into ``total`` in place"""
    for name in GRU_FIELDS:
        getattr(total, name)[...] += getattr(grads, name)
    return total


# ====================================
#  SEQUENCES
# ====================================
def gru_sequence_forward(xs, h0, params):
    """
    Run the cell over xs shaped (T, ..., n) starting from h0.
    Returns hidden states shaped (T, ..., H) and the per-step caches.
    """
    params.validate()
    hs = []
    caches = []
    h = h0
    for x in xs:
        h, cache = gru_step_forward(x, h, params)
        hs.append(h)
        caches.append(cache)
    return np.stack(hs), caches


def gru_sequence_backward(dhs, caches):
    """
    Backpropagation through time. ``dhs[k]`` is the loss gradient flowing
    into hidden state k from outside the recurrence (zeros where a state is
    not used). Returns (dxs, dh0, grads).
    """
    params = caches[0][-1]
    total = GruParams.zeros(params.input_size, params.hidden_size)
    dxs = [None] * len(caches)
    dh_next = np.zeros_like(dhs[-1])
    for k in reversed(range(len(caches))):
        dx, dh_next, grads = gru_step_backward(dhs[k] + dh_next, caches[k])
        dxs[k] = dx
        accumulate(total, grads)
    return np.stack(dxs), dh_next, total
