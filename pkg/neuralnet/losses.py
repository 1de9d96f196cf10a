# ====================================
#  LOSSES  📉
# ====================================
import logging

import numpy as np

from utils.exceptions import ShapeMismatch

logger = logging.getLogger(__name__)

BCE_EPSILON = 1e-7


def bce_loss(pred, target, epsilon=BCE_EPSILON):
    """
    Mean binary cross entropy over every element, predictions clamped
    to [epsilon, 1 - epsilon]. Returns (loss, cache).
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"Prediction {pred.shape} and target {target.shape} differ in shape")
    clamped = np.clip(pred, epsilon, 1.0 - epsilon)
    loss = -np.mean(target * np.log(clamped) + (1.0 - target) * np.log(1.0 - clamped))
    return float(loss), (pred, target, clamped)


def bce_backward(cache, dloss=1.0):
    """Gradient w.r.t. pred; zero where the clamp is active"""
    pred, target, clamped = cache
    inside = (pred == clamped)
    grad = -(target / clamped - (1.0 - target) / (1.0 - clamped)) / pred.size
    return dloss * grad * inside


def kl_diag_gaussian(mu, logvar):
    """
    KL(N(mu, exp(logvar)) || N(0, 1)) summed over the last axis: a scalar for
    one code, one value per row for a batch.
    """
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    if mu.shape != logvar.shape:
        raise ShapeMismatch(f"mu {mu.shape} and logvar {logvar.shape} differ in shape")
    kl = -0.5 * np.sum(1.0 + logvar - mu * mu - np.exp(logvar), axis=-1)
    return float(kl) if np.ndim(kl) == 0 else kl


def kl_backward(mu, logvar, dkl=1.0):
    """(dmu, dlogvar) for an upstream gradient per code"""
    dkl = np.asarray(dkl, dtype=np.float64)
    if dkl.ndim:
        dkl = dkl[..., None]
    return dkl * mu, dkl * 0.5 * (np.exp(logvar) - 1.0)
