# ====================================
#  GRADIENT CHECKING  🔬
# ====================================
"""
Central finite differences against analytic gradients.

``model_fn(params, inputs)`` must return ``(loss, grads)`` where params and
grads are name -> array mappings. For each tensor the relative error is

    ||analytic - numeric|| / max(||analytic|| + ||numeric||, atol)

over the checked entries, so tensors whose gradients are all far below
``atol`` are judged by their absolute error. An entry that disagrees at the
base step is re-estimated with a step ten times larger (less roundoff) and
ten times smaller (clear of a nearby ReLU kink). The first estimate in that
order that agrees is kept; if none does, the base-step estimate is reported.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
VANISHING_NORM = 1e-8


@dataclass
class GradCheckReport:
    tolerance: float
    errors: dict = field(default_factory=dict)
    checked: int = 0
    refined: int = 0

    @property
    def max_error(self):
        return max(self.errors.values(), default=0.0)

    @property
    def worst(self):
        return max(self.errors, key=self.errors.get) if self.errors else None

    @property
    def passed(self):
        return self.max_error < self.tolerance

    def __str__(self):
        status = 'passed' if self.passed else f'FAILED at {self.worst}'
        return (f"Gradient check {status}: max relative error {self.max_error:.3e} "
                f"over {self.checked} entries ({self.refined} refined)")


def relative_error(analytic, numeric, atol=0.0):
    analytic, numeric = np.ravel(analytic), np.ravel(numeric)
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if scale < VANISHING_NORM and atol == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / max(scale, atol, VANISHING_NORM))


def _agrees(analytic, numeric, tolerance, atol):
    return abs(analytic - numeric) <= tolerance * max(abs(analytic) + abs(numeric), atol)


def _numeric(model_fn, params, inputs, name, index, step):
    value = params[name]
    original = value[index]
    try:
        value[index] = original + step
        plus = model_fn(params, inputs)[0]
        value[index] = original - step
        minus = model_fn(params, inputs)[0]
    finally:
        value[index] = original
    return (plus - minus) / (2.0 * step)


def grad_check(model_fn, params, inputs=None, tolerance=1e-6, step=DEFAULT_STEP, max_checks=None, seed=0,
               atol=0.0):
    """
    Compare analytic and numeric gradients for every tensor in ``params``.
    With ``max_checks`` only that many randomly chosen entries per tensor
    are perturbed.
    """
    params = {name: np.array(value, dtype=np.float64) for name, value in params.items()}
    _, grads = model_fn(params, inputs)
    rng = np.random.default_rng(seed)
    report = GradCheckReport(tolerance=tolerance)

    for name, value in params.items():
        analytic_all = np.asarray(grads[name], dtype=np.float64)
        flat_indices = np.arange(value.size)
        if max_checks is not None and value.size > max_checks:
            flat_indices = np.sort(rng.choice(value.size, size=max_checks, replace=False))

        analytic = np.empty(len(flat_indices))
        numeric = np.empty(len(flat_indices))
        for k, flat in enumerate(flat_indices):
            index = np.unravel_index(flat, value.shape)
            analytic[k] = analytic_all[index]
            numeric[k] = _numeric(model_fn, params, inputs, name, index, step)
            if _agrees(analytic[k], numeric[k], tolerance, atol):
                continue
            for retry_step in (step * 10.0, step / 10.0):
                retry = _numeric(model_fn, params, inputs, name, index, retry_step)
                if _agrees(analytic[k], retry, tolerance, atol):
                    numeric[k] = retry
                    report.refined += 1
                    break

        report.errors[name] = relative_error(analytic, numeric, atol)
        report.checked += len(flat_indices)

    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, str(report))
    return report
