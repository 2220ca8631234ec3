"""Central finite-difference verification of analytic gradients.

Works on any dict of named parameter arrays plus a zero-argument loss
callable that reflects in-place perturbations of those arrays.  Entries that
are not finite (e.g. masked transitions) are skipped: they are structural,
not trainable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np


def relative_error(analytic: float, numeric: float, floor: float = 1e-8) -> float:
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), floor)


@dataclass
class GradCheckReport:
    per_param: dict[str, float]
    worst_param: str
    max_rel_err: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_rel_err < self.tolerance

    def summary(self) -> str:
        lines = [
            f"{name}: max rel err {err:.3e}" for name, err in self.per_param.items()
        ]
        verdict = "OK" if self.ok else "FAIL"
        lines.append(
            f"overall max {self.max_rel_err:.3e} at {self.worst_param} "
            f"(tolerance {self.tolerance:g}): {verdict}"
        )
        return "\n".join(lines)


def grad_check(
    params: Mapping[str, np.ndarray],
    loss_fn: Callable[[], float],
    analytic: Mapping[str, np.ndarray],
    step: float = 1e-5,
    tolerance: float = 1e-4,
) -> GradCheckReport:
    """Compare ``analytic`` gradients against central differences of ``loss_fn``.

    Every finite entry of every parameter is perturbed by +-``step`` in place
    (and restored), so this costs two loss evaluations per scalar parameter.
    """
    per_param: dict[str, float] = {}
    worst_param = ""
    worst = 0.0
    for name, arr in params.items():
        grad = analytic[name]
        if grad.shape != arr.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        err = 0.0
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for j in range(flat.size):
            v = flat[j]
            if not np.isfinite(v):
                continue
            flat[j] = v + step
            plus = loss_fn()
            flat[j] = v - step
            minus = loss_fn()
            flat[j] = v
            numeric = (plus - minus) / (2.0 * step)
            err = max(err, relative_error(float(gflat[j]), numeric))
        per_param[name] = err
        if err >= worst:
            worst = err
            worst_param = name
    return GradCheckReport(
        per_param=per_param,
        worst_param=worst_param,
        max_rel_err=worst,
        tolerance=tolerance,
    )
