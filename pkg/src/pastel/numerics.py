"""Dense linear algebra and gradient checking shared by all other modules.

Matrices are plain 2-D ``float64`` numpy arrays throughout the package.
"""

from __future__ import annotations

import warnings
from collections.abc import Callable, Mapping

import numpy as np
import scipy.linalg

from .errors import ShapeMismatch, SingularMatrix

PIVOT_TOL = 1e-12


def solve_linear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` for a square nonsingular ``a``.

    Uses a partial-pivot LU factorization. Raises :class:`SingularMatrix`
    when any pivot magnitude falls to ``1e-12`` or below.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"coefficient matrix must be square, got {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ShapeMismatch(f"rhs has {b.shape[0]} rows, expected {a.shape[0]}")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
        raise ShapeMismatch("solve_linear requires finite inputs")
    with warnings.catch_warnings():
        # singularity is detected on the pivots below, not via the warning
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= PIVOT_TOL:
        raise SingularMatrix(
            f"pivot magnitude fell below {PIVOT_TOL:g} during elimination"
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def finite_diff_check(
    f: Callable[[Mapping[str, np.ndarray]], float],
    params: Mapping[str, np.ndarray],
    analytic: Mapping[str, np.ndarray],
    step: float = 1e-5,
) -> float:
    """Compare analytic gradients against central finite differences.

    ``f`` maps a parameter dict to a scalar; ``analytic`` holds the claimed
    gradient for each entry of ``params``. Returns the worst relative error
    ``|cd - a| / (max(|cd|, |a|) + 1e-8)`` over all coordinates. Reports,
    never raises.
    """
    work = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    worst = 0.0
    for name, values in work.items():
        grad = np.asarray(analytic[name], dtype=np.float64)
        if grad.shape != values.shape:
            raise ShapeMismatch(
                f"gradient shape {grad.shape} != parameter shape {values.shape}"
                f" for {name!r}"
            )
        flat = values.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = f(work)
            flat[i] = orig - step
            lo = f(work)
            flat[i] = orig
            central = (hi - lo) / (2.0 * step)
            denom = max(abs(central), abs(gflat[i])) + 1e-8
            worst = max(worst, abs(central - gflat[i]) / denom)
    return worst
