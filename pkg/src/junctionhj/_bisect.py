from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import BisectionBudgetExceeded

MAX_ITER = 200
_EPS = float(np.finfo(float).eps)


def bisect_boundary(
    pred: Callable[[float], bool],
    lo: float,
    hi: float,
    tol: float = 0.0,
    max_iter: int = MAX_ITER,
) -> tuple[float, float, int]:
    """Shrink ``[lo, hi]`` around the point where ``pred`` switches to True.

    ``pred`` must be monotone (False then True) with ``pred(hi)`` True; the
    value at ``lo`` is never evaluated. Iterates until the bracket is no wider
    than ``tol`` or a few ulps, whichever is larger.
    """
    n = 0
    while hi - lo > max(tol, 4.0 * _EPS * max(1.0, abs(lo), abs(hi))):
        if n >= max_iter:
            raise BisectionBudgetExceeded(
                f"bisection did not converge in {max_iter} iterations on [{lo!r}, {hi!r}]"
            )
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
        n += 1
    return lo, hi, n
