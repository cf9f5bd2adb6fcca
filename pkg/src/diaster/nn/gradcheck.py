from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Tensor, grad

# denominators below this are treated as "both gradients are zero"
_FLOOR = 1e-7


def numeric_grad(
    f: Callable[[], Tensor], p: Tensor, eps: float, index: np.ndarray | None = None
) -> np.ndarray:
    """Central differences of ``f`` w.r.t. entries of ``p`` (all, or ``index``)."""
    if not p.data.flags.c_contiguous:
        p.data = p.data.copy()
    flat = p.data.reshape(-1)
    idx = np.arange(flat.size) if index is None else index
    out = np.empty(len(idx))
    for j, i in enumerate(idx):
        old = flat[i]
        flat[i] = old + eps
        up = f().item()
        flat[i] = old - eps
        down = f().item()
        flat[i] = old
        out[j] = (up - down) / (2.0 * eps)
    return out


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    num = np.linalg.norm(analytic - numeric)
    den = max(np.linalg.norm(analytic), np.linalg.norm(numeric), _FLOOR)
    return float(num / den)


def grad_check(
    f: Callable[[], Tensor],
    params: dict[str, Tensor],
    eps: float = 1e-5,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Largest relative error between tape and finite-difference gradients.

    ``f`` must rebuild the loss from the current parameter values on every
    call. The error for one parameter array is ||a - n|| / max(||a||, ||n||);
    the result is the max over arrays. ``max_entries`` subsamples large arrays.
    """
    if not 0 < eps <= 1e-2:
        raise ValueError("eps must lie in (0, 1e-2]")
    rng = rng if rng is not None else np.random.default_rng(0)
    analytic = grad(f(), params)
    worst = 0.0
    for k, p in params.items():
        size = p.data.size
        index = None
        if max_entries is not None and size > max_entries:
            index = np.sort(rng.choice(size, size=max_entries, replace=False))
        a = analytic[k].reshape(-1)
        a = a if index is None else a[index]
        worst = max(worst, relative_error(a, numeric_grad(f, p, eps, index)))
    return worst
