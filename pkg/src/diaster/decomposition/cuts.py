from __future__ import annotations

import numpy as np


def sample_cut_points(T: int, m: int, rng: np.random.Generator, low: int = 1) -> np.ndarray:
    """``m`` distinct sorted cuts drawn uniformly from {low, ..., T-1}.

    ``low=1`` keeps both segments nonempty; ``low=0`` also allows the
    degenerate cut with an empty first segment.
    """
    if low not in (0, 1):
        raise ValueError("low must be 0 or 1")
    if m < 0 or m > T - low:
        raise ValueError(f"cannot draw {m} distinct cuts from {{{low}, ..., {T - 1}}}")
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    return np.sort(rng.choice(np.arange(low, T), size=m, replace=False))


def validate_cuts(cuts, T: int) -> np.ndarray:
    cuts = np.asarray(cuts, dtype=np.int64).reshape(-1)
    if np.any(cuts <= 0) or np.any(cuts >= T):
        raise ValueError(f"cuts must lie strictly inside (0, {T}), got {cuts.tolist()}")
    if np.any(np.diff(cuts) <= 0):
        raise ValueError(f"cuts must be strictly increasing, got {cuts.tolist()}")
    return cuts


def sample_cut_sets(lengths, m: int, rng: np.random.Generator, low: int = 1) -> list[np.ndarray]:
    """One uniformly drawn cut set per trajectory, ``min(m, T_i - low)`` cuts each."""
    lengths = np.asarray(lengths, dtype=np.int64)
    if m < 0:
        raise ValueError("m must be nonnegative")
    span = np.maximum(lengths - low, 0)
    width = int(span.max(initial=0))
    # random keys over each row's admissible values; the m smallest win
    keys = rng.random((len(lengths), width))
    keys[np.arange(width)[None, :] >= span[:, None]] = np.inf
    order = np.argsort(keys, axis=1, kind="stable")
    counts = np.minimum(m, span)
    return [np.sort(order[i, : counts[i]]) + low for i in range(len(lengths))]
