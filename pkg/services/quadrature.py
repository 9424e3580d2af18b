# services/quadrature.py - composite Gauss-Legendre rules shared by the time-domain integrals

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Tuple

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def segment_rule(edges: np.ndarray, order: int = 20) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes/weights on every segment [edges[i], edges[i+1]].
    Returns arrays of shape (len(edges)-1, order); zero-length segments get zero weight.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def refine_edges(points: np.ndarray, max_width: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Insert breakpoints so no segment is wider than max_width.
    Returns (edges, owner) where owner[k] is the index i of the original
    interval [points[i], points[i+1]] that segment k belongs to.
    """
    points = np.asarray(points, dtype=float)
    widths = np.diff(points)
    pieces = np.maximum(1, np.ceil(np.abs(widths) / max_width).astype(int))
    edges = [points[:1]]
    for i, n in enumerate(pieces):
        edges.append(np.linspace(points[i], points[i + 1], n + 1)[1:])
    owner = np.repeat(np.arange(widths.size), pieces)
    return np.concatenate(edges), owner


def cumulative_from_zero(func: Callable[[np.ndarray], np.ndarray], times: np.ndarray,
                         max_width: float = 0.5, order: int = 20) -> np.ndarray:
    """
    I(t_i) = integral_0^{t_i} func(y) dy for every t_i, vectorized over the
    trailing axis of func's output. func(y) must return shape (len(y), N).
    Result has shape (len(times), N). Times may be negative or unsorted.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    points = np.unique(np.concatenate([times, [0.0]]))
    edges, owner = refine_edges(points, max_width)
    nodes, weights = segment_rule(edges, order)
    values = np.asarray(func(nodes.ravel()))
    n_out = values.shape[1] if values.ndim == 2 else 1
    values = values.reshape(nodes.shape[0], nodes.shape[1], n_out)
    seg = np.einsum("kq,kqn->kn", weights, values)
    per_interval = np.zeros((points.size - 1, n_out), dtype=seg.dtype)
    np.add.at(per_interval, owner, seg)
    running = np.vstack([np.zeros((1, n_out), dtype=seg.dtype), np.cumsum(per_interval, axis=0)])
    zero = int(np.searchsorted(points, 0.0))
    running = running - running[zero]
    idx = np.searchsorted(points, times)
    return running[idx]
