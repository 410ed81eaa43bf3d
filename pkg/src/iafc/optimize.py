"""Derivative-free maximisation of storage efficiency and sweep tables.

The optimiser is deliberately generic: an objective maps a parameter
dict to (efficiency, fidelity), and the search is a coarse grid scan
followed by Nelder-Mead refinement.  Everything is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

__all__ = ["PulseParams", "OptResult", "optimize_storage", "sweep"]


@dataclass(frozen=True)
class PulseParams:
    """Gaussian input family exp(-(w - mean)^2 / (2 b^2))."""

    width_b: float
    mean_offset: float = 0.0

    def __post_init__(self):
        if not (self.width_b > 0.0):
            raise ValueError("width_b must be > 0")


@dataclass(frozen=True)
class OptResult:
    """Best parameters found, with the efficiency/fidelity they achieve."""

    best: dict
    eta: float
    fidelity: float
    evaluations: int
    history: tuple = field(default_factory=tuple, repr=False)


Objective = Callable[[Mapping[str, float]], tuple]


def _coarse_axes(bounds: Mapping[str, tuple], points_per_axis: int | None):
    if points_per_axis is None:
        # keep the scan affordable when three or more axes are free
        points_per_axis = 21 if len(bounds) <= 2 else 9
    axes = {}
    for name, (lo, hi) in bounds.items():
        if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
            raise ValueError(f"bounds for '{name}' must be finite with hi > lo")
        axes[name] = np.linspace(lo, hi, points_per_axis)
    return axes


def optimize_storage(objective: Objective, bounds: Mapping[str, tuple],
                     points_per_axis: int | None = None,
                     refine: bool = True, ftol: float = 1e-4,
                     keep_history: bool = False) -> OptResult:
    """Maximise efficiency over the named, bounded parameters.

    ``objective`` receives a parameter dict and returns (eta, fidelity).
    A full factorial grid locates the basin; Nelder-Mead (with points
    outside the bounds rejected) polishes it.  The result is never worse
    than the best coarse grid point.
    """
    if not bounds:
        raise ValueError("need at least one free parameter")
    names = list(bounds)
    axes = _coarse_axes(bounds, points_per_axis)
    evaluations = 0
    history = []

    best_eta, best_fid, best_x = -np.inf, 0.0, None
    for combo in itertools.product(*(axes[n] for n in names)):
        params = dict(zip(names, combo))
        eta, fid = objective(params)[:2]
        evaluations += 1
        if keep_history:
            history.append((params, eta, fid))
        if eta > best_eta:
            best_eta, best_fid, best_x = eta, fid, np.array(combo, dtype=float)

    if refine:
        lo = np.array([bounds[n][0] for n in names])
        hi = np.array([bounds[n][1] for n in names])
        scale = hi - lo

        cache = {}

        def negative(x: np.ndarray) -> float:
            nonlocal evaluations
            if np.any(x < lo) or np.any(x > hi):
                return np.inf
            key = tuple(np.round(x / scale, 12))
            if key in cache:
                return cache[key][0]
            eta, fid = objective(dict(zip(names, x)))[:2]
            evaluations += 1
            cache[key] = (-eta, fid)
            return -eta

        res = minimize(
            negative, best_x, method="Nelder-Mead",
            options=dict(
                xatol=1e-4 * float(np.min(scale)),
                fatol=ftol * max(abs(best_eta), 1e-12),
                maxfev=400,
                initial_simplex=_initial_simplex(best_x, lo, hi),
            ),
        )
        if np.isfinite(res.fun) and -res.fun > best_eta:
            best_eta = -res.fun
            best_x = np.clip(res.x, lo, hi)
            best_fid = objective(dict(zip(names, best_x)))[1]
            evaluations += 1

    return OptResult(dict(zip(names, (float(v) for v in best_x))),
                     float(best_eta), float(best_fid), evaluations,
                     tuple(history))


def _initial_simplex(x0: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Simplex spanning a few percent of each bound range, kept in bounds."""
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    step = 0.05 * (hi - lo)
    for i in range(n):
        trial = x0[i] + step[i]
        simplex[i + 1, i] = trial if trial <= hi[i] else x0[i] - step[i]
    return simplex


def sweep(parameter: str, grid: Sequence, evaluate: Callable,
          max_workers: int = 1) -> list[dict]:
    """One table row per grid value: {parameter, eta, fidelity, ...}.

    ``evaluate`` maps a grid value to a dict of result fields.  Rows are
    returned in grid order regardless of execution order, so tables are
    reproducible bit for bit.
    """
    values = list(grid)
    if not values:
        return []
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(evaluate, values))
    else:
        results = [evaluate(v) for v in values]
    rows = []
    for value, fields_ in zip(values, results):
        row = {parameter: value}
        row.update(fields_)
        rows.append(row)
    return rows
