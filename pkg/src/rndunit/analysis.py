"""Diagnostics for comparing exact channel dynamics with master equations.

The central question the package answers is *when* a time-local master
equation stops tracking the exact ensemble average. The Heisenberg time
of the system Hamiltonian, 1 / (mean level gap), sets that scale; the
compare() report locates the breakdown empirically as the first time the
trace distance crosses a threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linops import DEFAULT_TOL, EigenSystem, Tolerances, require_density, trace_distance
from .mastereq import TimeSeries

__all__ = [
    "ComparisonReport",
    "purity",
    "heisenberg_time",
    "coherence_rate",
    "compare",
]


@dataclass(frozen=True)
class ComparisonReport:
    """Pointwise trace distances between two trajectories on a shared grid.

    breakdown_time is the first grid time where the distance exceeds the
    threshold, or None if it never does.
    """

    times: np.ndarray
    trace_distances: np.ndarray
    max_error: float
    threshold: float
    breakdown_time: float | None


def purity(rho, tol: Tolerances = DEFAULT_TOL) -> float:
    """tr(rho^2); 1 for pure states, 1/d for the maximally mixed state."""
    rho = require_density(rho, tol)
    return float(np.trace(rho @ rho).real)


def heisenberg_time(eig: EigenSystem, tol: Tolerances = DEFAULT_TOL) -> float:
    """Inverse mean level gap, 1 / <|E_m - E_n|> over all pairs m < n.

    This is the time scale on which the time-local master equations lose
    validity. A fully degenerate spectrum has no such scale and is
    rejected.
    """
    if eig.dim < 2:
        raise ValueError("need at least two levels to define a Heisenberg time")
    e = eig.energies
    gaps = np.abs(e[None, :] - e[:, None])[np.triu_indices(eig.dim, k=1)]
    mean_gap = float(gaps.mean())
    span = float(e[-1] - e[0])
    if mean_gap <= tol.degeneracy * max(1.0, span):
        raise ValueError("spectrum is fully degenerate; Heisenberg time undefined")
    return 1.0 / mean_gap


def coherence_rate(
    series: TimeSeries, eig: EigenSystem, n: int, m: int
) -> np.ndarray:
    """Instantaneous decay rate -d ln |rho_nm| / dt of one eigenbasis coherence.

    Uses second-order finite differences (one-sided at the ends). Samples
    after the coherence first drops below 1e-12 are unusable for the
    logarithm; the returned vector is truncated there and a warning notes
    the shortened window.
    """
    n, m = int(n), int(m)
    if not (0 <= n < eig.dim and 0 <= m < eig.dim):
        raise ValueError(f"level indices ({n}, {m}) out of range for dim {eig.dim}")
    if series.dim != eig.dim:
        raise ValueError("series dimension does not match the eigensystem")
    left = eig.basis[:, n].conj()
    right = eig.basis[:, m]
    amps = np.abs(np.einsum("a,tab,b->t", left, series.states, right))
    below = np.flatnonzero(amps < 1e-12)
    usable = below[0] if below.size else amps.size
    if usable < amps.size:
        warnings.warn(
            f"coherence ({n}, {m}) falls below 1e-12 at t = {series.times[usable]:g}; "
            f"rate window truncated to {usable} of {amps.size} samples",
            stacklevel=2,
        )
    if usable < 3:
        raise ValueError("coherence vanishes too early to differentiate its log")
    log_amp = np.log(amps[:usable])
    return -np.gradient(log_amp, series.times[:usable], edge_order=2)


def compare(
    exact: TimeSeries, approx: TimeSeries, threshold: float = 1e-2
) -> ComparisonReport:
    """Trace-distance comparison of two trajectories on an identical grid."""
    threshold = float(threshold)
    if not np.isfinite(threshold) or threshold <= 0:
        raise ValueError("threshold must be finite and positive")
    if exact.dim != approx.dim:
        raise ValueError("trajectory dimensions disagree")
    if exact.times.shape != approx.times.shape or not np.array_equal(
        exact.times, approx.times
    ):
        raise ValueError("trajectories are sampled on different time grids")
    distances = np.array(
        [
            trace_distance(exact.states[i], approx.states[i])
            for i in range(exact.times.size)
        ]
    )
    over = np.flatnonzero(distances > threshold)
    breakdown = float(exact.times[over[0]]) if over.size else None
    return ComparisonReport(
        times=exact.times.copy(),
        trace_distances=distances,
        max_error=float(distances.max()),
        threshold=threshold,
        breakdown_time=breakdown,
    )
