"""Static disorder ensembles: weighted Hamiltonian realizations.

A DisorderEnsemble models a classical probability distribution over
Hamiltonians H_k with weights p_k >= 0, sum p_k = 1. Centering splits
off the weighted mean so the fluctuation part averages to zero; the
master-equation generators require that centered form. Gaussian
distributions are discretized by Gauss-Hermite quadrature, which keeps
low moments exact with a handful of nodes; Monte Carlo sampling exists
only as a cross-check, never as the default path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linops import (
    DEFAULT_TOL,
    EigenSystem,
    Tolerances,
    as_complex_matrix,
    commutator,
    dagger,
    max_abs,
    require_hermitian,
)

__all__ = [
    "DisorderEnsemble",
    "CenteredEnsemble",
    "mean_hamiltonian",
    "center",
    "gauss_hermite_ensemble",
    "two_point_ensemble",
    "gaussian_monte_carlo_ensemble",
    "require_commuting",
    "c2",
    "c2_matrix",
]


@dataclass(frozen=True)
class DisorderEnsemble:
    """Ordered Hamiltonian realizations (n, d, d) with weights (n,)."""

    hamiltonians: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        hams = np.asarray(self.hamiltonians, dtype=np.complex128)
        if hams.ndim != 3 or hams.shape[1] != hams.shape[2]:
            raise ValueError(
                f"hamiltonians must have shape (n, d, d), got {hams.shape}"
            )
        if hams.shape[0] == 0:
            raise ValueError("ensemble needs at least one realization")
        for k in range(hams.shape[0]):
            require_hermitian(hams[k], name=f"realization {k}")
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (hams.shape[0],):
            raise ValueError(
                f"weights shape {weights.shape} does not match {hams.shape[0]} realizations"
            )
        if not np.isfinite(weights).all() or np.any(weights < 0):
            raise ValueError("weights must be finite and non-negative")
        total = float(weights.sum())
        if abs(total - 1.0) > DEFAULT_TOL.trace:
            raise ValueError(f"weights must sum to 1, got {total:.15g}")
        object.__setattr__(self, "hamiltonians", hams)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.hamiltonians.shape[1]

    @property
    def size(self) -> int:
        return self.hamiltonians.shape[0]

    @classmethod
    def from_pairs(cls, pairs) -> "DisorderEnsemble":
        """Build from an iterable of (hamiltonian, weight) pairs."""
        pairs = list(pairs)
        if not pairs:
            raise ValueError("ensemble needs at least one realization")
        hams = np.stack([as_complex_matrix(h, "realization") for h, _ in pairs])
        weights = np.array([w for _, w in pairs], dtype=np.float64)
        return cls(hamiltonians=hams, weights=weights)


@dataclass(frozen=True)
class CenteredEnsemble:
    """Weighted mean plus a fluctuation ensemble whose mean vanishes."""

    mean: np.ndarray
    ensemble: DisorderEnsemble

    def __post_init__(self) -> None:
        mean = require_hermitian(self.mean, name="ensemble mean")
        if mean.shape[0] != self.ensemble.dim:
            raise ValueError("mean dimension does not match the ensemble")
        residual = max_abs(mean_hamiltonian(self.ensemble))
        bound = DEFAULT_TOL.zero_mean * max(1.0, max_abs(mean))
        if residual > bound:
            raise ValueError(
                f"centered ensemble has nonzero mean: |mean|_max = {residual:.3e}"
            )
        object.__setattr__(self, "mean", mean)


def mean_hamiltonian(e: DisorderEnsemble) -> np.ndarray:
    """Weighted mean sum_k p_k H_k."""
    return np.einsum("l,lab->ab", e.weights, e.hamiltonians)


def center(e: DisorderEnsemble, tol: Tolerances = DEFAULT_TOL) -> CenteredEnsemble:
    """Split off the weighted mean: H_k -> H_k - Hbar, so the rest averages to zero.

    Adding the mean to the system Hamiltonian leaves every total block
    H_S + H_k unchanged, so the dynamics is invariant under this split.
    A mean below tol.zero_mean (relative to the realization scale) is
    treated as exactly zero, which makes centering idempotent bit for bit.
    """
    mean = mean_hamiltonian(e)
    scale = max(1.0, max(max_abs(e.hamiltonians[k]) for k in range(e.size)))
    if max_abs(mean) <= tol.zero_mean * scale:
        return CenteredEnsemble(mean=np.zeros_like(mean), ensemble=e)
    shifted = e.hamiltonians - mean[None, :, :]
    return CenteredEnsemble(
        mean=mean,
        ensemble=DisorderEnsemble(hamiltonians=shifted, weights=e.weights.copy()),
    )


def gauss_hermite_ensemble(base, sigma: float, n_nodes: int) -> DisorderEnsemble:
    """Discretize lambda ~ N(0, sigma^2) acting as H_lambda = lambda * base.

    Uses the n-node Gauss-Hermite rule: nodes x_k and weights v_k for
    weight function exp(-x^2) become lambda_k = sigma * sqrt(2) * x_k and
    p_k = v_k / sqrt(pi). Moments of the Gaussian up to degree 2n - 1 are
    reproduced exactly; in particular sum p_k lambda_k^2 = sigma^2 for n >= 2.
    """
    base = require_hermitian(base, name="base operator")
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma < 0:
        raise ValueError("sigma must be finite and non-negative")
    n_nodes = int(n_nodes)
    if n_nodes < 1:
        raise ValueError("n_nodes must be at least 1")
    nodes, raw = np.polynomial.hermite.hermgauss(n_nodes)
    lams = np.sqrt(2.0) * sigma * nodes
    weights = raw / np.sqrt(np.pi)
    hams = lams[:, None, None] * base[None, :, :]
    return DisorderEnsemble(hamiltonians=hams, weights=weights)


def two_point_ensemble(base, g: float) -> DisorderEnsemble:
    """Symmetric two-point distribution lambda = +-g with weight 1/2 each."""
    base = require_hermitian(base, name="base operator")
    g = float(g)
    if not np.isfinite(g):
        raise ValueError("g must be finite")
    hams = np.stack([g * base, -g * base])
    return DisorderEnsemble(hamiltonians=hams, weights=np.array([0.5, 0.5]))


def gaussian_monte_carlo_ensemble(
    base, sigma: float, n_samples: int, seed: int
) -> DisorderEnsemble:
    """Equal-weight Gaussian sampling of lambda * base; cross-check path only.

    Quadrature (gauss_hermite_ensemble) is the production discretization;
    this sampler exists so statistical estimates can confirm it.
    """
    base = require_hermitian(base, name="base operator")
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    lams = rng.normal(0.0, float(sigma), size=n_samples)
    hams = lams[:, None, None] * base[None, :, :]
    weights = np.full(n_samples, 1.0 / n_samples)
    return DisorderEnsemble(hamiltonians=hams, weights=weights)


def require_commuting(
    e: DisorderEnsemble, reference, tol: Tolerances = DEFAULT_TOL
) -> None:
    """Check every realization commutes with `reference` within tolerance.

    The bound is |[H_k, H]|_max <= tol.commutation * |H_k|_max * |H|_max,
    so scaling either operator does not change the verdict.
    """
    ref = require_hermitian(reference, tol, name="reference operator")
    ref_scale = max_abs(ref)
    for k in range(e.size):
        h_k = e.hamiltonians[k]
        defect = max_abs(commutator(h_k, ref))
        bound = tol.commutation * max_abs(h_k) * ref_scale
        if defect > bound:
            raise ValueError(
                f"realization {k} does not commute with the system Hamiltonian: "
                f"|[H_{k}, H]|_max = {defect:.3e} exceeds {bound:.3e}"
            )


def c2_matrix(
    e: DisorderEnsemble, eig: EigenSystem, tol: Tolerances = DEFAULT_TOL
) -> np.ndarray:
    """All-pairs second-moment correlator of the disorder level shifts.

    C2[n, m] = sum_k p_k (E_n^k - E_m^k)^2 with E_n^k = <n|H_k|n> in the
    eigenbasis of the (commuting) system Hamiltonian. Governs the Gaussian
    coherence decay exp(-t^2 C2 / 2) of the pure-dephasing solution.
    """
    if eig.dim != e.dim:
        raise ValueError("eigensystem dimension does not match the ensemble")
    require_commuting(e, eig.matrix(), tol)
    # diagonal of V+ H_k V per realization; real for Hermitian H_k
    shifts = np.einsum(
        "an,lab,bn->ln", eig.basis.conj(), e.hamiltonians, eig.basis
    ).real
    diffs = shifts[:, :, None] - shifts[:, None, :]
    return np.einsum("l,lnm->nm", e.weights, diffs**2)


def c2(
    e: DisorderEnsemble,
    eig: EigenSystem,
    n: int,
    m: int,
    tol: Tolerances = DEFAULT_TOL,
) -> float:
    """Second-moment correlator for one level pair; see c2_matrix."""
    n, m = int(n), int(m)
    if not (0 <= n < eig.dim and 0 <= m < eig.dim):
        raise ValueError(f"level indices ({n}, {m}) out of range for dim {eig.dim}")
    return float(c2_matrix(e, eig, tol)[n, m])
