"""Observable matrix elements in the energy eigenbasis and ETH statistics.

The two observables are the photon number ``n = a^dag a`` and the number of
excited atoms ``n_ex = J_z + j``.  Matrices are built over a converged,
single-parity selection of eigenstates; opposite-parity blocks vanish
identically (both observables commute with the parity operator), so mixing
sectors only dilutes the statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import kurtosis, skew

from . import basis_map, model
from .errors import (NumericalError, ParameterError, SampleSizeError,
                     SupportError, WindowError)

PHOTON_NUMBER = "photon_number"
EXCITED_ATOMS = "excited_atoms"


@dataclass
class ObservableMatrix:
    """O_{k,k'} over selected eigenstates, with their scaled energies."""

    kind: str
    elements: np.ndarray
    energies: np.ndarray
    j: float
    scaled: bool = False

    @property
    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.elements)


@dataclass
class MicrocanonicalWindow:
    """States near ``center``: either |eps - center| <= half_width or the
    ``count`` levels nearest in energy."""

    center: float
    half_width: Optional[float] = None
    count: Optional[int] = None

    def select(self, energies: np.ndarray) -> np.ndarray:
        if (self.half_width is None) == (self.count is None):
            raise ParameterError("specify exactly one of half_width / count")
        if self.half_width is not None:
            idx = np.flatnonzero(np.abs(energies - self.center) <= self.half_width)
        else:
            if self.count < 1:
                raise ParameterError("window count must be >= 1")
            order = np.argsort(np.abs(energies - self.center), kind="stable")
            idx = np.sort(order[: self.count])
        if idx.size == 0:
            raise WindowError(f"no states inside window at eps = {self.center}")
        return idx


def _check_selection(sol: model.EigenSolution) -> None:
    if sol.coefficients is None:
        raise ParameterError("solution carries no eigenvectors")
    if not sol.converged.all():
        raise ParameterError("observable matrices require a fully converged selection")
    labels = np.unique(sol.parity)
    if len(labels) != 1 or labels[0] == 0:
        raise ParameterError("observable matrices require a single resolved parity sector")


def _fock_weights(kind: str, params: model.ModelParams, nb: int) -> np.ndarray:
    n = np.arange(nb, dtype=float)[:, None]
    m_shift = np.arange(params.atomic_dim, dtype=float)[None, :]  # m + j
    if kind == PHOTON_NUMBER:
        return np.broadcast_to(n, (nb, params.atomic_dim))
    if kind == EXCITED_ATOMS:
        return np.broadcast_to(m_shift, (nb, params.atomic_dim))
    raise ParameterError(f"unknown observable kind {kind!r}")


def _photon_number_apply_efficient(grid: np.ndarray, params: model.ModelParams):
    """(n V) in the efficient basis: n = A^dag A - G J_x (A^dag + A) + G^2 J_x^2
    is block-diagonal in m_x and tridiagonal in N."""
    nb = grid.shape[0]
    N = np.arange(nb, dtype=float)[:, None, None]
    m = (np.arange(params.atomic_dim, dtype=float) - params.j)[None, :, None]
    out = (N + params.G ** 2 * m ** 2) * grid
    root = np.sqrt(np.arange(1, nb, dtype=float))[:, None, None]
    out[1:] -= params.G * m * root * grid[:-1]
    out[:-1] -= params.G * m * root * grid[1:]
    return out


def observable_matrix(sol: model.EigenSolution, kind: str,
                      scaled: bool = False, n_max: Optional[int] = None) -> ObservableMatrix:
    """Matrix elements of n or n_ex over the states of ``sol``.

    ``sol`` must be a converged single-parity selection (see select_states).
    Efficient-basis solutions evaluate n natively (J_x is diagonal there);
    n_ex goes through the Fock mapping and the atomic x -> z rotation, where
    J_z is diagonal.
    """
    _check_selection(sol)
    nb = sol.basis.boson_cutoff + 1
    k = sol.n_states
    grid = sol.coefficients.reshape(nb, sol.params.atomic_dim, k)
    if sol.basis.kind == model.FOCK:
        w = _fock_weights(kind, sol.params, nb)
        elements = np.einsum("bak,ba,bal->kl", grid, w, grid, optimize=True)
    elif kind == PHOTON_NUMBER:
        applied = _photon_number_apply_efficient(grid, sol.params)
        elements = np.einsum("bak,bal->kl", grid, applied, optimize=True)
    else:
        if n_max is None:
            n_max = 3 * sol.basis.boson_cutoff
        mapped = basis_map.map_efficient_to_fock(grid, sol.params, n_max)
        mapped = basis_map.rotate_atomic_x_to_z(mapped, sol.params.j)
        w = _fock_weights(kind, sol.params, n_max + 1)
        elements = np.einsum("bak,ba,bal->kl", mapped, w, mapped, optimize=True)
    elements = 0.5 * (elements + elements.T)
    if scaled:
        elements = elements / sol.params.j
    return ObservableMatrix(kind, elements, sol.energies.copy(), sol.params.j, scaled)


def microcanonical_average(obs: ObservableMatrix, window: MicrocanonicalWindow) -> float:
    """Mean diagonal element over the states selected by the window."""
    idx = window.select(obs.energies)
    return float(obs.diagonal[idx].mean())


def moving_deviation(energies: np.ndarray, values: np.ndarray,
                     window_count: int, step: int = 1) -> np.ndarray:
    """Delta^mic curve for any per-state quantity: per window of
    ``window_count`` consecutive states, sum|v - mean| / sum v, centered at
    the window's mean energy.  Returns (n_windows, 2)."""
    n = len(values)
    if window_count < 2 or window_count > n:
        raise WindowError(f"window of {window_count} states does not fit {n} levels")
    starts = np.arange(0, n - window_count + 1, step)
    out = np.empty((len(starts), 2))
    for i, s in enumerate(starts):
        chunk = values[s: s + window_count]
        denom = chunk.sum()
        if denom == 0.0:
            raise NumericalError("zero denominator in microcanonical deviation")
        out[i, 0] = energies[s: s + window_count].mean()
        out[i, 1] = np.abs(chunk - chunk.mean()).sum() / denom
    return out


def delta_mic(obs: ObservableMatrix, window_count: int, step: int = 1) -> np.ndarray:
    """Deviation of eigenstate expectation values from the microcanonical
    mean, over moving windows of ``window_count`` levels."""
    return moving_deviation(obs.energies, obs.diagonal, window_count, step)


def delta_mic_extremal(obs: ObservableMatrix, window: MicrocanonicalWindow) -> float:
    """Normalized extremal fluctuation |max - min| / O_mic over one window."""
    idx = window.select(obs.energies)
    chunk = obs.diagonal[idx]
    mic = chunk.mean()
    if mic == 0.0:
        raise NumericalError("zero microcanonical average in extremal deviation")
    return float(abs(chunk.max() - chunk.min()) / abs(mic))


def delta_mic_extremal_curve(obs: ObservableMatrix, window_count: int,
                             step: int = 1) -> np.ndarray:
    """Moving-window version of the extremal deviation; (n_windows, 2)."""
    n = obs.energies.size
    if window_count < 2 or window_count > n:
        raise WindowError(f"window of {window_count} states does not fit {n} levels")
    starts = np.arange(0, n - window_count + 1, step)
    out = np.empty((len(starts), 2))
    d = obs.diagonal
    for i, s in enumerate(starts):
        chunk = d[s: s + window_count]
        mic = chunk.mean()
        if mic == 0.0:
            raise NumericalError("zero microcanonical average in extremal deviation")
        out[i, 0] = obs.energies[s: s + window_count].mean()
        out[i, 1] = abs(chunk.max() - chunk.min()) / abs(mic)
    return out


@dataclass
class DistributionFit:
    """Histogram of matrix elements plus a maximum-likelihood Gaussian fit.

    ``gaussian_consistent`` encodes the acceptance thresholds
    |skewness| < 0.3 and |excess kurtosis| < 0.5; a ``degenerate``
    distribution (zero spread) always fails.
    """

    values: np.ndarray
    density: np.ndarray
    bin_edges: np.ndarray
    mu: float
    sigma: float
    skewness: float
    excess_kurtosis: float
    degenerate: bool

    SKEW_MAX = 0.3
    KURT_MAX = 0.5

    @property
    def gaussian_consistent(self) -> bool:
        return (not self.degenerate
                and abs(self.skewness) < self.SKEW_MAX
                and abs(self.excess_kurtosis) < self.KURT_MAX)


def _fit_distribution(values: np.ndarray, zero_mean: bool) -> DistributionFit:
    degenerate = float(np.std(values)) < 1e-12
    if degenerate:
        edges = np.array([values[0] - 0.5, values[0] + 0.5])
        return DistributionFit(values, np.array([1.0]), edges,
                               float(np.mean(values)), 0.0, 0.0, 0.0, True)
    density, edges = np.histogram(values, bins="fd", density=True)
    mu = 0.0 if zero_mean else float(np.mean(values))
    sigma = float(np.sqrt(np.mean((values - mu) ** 2)))
    return DistributionFit(values, density, edges, mu, sigma,
                           float(skew(values)), float(kurtosis(values)), False)


def diagonal_distribution(obs: ObservableMatrix, epsilon_range: tuple,
                          center_window: int = 50) -> DistributionFit:
    """Distribution of diagonal elements in an energy range, after removing
    the smooth energy dependence with a moving-window mean (the running
    average over ``center_window`` neighbors, shrunk at the edges)."""
    lo, hi = epsilon_range
    mask = (obs.energies >= lo) & (obs.energies <= hi)
    if mask.sum() < 50:
        raise SampleSizeError(f"only {int(mask.sum())} states in range, need >= 50")
    d = obs.diagonal[mask]
    half = center_window // 2
    csum = np.concatenate([[0.0], np.cumsum(d)])
    idx = np.arange(len(d))
    a = np.maximum(idx - half, 0)
    b = np.minimum(idx + half + 1, len(d))
    centered = d - (csum[b] - csum[a]) / (b - a)
    return _fit_distribution(centered, zero_mean=False)


def offdiagonal_distribution(obs: ObservableMatrix, epsilon_range: tuple,
                             omega_max: Optional[float] = None,
                             zero_mean: bool = True) -> DistributionFit:
    """Distribution of O_{k,k'} (k != k') with both states in the range,
    optionally restricted to |eps_k - eps_k'| <= omega_max."""
    lo, hi = epsilon_range
    mask = (obs.energies >= lo) & (obs.energies <= hi)
    if mask.sum() < 50:
        raise SampleSizeError(f"only {int(mask.sum())} states in range, need >= 50")
    sub = obs.elements[np.ix_(mask, mask)]
    eps = obs.energies[mask]
    iu, ju = np.triu_indices(len(eps), k=1)
    if omega_max is not None:
        keep = np.abs(eps[iu] - eps[ju]) <= omega_max
        iu, ju = iu[keep], ju[keep]
    if iu.size < 50:
        raise SampleSizeError("fewer than 50 off-diagonal pairs selected")
    return _fit_distribution(sub[iu, ju], zero_mean=zero_mean)


def diagonal_ensemble(coefficients: np.ndarray, obs: ObservableMatrix,
                      tol: float = 1e-6) -> float:
    """Infinite-time average sum_k |c_k|^2 O_{k,k} of an initial state
    expanded over the matrix's eigenstates."""
    c = np.asarray(coefficients)
    if c.shape[0] != obs.energies.size:
        raise ParameterError("coefficient vector does not match the state selection")
    w = (c * c.conj()).real
    if abs(w.sum() - 1.0) > tol:
        raise SupportError(
            f"state weight on the selected eigenstates is {w.sum():.8f}, not 1 "
            "(leakage to unconverged or excluded states)")
    return float(w @ obs.diagonal)


def expand_in_eigenbasis(state_grid: np.ndarray, sol: model.EigenSolution) -> np.ndarray:
    """Coefficients <E_k|psi> of a construction-basis state grid."""
    if sol.coefficients is None:
        raise ParameterError("solution carries no eigenvectors")
    flat = np.asarray(state_grid).reshape(-1)
    if flat.shape[0] != sol.coefficients.shape[0]:
        raise ParameterError("state grid does not match the construction basis")
    return sol.coefficients.T @ flat