"""Dicke Hamiltonians, exact diagonalization, convergence control, parity.

Two construction bases are supported.  The Fock basis is the plain product
``|n> (x) |j, m_z>``.  The efficient basis ``|N>_{m_x} (x) |j, m_x>`` uses
displaced Fock states built from ``A = a + G J_x`` and converges far higher
into the spectrum at the same matrix size; its couplings need the
displaced-Fock overlaps from :mod:`dicke_lab.basis_map`.

Energies are stored scaled, ``eps = E / j``, everywhere downstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import basis_map
from .errors import (ConvergenceError, NumericalError, ParameterError,
                     ParityResolutionWarning)

FOCK = "fock"
EFFICIENT = "efficient"

# Defaults certifying the reference truncations (for gamma = 2 gamma_c they
# reproduce the dim-8601 converged window at j = 30); scaled energy units.
DEFAULT_TOL_ENERGY = 1e-7
DEFAULT_TOL_TAIL = 1e-4


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the Dicke model.

    omega:  field mode frequency, > 0
    omega0: atomic level splitting, > 0
    gamma:  atom-field coupling, >= 0
    j:      collective pseudo-spin (N_atoms / 2), positive half-integer
    """

    omega: float
    omega0: float
    gamma: float
    j: float

    def __post_init__(self):
        if not (self.omega > 0 and self.omega0 > 0):
            raise ParameterError("omega and omega0 must be positive")
        if self.gamma < 0:
            raise ParameterError("gamma must be nonnegative")
        two_j = 2 * self.j
        if self.j <= 0 or abs(two_j - round(two_j)) > 1e-12:
            raise ParameterError(f"2j must be a positive integer, got j={self.j}")

    @property
    def two_j(self) -> int:
        return int(round(2 * self.j))

    @property
    def gamma_c(self) -> float:
        """Critical coupling of the normal/superradiant transition."""
        return np.sqrt(self.omega * self.omega0) / 2.0

    @property
    def G(self) -> float:
        """Displacement strength of the efficient basis, 2 gamma / (omega sqrt(2j))."""
        return 2.0 * self.gamma / (self.omega * np.sqrt(2.0 * self.j))

    @property
    def hbar_eff(self) -> float:
        return 1.0 / self.j

    @property
    def atomic_dim(self) -> int:
        return self.two_j + 1


@dataclass(frozen=True)
class BasisSpec:
    """Construction basis: kind in {'fock', 'efficient'} plus bosonic cutoff."""

    kind: str
    boson_cutoff: int

    def __post_init__(self):
        if self.kind not in (FOCK, EFFICIENT):
            raise ParameterError(f"unknown basis kind {self.kind!r}")
        if self.boson_cutoff < 0:
            raise ParameterError("boson_cutoff must be nonnegative")

    def dim(self, params: ModelParams) -> int:
        return (self.boson_cutoff + 1) * params.atomic_dim


@dataclass
class HamiltonianMatrix:
    """Dense real-symmetric Hamiltonian with its construction metadata."""

    entries: np.ndarray
    basis: BasisSpec
    params: ModelParams

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def coefficient_grid(vec: np.ndarray, params: ModelParams) -> np.ndarray:
    """Reshape flat coefficient data to ``[bosonic, atomic, ...]`` layout."""
    dim_a = params.atomic_dim
    return np.asarray(vec).reshape(-1, dim_a, *np.asarray(vec).shape[1:])


def _ladder_plus(j: float, dim: int) -> np.ndarray:
    """Amplitudes c_+(m) = sqrt(j(j+1) - m(m+1)) for m = -j .. j-1."""
    m = np.arange(dim - 1) - j
    return np.sqrt(j * (j + 1) - m * (m + 1))


def build_fock_hamiltonian(params: ModelParams, n_max: int) -> HamiltonianMatrix:
    """Dicke Hamiltonian over ``|n> (x) |j, m_z>`` with bosonic cutoff n_max."""
    if n_max < 0:
        raise ParameterError("n_max must be nonnegative")
    dim_a = params.atomic_dim
    nb = n_max + 1
    m = np.arange(dim_a) - params.j
    n = np.arange(nb)
    h4 = np.zeros((nb, dim_a, nb, dim_a))
    diag = params.omega * n[:, None] + params.omega0 * m[None, :]
    h4[n[:, None], np.arange(dim_a)[None, :], n[:, None], np.arange(dim_a)[None, :]] = diag
    # (a^dag + a)(J_+ + J_-): Delta n = +-1 and Delta m = +-1, all four combinations
    g = params.gamma / np.sqrt(2.0 * params.j)
    boson = np.zeros((nb, nb))
    rt = np.sqrt(n[1:])
    boson[np.arange(1, nb), np.arange(nb - 1)] = rt
    boson[np.arange(nb - 1), np.arange(1, nb)] = rt
    cp = _ladder_plus(params.j, dim_a)
    for a in range(dim_a - 1):
        h4[:, a + 1, :, a] = g * cp[a] * boson
        h4[:, a, :, a + 1] = g * cp[a] * boson
    h = h4.reshape(nb * dim_a, nb * dim_a)
    return HamiltonianMatrix(h, BasisSpec(FOCK, n_max), params)


def build_efficient_hamiltonian(params: ModelParams, N_max: int) -> HamiltonianMatrix:
    """Dicke Hamiltonian over ``|N>_{m_x} (x) |j, m_x>`` with cutoff N_max.

    With A = a + G J_x the Hamiltonian reads
    ``H = omega A^dag A - omega G^2 J_x^2 + omega0 J_z``;
    the first two terms are diagonal here, and J_z hops m_x -> m_x +- 1 with
    the ladder amplitude times the displaced-Fock overlap
    ``<N'|D(G (m_x' - m_x))|N>``.
    """
    if N_max < 0:
        raise ParameterError("N_max must be nonnegative")
    dim_a = params.atomic_dim
    nb = N_max + 1
    m = np.arange(dim_a) - params.j
    N = np.arange(nb)
    h4 = np.zeros((nb, dim_a, nb, dim_a))
    diag = params.omega * N[:, None] - params.omega * params.G ** 2 * m[None, :] ** 2
    h4[N[:, None], np.arange(dim_a)[None, :], N[:, None], np.arange(dim_a)[None, :]] = diag
    # <m_x'|J_z|m_x> = -(1/2) c_+ on the x-ladder (z-axis rotated onto -x)
    kernel = basis_map.displacement_kernel(params.G, N_max, N_max)
    cp = _ladder_plus(params.j, dim_a)
    for a in range(dim_a - 1):
        block = -0.5 * params.omega0 * cp[a] * kernel
        h4[:, a + 1, :, a] = block
        h4[:, a, :, a + 1] = block.T
    h = h4.reshape(nb * dim_a, nb * dim_a)
    return HamiltonianMatrix(h, BasisSpec(EFFICIENT, N_max), params)


@dataclass
class EigenSolution:
    """Converged-spectrum container; energies are scaled (eps = E/j), ascending.

    ``coefficients`` columns are eigenvectors in the construction basis
    (flat ``b * (2j+1) + a`` layout); may be None for block-diagonal models
    whose eigenvectors are stored compactly.
    ``parity`` holds +1 / -1 / 0 (unresolved); ``converged`` is a prefix mask,
    every True state lies at or below ``epsilon_t``.
    """

    energies: np.ndarray
    coefficients: Optional[np.ndarray]
    basis: BasisSpec
    params: ModelParams
    parity: np.ndarray = field(default=None)
    converged: np.ndarray = field(default=None)
    epsilon_t: float = -np.inf

    def __post_init__(self):
        n = len(self.energies)
        if self.parity is None:
            self.parity = np.zeros(n, dtype=np.int8)
        if self.converged is None:
            self.converged = np.zeros(n, dtype=bool)
        for arr in (self.energies, self.coefficients, self.parity, self.converged):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n_states(self) -> int:
        return len(self.energies)


def diagonalize(h: HamiltonianMatrix) -> EigenSolution:
    """Full spectrum and orthonormal eigenvectors of a symmetric Hamiltonian."""
    _check_symmetric(h)
    try:
        energies, vectors = np.linalg.eigh(h.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigensolver failed on dim={h.dim} {h.basis.kind} Hamiltonian "
            f"(params: {h.params})") from exc
    norms = np.einsum("ij,ij->j", vectors, vectors)
    if np.max(np.abs(norms - 1.0)) > 1e-10:
        raise NumericalError("eigenvectors lost orthonormality beyond 1e-10")
    return EigenSolution(energies / h.params.j, vectors, h.basis, h.params)


def eigenvalues_only(h: HamiltonianMatrix) -> np.ndarray:
    """Scaled eigenvalues without eigenvectors (cheaper; for convergence checks)."""
    _check_symmetric(h)
    try:
        return np.linalg.eigvalsh(h.entries) / h.params.j
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on dim={h.dim}") from exc


def _check_symmetric(h: HamiltonianMatrix, rtol: float = 1e-12) -> None:
    a = h.entries
    scale = max(np.abs(a[0, 0]), 1.0)
    if h.dim <= 2000:
        asym = np.max(np.abs(a - a.T))
        scale = max(np.abs(a).max(), 1.0)
    else:
        rng = np.random.default_rng(0)
        i = rng.integers(0, h.dim, 4000)
        k = rng.integers(0, h.dim, 4000)
        asym = np.max(np.abs(a[i, k] - a[k, i]))
        scale = max(np.abs(a[i, k]).max(), 1.0)
    if asym > rtol * scale:
        raise ParameterError(f"Hamiltonian is not symmetric (max asymmetry {asym:.3e})")


def filter_converged(sol: EigenSolution, sol_larger: EigenSolution,
                     tol_energy: float, tol_tail: float) -> EigenSolution:
    """Mark the converged prefix of a spectrum by comparison with a larger cutoff.

    State k counts as converged when its scaled energy moved less than
    ``tol_energy`` against the larger-cutoff run *and* its probability weight
    in the top 10% of bosonic levels stays below ``tol_tail`` (energy
    stability alone can mask unconverged eigenvectors).  ``epsilon_t`` is the
    top of the converged prefix.
    """
    if sol.params != sol_larger.params:
        raise ParameterError("convergence check requires identical model parameters")
    if sol.basis.kind != sol_larger.basis.kind:
        raise ParameterError("convergence check requires the same basis kind")
    if sol_larger.basis.boson_cutoff <= sol.basis.boson_cutoff:
        raise ParameterError("reference solution must use a strictly larger cutoff")
    if sol.coefficients is None:
        raise ParameterError("solution carries no eigenvectors")
    n = sol.n_states
    de = np.abs(sol.energies - sol_larger.energies[:n])
    nb = sol.basis.boson_cutoff + 1
    tail_levels = max(1, int(round(0.1 * nb)))
    grid = sol.coefficients.reshape(nb, sol.params.atomic_dim, n)
    tail_weight = np.einsum("bak,bak->k", grid[nb - tail_levels:], grid[nb - tail_levels:])
    ok = (de < tol_energy) & (tail_weight < tol_tail)
    first_bad = int(np.argmin(ok)) if not ok.all() else n
    if first_bad == 0 and not ok[0]:
        converged = np.zeros(n, dtype=bool)
        eps_t = -np.inf
    else:
        converged = np.arange(n) < first_bad
        eps_t = float(sol.energies[first_bad - 1])
    return replace(sol, converged=converged, epsilon_t=eps_t)


def parity_expectation(fock_z_grid: np.ndarray, params: ModelParams) -> np.ndarray:
    """<Pi> = sum (-1)^(n + m_z + j) |c|^2 over a z-basis Fock grid.

    Accepts ``(nb, na)`` or ``(nb, na, n_states)``; weights are normalized by
    the (possibly truncation-reduced) state norm.
    """
    grid = np.asarray(fock_z_grid)
    nb, na = grid.shape[0], grid.shape[1]
    signs = np.where((np.arange(nb)[:, None] + np.arange(na)[None, :]) % 2 == 0, 1.0, -1.0)
    prob = (grid * grid.conj()).real
    num = np.einsum("ba,ba...->...", signs, prob)
    den = np.einsum("ba...->...", prob)
    return num / den


def assign_parity(sol: EigenSolution, fock_coeffs: np.ndarray,
                  tol: float = 1e-6) -> EigenSolution:
    """Label each state +1/-1 from <Pi> computed on z-basis Fock coefficients.

    ``fock_coeffs`` must cover the same states as ``sol`` (flat or grid
    layout).  States with |<Pi>| below 1 - tol stay unresolved; unresolved
    converged states trigger a ParityResolutionWarning (usually a sign the
    mapping cutoff is too small).
    """
    grid = fock_coeffs
    if grid.ndim == 2 and grid.shape[0] != sol.n_states:
        grid = coefficient_grid(grid, sol.params)
    if grid.ndim == 2:
        grid = grid[:, :, None]
    if grid.shape[2] != sol.n_states:
        raise ParameterError("coefficient count does not match solution states")
    pi = parity_expectation(grid, sol.params)
    labels = np.zeros(sol.n_states, dtype=np.int8)
    labels[pi > 1.0 - tol] = 1
    labels[pi < -1.0 + tol] = -1
    unresolved = int(np.sum((labels == 0) & sol.converged))
    if unresolved:
        warnings.warn(
            f"{unresolved} converged states have unresolved parity",
            ParityResolutionWarning, stacklevel=2)
    return replace(sol, parity=labels)


_parity_sign_cache: dict[int, np.ndarray] = {}


def _atomic_parity_signs(params: ModelParams) -> np.ndarray:
    """Signs phi(m_x) in Pi |j, m_x> = phi(m_x) |j, -m_x| (x-basis action
    of exp(i pi (J_z + j))), from the rotation matrix; cached per 2j."""
    key = params.two_j
    hit = _parity_sign_cache.get(key)
    if hit is not None:
        return hit
    d = basis_map.wigner_d_half_pi(params.j)
    sz = np.where(np.arange(params.atomic_dim) % 2 == 0, 1.0, -1.0)
    full = d.T @ (sz[:, None] * d)
    phi = np.diag(full[::-1])
    if np.max(np.abs(np.abs(phi) - 1.0)) > 1e-10:
        raise NumericalError("atomic parity action is not a signed anti-diagonal")
    phi = np.sign(phi)
    _parity_sign_cache[key] = phi
    return phi


def apply_parity_operator(grid: np.ndarray, basis: BasisSpec,
                          params: ModelParams) -> np.ndarray:
    """Exact action of Pi = exp(i pi (n + J_z + j)) on a coefficient grid.

    Fock basis: multiply by (-1)^(n + m_z + j).  Efficient basis: Pi sends
    |N>_{m_x}|j, m_x> to (-1)^N phi(m_x) |N>_{-m_x}|j, -m_x>, i.e. a signed
    reversal of the atomic index (no basis mapping required).
    """
    nb, na = grid.shape[0], grid.shape[1]
    if basis.kind == FOCK:
        signs = np.where((np.arange(nb)[:, None] + np.arange(na)[None, :]) % 2 == 0,
                         1.0, -1.0)
        return signs.reshape((nb, na) + (1,) * (grid.ndim - 2)) * grid
    phi = _atomic_parity_signs(params)
    nsign = np.where(np.arange(nb) % 2 == 0, 1.0, -1.0)
    signs = nsign[:, None] * phi[None, ::-1]
    out = grid[:, ::-1] * signs.reshape((nb, na) + (1,) * (grid.ndim - 2))
    return out


def resolve_parity(sol: EigenSolution, tol: float = 1e-6,
                   split_doublets: bool = True,
                   degeneracy_tol: float = 1e-9) -> EigenSolution:
    """Parity labels via the exact Pi action in the construction basis.

    In the superradiant phase the low spectrum consists of parity doublets
    whose tunneling splitting is far below eigensolver resolution; eigh then
    returns arbitrary mixtures with <Pi> ~ 0.  With ``split_doublets`` such
    adjacent degenerate pairs are rotated into definite-parity combinations
    (energies are untouched; they are equal at working precision).  States
    that still fail to resolve keep label 0 and trigger a warning when
    converged.
    """
    if sol.coefficients is None:
        raise ParameterError("solution carries no eigenvectors")
    n = sol.n_states
    nb = sol.basis.boson_cutoff + 1
    grid = sol.coefficients.reshape(nb, sol.params.atomic_dim, n)
    flipped = apply_parity_operator(grid, sol.basis, sol.params)
    pi = np.einsum("bak,bak->k", grid, flipped)
    coeffs = sol.coefficients

    def classify(values):
        lab = np.zeros(len(values), dtype=np.int8)
        lab[values > 1.0 - tol] = 1
        lab[values < -1.0 + tol] = -1
        return lab

    labels = classify(pi)
    if split_doublets:
        unresolved = np.flatnonzero(labels == 0)
        pairs = [(a, b) for a, b in zip(unresolved[:-1], unresolved[1:])
                 if b == a + 1 and abs(sol.energies[b] - sol.energies[a]) < degeneracy_tol]
        if pairs:
            coeffs = coeffs.copy()
            consumed = set()
            for a, b in pairs:
                if a in consumed or b in consumed:
                    continue
                va, vb = coeffs[:, a], coeffs[:, b]
                pva = apply_parity_operator(
                    va.reshape(nb, sol.params.atomic_dim), sol.basis, sol.params).ravel()
                p2 = np.array([[pi[a], vb @ pva], [vb @ pva, pi[b]]])
                w, u = np.linalg.eigh(p2)
                if np.max(np.abs(np.abs(w) - 1.0)) < tol:
                    rotated = np.stack([va, vb], axis=1) @ u
                    coeffs[:, a], coeffs[:, b] = rotated[:, 0], rotated[:, 1]
                    labels[a], labels[b] = np.int8(np.sign(w[0])), np.int8(np.sign(w[1]))
                    consumed.update((a, b))
            coeffs.setflags(write=False)
    unresolved_conv = int(np.sum((labels == 0) & sol.converged))
    if unresolved_conv:
        warnings.warn(
            f"{unresolved_conv} converged states have unresolved parity",
            ParityResolutionWarning, stacklevel=2)
    return replace(sol, parity=labels, coefficients=coeffs)


def select_states(sol: EigenSolution, parity: Optional[int] = None,
                  converged_only: bool = True,
                  energy_range: Optional[tuple] = None) -> EigenSolution:
    """Restrict a solution to a parity sector / converged subset / energy window."""
    mask = np.ones(sol.n_states, dtype=bool)
    if converged_only:
        mask &= sol.converged
    if parity is not None:
        mask &= sol.parity == parity
    if energy_range is not None:
        lo, hi = energy_range
        mask &= (sol.energies >= lo) & (sol.energies <= hi)
    if converged_only and not mask.any():
        raise ConvergenceError("no converged states match the selection")
    coeffs = sol.coefficients[:, mask] if sol.coefficients is not None else None
    extra = {}
    if isinstance(sol, TavisCummingsSolution):
        extra = dict(lambda_labels=sol.lambda_labels[mask],
                     state_index=sol.state_index[mask])
    return replace(sol, energies=sol.energies[mask], coefficients=coeffs,
                   parity=sol.parity[mask], converged=sol.converged[mask], **extra)


def glauber_bloch_state(x, params: ModelParams, n_max: int) -> np.ndarray:
    """Product coherent state |q,p> (x) |Q,P> as a complex Fock-basis grid.

    Glauber part: alpha = sqrt(j/2)(q + ip), components
    exp(-|alpha|^2/2) alpha^n / sqrt(n!).  Bloch part: components
    (1 - r^2/4)^j zeta^(j+m) sqrt(C(2j, j+m)) on |j, m> with
    zeta = (Q + iP) / sqrt(4 - r^2).  The scaled energy expectation of this
    state is the classical Hamiltonian at x, tying the quantum and classical
    modules together.
    """
    from scipy.special import gammaln
    q, p, Q, P = (float(v) for v in np.asarray(x, dtype=float))
    r2 = Q * Q + P * P
    if r2 >= 4.0:
        raise ParameterError("atomic variables violate Q^2 + P^2 < 4")
    alpha = np.sqrt(params.j / 2.0) * (q + 1j * p)
    n = np.arange(n_max + 1)
    if abs(alpha) > 0.0:
        radial = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha))
                        - 0.5 * gammaln(n + 1.0))
        boson = radial * (alpha / abs(alpha)) ** n
    else:
        boson = np.zeros(n_max + 1, dtype=complex)
        boson[0] = 1.0
    two_j = params.two_j
    k = np.arange(two_j + 1)
    log_binom = gammaln(two_j + 1.0) - gammaln(k + 1.0) - gammaln(two_j - k + 1.0)
    zeta = (Q + 1j * P) / np.sqrt(4.0 - r2)
    atom = np.exp(0.5 * log_binom + params.j * np.log1p(-r2 / 4.0)) * zeta ** k
    grid = boson[:, None] * atom[None, :]
    norm = np.sqrt(np.sum((grid * grid.conj()).real))
    return grid / norm


# ---------------------------------------------------------------------------
# Tavis-Cummings (rotating-wave) integrable limit
# ---------------------------------------------------------------------------

@dataclass
class LambdaBlock:
    """One excitation block of the Tavis-Cummings Hamiltonian.

    States are ordered by ``m_z`` ascending: index i holds
    ``|n = lam - i; j, m_z = -j + i>``.
    """

    lam: int
    entries: np.ndarray
    n_values: np.ndarray
    m_values: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def build_tavis_cummings_block(params: ModelParams, lam: int) -> LambdaBlock:
    """Block of H_TC = omega n + omega0 J_z + gamma/sqrt(2j) (a^dag J_- + a J_+)
    over the states with n + m_z + j = lam."""
    if lam < 0:
        raise ParameterError("lambda must be nonnegative")
    size = min(lam, params.two_j) + 1
    i = np.arange(size)
    m = -params.j + i
    n = lam - i
    h = np.zeros((size, size))
    h[i, i] = params.omega * n + params.omega0 * m
    g = params.gamma / np.sqrt(2.0 * params.j)
    # a J_+ sends (n, m) to (n-1, m+1): couples i to i+1
    amp = g * np.sqrt(n[:-1]) * np.sqrt(params.j * (params.j + 1) - m[:-1] * (m[:-1] + 1))
    h[i[:-1], i[:-1] + 1] = amp
    h[i[:-1] + 1, i[:-1]] = amp
    return LambdaBlock(lam, h, n, m)


@dataclass
class TavisCummingsSolution(EigenSolution):
    """Merged block spectra of the Tavis-Cummings model.

    ``coefficients`` is None; per-state wave functions are materialized on
    demand with :meth:`state_grid`.  ``complete_below`` is the scaled energy
    under which the merged spectrum is complete (the bottom of the first
    excluded block); above it levels are present but the sequence has gaps.
    """

    lambda_labels: np.ndarray = field(default=None)
    complete_below: float = np.inf
    block_vectors: list = field(default_factory=list, repr=False)
    state_index: np.ndarray = field(default=None, repr=False)

    def state_grid(self, k: int, n_max: Optional[int] = None) -> np.ndarray:
        """Fock-basis coefficient grid ``(n_max+1, 2j+1)`` of eigenstate k."""
        b, col = self.state_index[k]
        lam, vecs, n_values, m_values = self.block_vectors[b]
        if n_max is None:
            n_max = self.basis.boson_cutoff
        if n_values.max() > n_max:
            raise ParameterError(f"state {k} needs n_max >= {n_values.max()}")
        grid = np.zeros((n_max + 1, self.params.atomic_dim))
        a = (m_values + self.params.j).astype(int)
        grid[n_values, a] = vecs[:, col]
        return grid


def tavis_cummings_spectrum(params: ModelParams, lambda_max: int) -> TavisCummingsSolution:
    """Merged, sorted spectra of all blocks lambda = 0 .. lambda_max.

    Every block eigenstate is exactly converged (blocks are finite), so the
    converged mask is all-True; parity follows exactly from (-1)^lambda.
    """
    if lambda_max < 0:
        raise ParameterError("lambda_max must be nonnegative")
    energies, lams, where = [], [], []
    blocks = []
    for b, lam in enumerate(range(lambda_max + 1)):
        block = build_tavis_cummings_block(params, lam)
        vals, vecs = np.linalg.eigh(block.entries)
        blocks.append((lam, vecs, block.n_values, block.m_values))
        energies.append(vals)
        lams.append(np.full(block.dim, lam))
        where.append(np.stack([np.full(block.dim, b), np.arange(block.dim)], axis=1))
    energies = np.concatenate(energies) / params.j
    lams = np.concatenate(lams)
    where = np.concatenate(where)
    order = np.argsort(energies, kind="stable")
    next_block = build_tavis_cummings_block(params, lambda_max + 1)
    complete_below = float(np.linalg.eigvalsh(next_block.entries)[0] / params.j)
    n = len(energies)
    return TavisCummingsSolution(
        energies=energies[order],
        coefficients=None,
        basis=BasisSpec(FOCK, lambda_max),
        params=params,
        parity=np.where(lams[order] % 2 == 0, 1, -1).astype(np.int8),
        converged=np.ones(n, dtype=bool),
        epsilon_t=float(energies[order][-1]),
        lambda_labels=lams[order],
        complete_below=complete_below,
        block_vectors=blocks,
        state_index=where[order],
    )
