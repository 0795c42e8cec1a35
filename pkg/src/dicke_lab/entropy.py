"""Entanglement and Shannon entropies of Dicke eigenstates (nats).

The atomic reduction is a (2j+1) x (2j+1) problem regardless of the bosonic
cutoff, and by the Schmidt theorem its spectrum equals the bosonic
reduction's nonzero spectrum, so S_En is always computed on the atomic side.
The Shannon entropy is basis-dependent by design: the efficient basis keeps
it bounded at high energy where the Fock-basis value keeps growing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import basis_map, model
from .errors import NumericalError, ParameterError, TruncationError

EIG_FLOOR = 1e-14


def reduce_to_atomic(grid: np.ndarray, norm_tol: float = 1e-6) -> np.ndarray:
    """rho_A[m, m'] = sum_n c[n, m] conj(c[n, m']) for a (n_b, n_a) grid.

    The bosonic index must be an ordinary Fock index; efficient-basis states
    go through map_efficient_to_fock first (their displaced bosonic sectors
    differ per atomic column, so a naive trace over N is not a partial
    trace).
    """
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ParameterError("expected a single (boson, atom) coefficient grid")
    rho = grid.conj().T @ grid
    deficit = 1.0 - float(np.trace(rho).real)
    if deficit > norm_tol:
        raise TruncationError(
            f"state lost {deficit:.3e} of its norm before reduction")
    return rho


def von_neumann_entropy(rho: np.ndarray, trace_tol: float = 1e-8) -> float:
    """S = -sum lambda ln lambda over the reduced matrix spectrum.

    Eigenvalues below 1e-14 are dropped (dense eigensolvers produce
    numerical negatives at that scale)."""
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > trace_tol:
        raise NumericalError(f"reduced matrix trace {tr} deviates from 1")
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > EIG_FLOOR]
    return float(-np.sum(lam * np.log(lam)))


def shannon_entropy(coeffs: np.ndarray) -> float:
    """S_Sh = -sum |c|^2 ln |c|^2 with 0 ln 0 = 0 (basis-dependent)."""
    w = (np.asarray(coeffs) * np.asarray(coeffs).conj()).real.ravel()
    w = w[w > EIG_FLOOR]
    return float(-np.sum(w * np.log(w)))


ENTANGLEMENT = "entanglement"
SHANNON_NATIVE = "shannon_native"
SHANNON_FOCK = "shannon_fock"


@dataclass
class EntropyLattice:
    """Per-eigenstate entropy columns plus the scaled variants used for the
    Peres-lattice plots: exp(S_En)/(2j+1) and S_Sh/ln(2 j^2); the latter
    normalization constant is recorded in ``meta``."""

    epsilon: np.ndarray
    parity: np.ndarray
    s_en: np.ndarray
    s_sh_native: np.ndarray
    s_sh_fock: np.ndarray
    j: float
    meta: dict = field(default_factory=dict)

    @property
    def exp_s_en_scaled(self) -> np.ndarray:
        return np.exp(self.s_en) / (2.0 * self.j + 1.0)

    @property
    def s_sh_native_scaled(self) -> np.ndarray:
        return self.s_sh_native / np.log(2.0 * self.j ** 2)

    @property
    def s_sh_fock_scaled(self) -> np.ndarray:
        return self.s_sh_fock / np.log(2.0 * self.j ** 2)


def entropy_lattice(sol: model.EigenSolution,
                    which: tuple = (ENTANGLEMENT, SHANNON_NATIVE, SHANNON_FOCK),
                    n_max: Optional[int] = None, chunk: int = 256,
                    parity: Optional[int] = None) -> EntropyLattice:
    """Entropies of every converged state of ``sol`` (optionally one parity).

    Efficient-basis solutions are mapped chunk-by-chunk to the Fock-rotated
    representation for S_En and additionally rotated to the z atomic basis
    for the Fock-basis Shannon entropy.  NaN fills the columns that were not
    requested.
    """
    sel = model.select_states(sol, parity=parity, converged_only=True)
    n = sel.n_states
    nb = sel.basis.boson_cutoff + 1
    out = {name: np.full(n, np.nan) for name in
           (ENTANGLEMENT, SHANNON_NATIVE, SHANNON_FOCK)}
    is_tc = isinstance(sel, model.TavisCummingsSolution)
    if is_tc:
        for k in range(n):
            grid = sel.state_grid(k)
            if ENTANGLEMENT in which:
                out[ENTANGLEMENT][k] = von_neumann_entropy(reduce_to_atomic(grid))
            if SHANNON_NATIVE in which or SHANNON_FOCK in which:
                s = shannon_entropy(grid)
                out[SHANNON_NATIVE][k] = s
                out[SHANNON_FOCK][k] = s
    else:
        grids = sel.coefficients.reshape(nb, sel.params.atomic_dim, n)
        fock_native = sel.basis.kind == model.FOCK
        if n_max is None:
            n_max = sel.basis.boson_cutoff if fock_native else 3 * sel.basis.boson_cutoff
        for start in range(0, n, chunk):
            sl = slice(start, min(start + chunk, n))
            block = grids[:, :, sl]
            if SHANNON_NATIVE in which:
                out[SHANNON_NATIVE][sl] = [
                    shannon_entropy(block[:, :, i]) for i in range(block.shape[2])]
            if fock_native:
                mapped = block
            elif ENTANGLEMENT in which or SHANNON_FOCK in which:
                mapped = basis_map.map_efficient_to_fock(block, sel.params, n_max)
            if ENTANGLEMENT in which:
                # atomic rotation is local, S_En is the same with or without it
                out[ENTANGLEMENT][sl] = [
                    von_neumann_entropy(reduce_to_atomic(mapped[:, :, i]))
                    for i in range(mapped.shape[2])]
            if SHANNON_FOCK in which:
                if fock_native:
                    out[SHANNON_FOCK][sl] = out[SHANNON_NATIVE][sl] \
                        if SHANNON_NATIVE in which else [
                            shannon_entropy(block[:, :, i])
                            for i in range(block.shape[2])]
                else:
                    rotated = basis_map.rotate_atomic_x_to_z(mapped, sel.params.j)
                    out[SHANNON_FOCK][sl] = [
                        shannon_entropy(rotated[:, :, i])
                        for i in range(rotated.shape[2])]
    meta = dict(j=sel.params.j, basis=sel.basis.kind, n_max_mapping=None if is_tc else n_max,
                shannon_scale=float(np.log(2.0 * sel.params.j ** 2)),
                which=tuple(which))
    return EntropyLattice(sel.energies.copy(), sel.parity.copy(),
                          out[ENTANGLEMENT], out[SHANNON_NATIVE],
                          out[SHANNON_FOCK], sel.params.j, meta)