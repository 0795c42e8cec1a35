"""Classical limit of the Dicke model: flow, chaos maps, density of states.

Phase-space points are ``x = (q, p, Q, P)`` with the atomic variables bounded
by ``Q^2 + P^2 <= 4``.  The scaled classical Hamiltonian is

    h(x) = omega/2 (q^2 + p^2) + omega0/2 (Q^2 + P^2) - omega0
           + 2 gamma q Q sqrt(1 - (Q^2 + P^2)/4)

and energies are in the same eps = E/j units as the quantum spectra.  All
array routines accept batches ``(..., 4)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad, solve_ivp

from . import _flow_kernels
from .errors import (EmptyShellError, IntegrationError, ParameterError,
                     SingularityError)
from .model import ModelParams

_BOUNDARY_EPS = 1e-12


@dataclass(frozen=True)
class PhaseSpacePoint:
    q: float
    p: float
    Q: float
    P: float

    def as_array(self) -> np.ndarray:
        return np.array([self.q, self.p, self.Q, self.P])

    @classmethod
    def from_array(cls, x) -> "PhaseSpacePoint":
        q, p, Q, P = np.asarray(x, dtype=float)
        return cls(q, p, Q, P)


@dataclass
class Trajectory:
    """Integrated orbit with its energy ledger (drift over the stored samples)."""

    times: np.ndarray
    states: np.ndarray  # (n_samples, 4)
    energy_drift: float
    params: ModelParams


@dataclass
class ChaosMap:
    """Fraction of chaotic initial conditions over an (epsilon, gamma) grid."""

    epsilon_grid: np.ndarray
    gamma_grid: np.ndarray
    fraction: np.ndarray  # (n_eps, n_gamma); NaN marks empty shells
    samples_per_cell: int
    seed: int
    lambda_cut: float
    t_final: float


def _as_states(x) -> np.ndarray:
    if isinstance(x, PhaseSpacePoint):
        x = x.as_array()
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 4:
        raise ParameterError("phase-space states must have trailing dimension 4")
    return x


def classical_hamiltonian(x, params: ModelParams):
    """Scaled classical energy h(x); raises outside the atomic disk."""
    x = _as_states(x)
    q, p, Q, P = np.moveaxis(x, -1, 0)
    r2 = Q * Q + P * P
    if np.any(r2 > 4.0 + 1e-12):
        raise ParameterError("atomic variables violate Q^2 + P^2 <= 4")
    s = np.sqrt(np.maximum(1.0 - r2 / 4.0, 0.0))
    h = (0.5 * params.omega * (q * q + p * p)
         + 0.5 * params.omega0 * r2 - params.omega0
         + 2.0 * params.gamma * q * Q * s)
    return h if h.ndim else float(h)


def epsilon_ground(params: ModelParams) -> float:
    """Classical ground-state energy (analytic superradiant minimum)."""
    if params.gamma <= params.gamma_c:
        return -params.omega0
    ratio = (params.gamma / params.gamma_c) ** 2
    return -0.5 * params.omega0 * (ratio + 1.0 / ratio)


def equations_of_motion(x, params: ModelParams):
    """Hamiltonian vector field (dq, dp, dQ, dP) = (h_p, -h_q, h_P, -h_Q)."""
    x = _as_states(x)
    q, p, Q, P = np.moveaxis(x, -1, 0)
    r2 = Q * Q + P * P
    if np.any(4.0 - r2 < _BOUNDARY_EPS):
        raise SingularityError("state too close to the atomic boundary Q^2 + P^2 = 4")
    s = np.sqrt(1.0 - r2 / 4.0)
    g = params.gamma
    h_q = params.omega * q + 2.0 * g * Q * s
    h_Q = params.omega0 * Q + 2.0 * g * q * s - 0.5 * g * q * Q * Q / s
    h_P = params.omega0 * P - 0.5 * g * q * Q * P / s
    out = np.stack([params.omega * p, -h_q, h_P, -h_Q], axis=-1)
    return out


def flow_jacobian(x, params: ModelParams):
    """Jacobian d(eom)/dx, batched as (..., 4, 4); drives tangent dynamics."""
    x = _as_states(x)
    q, p, Q, P = np.moveaxis(x, -1, 0)
    r2 = Q * Q + P * P
    if np.any(4.0 - r2 < _BOUNDARY_EPS):
        raise SingularityError("state too close to the atomic boundary Q^2 + P^2 = 4")
    s = np.sqrt(1.0 - r2 / 4.0)
    s3 = s ** 3
    g = params.gamma
    w0 = params.omega0
    h_qQ = 2.0 * g * (s - Q * Q / (4.0 * s))
    h_qP = -0.5 * g * Q * P / s
    h_QQ = w0 - g * q * (1.5 * Q / s + Q ** 3 / (8.0 * s3))
    h_QP = -g * q * (0.5 * P / s + Q * Q * P / (8.0 * s3))
    h_PP = w0 - g * q * Q * (0.5 / s + P * P / (8.0 * s3))
    z = np.zeros_like(q)
    w = np.full_like(q, params.omega)
    rows = [
        np.stack([z, w, z, z], axis=-1),
        np.stack([-w, z, -h_qQ, -h_qP], axis=-1),
        np.stack([h_qP, z, h_QP, h_PP], axis=-1),
        np.stack([-h_qQ, z, -h_QQ, -h_QP], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def _rhs_flow(params):
    def rhs(t, y):
        return equations_of_motion(y.reshape(-1, 4), params).ravel()
    return rhs


def integrate(x0, t_final: float, params: ModelParams, tol: float = 1e-12,
              n_samples: Optional[int] = None, step: float = 0.02) -> Trajectory:
    """Integrate one orbit; energy drift < 1e-8 over t = 1e4 by construction.

    Long horizons use the compiled Gauss collocation engine (8th order,
    symplectic/time-symmetric, locally step-halving near the atomic-disk
    boundary), so the energy error stays bounded instead of accumulating.
    Short runs (|t| <= 2000) use adaptive DOP853, which also provides the
    dense output used for section detection.
    """
    x0 = _as_states(x0).reshape(1, 4)
    if n_samples is None:
        n_samples = int(min(20000, max(1000, 2 * abs(t_final))))
    if abs(t_final) <= 2000.0:
        times = np.linspace(0.0, t_final, n_samples)
        sol = solve_ivp(_rhs_flow(params), (0.0, t_final), x0[0], method="DOP853",
                        rtol=tol, atol=tol, t_eval=times)
        if not sol.success:
            raise IntegrationError(f"integration failed: {sol.message}")
        states = sol.y.T.reshape(-1, 4)
        times = sol.t
    else:
        times, batch, _ = integrate_batch(x0, t_final, params,
                                          n_samples=n_samples, step=step)
        states = batch[:, 0, :]
    energies = classical_hamiltonian(states, params)
    drift = float(np.max(np.abs(energies - energies[0])))
    return Trajectory(times=times, states=states, energy_drift=drift, params=params)


def integrate_batch(x0s: np.ndarray, t_final: float, params: ModelParams,
                    n_samples: int = 256, step: float = 0.02):
    """Integrate many orbits at once with the Gauss collocation engine.

    Returns ``(times, states, drifts)`` with states shaped
    (n_samples, n_orbits, 4) and per-orbit maximum energy deviation measured
    on every accepted step (not just the stored samples).
    """
    if t_final <= 0:
        raise ParameterError("t_final must be positive")
    x0s = _as_states(x0s).reshape(-1, 4)
    n_steps = max(1, int(np.ceil(t_final / step)))
    h = t_final / n_steps
    sample_every = max(1, int(np.ceil(n_steps / max(1, n_samples - 1))))
    kept_max = n_steps // sample_every + 2
    y = x0s.copy()
    samples = np.empty((kept_max, len(y), 4))
    drift = np.zeros(len(y))
    status, kept = _flow_kernels._run(
        y, h, n_steps, sample_every, False,
        params.omega, params.omega0, params.gamma, samples, drift)
    if status != 0:
        raise IntegrationError("step-size underflow in collocation integrator")
    idx = np.arange(1, kept) * sample_every * h
    idx[-1] = n_steps * h
    times = np.concatenate([[0.0], idx])
    return times, samples[:kept], drift


def lyapunov_exponent(x0, params: ModelParams, t_final: float = 1000.0,
                      renorm_dt: float = 1.0, step: float = 0.05) -> float:
    """Largest Lyapunov exponent of one orbit (tangent-map renormalization)."""
    lam = lyapunov_batch(_as_states(x0).reshape(1, 4), params, t_final,
                         renorm_dt=renorm_dt, step=step)
    return float(lam[0])


def lyapunov_batch(x0s: np.ndarray, params: ModelParams, t_final: float = 1000.0,
                   renorm_dt: float = 1.0, step: float = 0.05) -> np.ndarray:
    """Largest Lyapunov exponents for a batch of initial conditions.

    State and tangent evolve together under the collocation engine; the
    tangent is renormalized every ``renorm_dt`` with log stretches
    accumulated, and the exponent averages the second half of the run only,
    discarding transients.  Clipped at zero.
    """
    x0s = _as_states(x0s).reshape(-1, 4)
    n = x0s.shape[0]
    n_seg = max(2, int(round(t_final / renorm_dt)))
    steps_per_seg = max(1, int(round(renorm_dt / step)))
    h = renorm_dt / steps_per_seg
    y = np.concatenate([x0s, np.full((n, 4), 0.5)], axis=1)
    logs = np.zeros((n, n_seg))
    status = _flow_kernels._segments(
        y, h, steps_per_seg, n_seg, params.omega, params.omega0, params.gamma, logs)
    if status != 0:
        raise IntegrationError("step-size underflow in tangent integration")
    half = n_seg // 2
    lam = logs[:, half:].sum(axis=1) / (renorm_dt * (n_seg - half))
    return np.maximum(lam, 0.0)


def sample_energy_shell(epsilon: float, params: ModelParams, count: int,
                        seed: int, max_tries: int = 2000) -> np.ndarray:
    """Rejection-sample ``count`` points exactly on the energy shell h = epsilon.

    (Q, P) uniform on the atomic disk, q uniform on the energy-allowed
    interval; p is solved from the bosonic kinetic term with a random sign,
    so accepted points satisfy |h - eps| at roundoff level.  Deterministic
    under the seed.  Uniformity on the shell measure is not claimed.
    """
    eps_gs = epsilon_ground(params)
    if epsilon < eps_gs:
        raise EmptyShellError(f"epsilon = {epsilon} lies below eps_GS = {eps_gs:.6f}")
    rng = np.random.default_rng(seed)
    w, w0, g = params.omega, params.omega0, params.gamma
    q_bound = (2.0 * g + np.sqrt(4.0 * g * g + 2.0 * w * (epsilon + w0))) / w
    out = np.empty((count, 4))
    have = 0
    for _ in range(max_tries):
        need = count - have
        draw = max(4 * need, 64)
        r = 2.0 * np.sqrt(rng.random(draw))
        th = 2.0 * np.pi * rng.random(draw)
        Q, P = r * np.cos(th), r * np.sin(th)
        q = rng.uniform(-q_bound, q_bound, draw)
        sign = np.where(rng.random(draw) < 0.5, 1.0, -1.0)
        s = np.sqrt(np.maximum(1.0 - (Q * Q + P * P) / 4.0, 0.0))
        rest = 0.5 * w * q * q + 0.5 * w0 * (Q * Q + P * P) - w0 + 2.0 * g * q * Q * s
        p2 = 2.0 * (epsilon - rest) / w
        ok = p2 >= 0.0
        k = min(int(ok.sum()), need)
        if k:
            idx = np.flatnonzero(ok)[:k]
            out[have:have + k, 0] = q[idx]
            out[have:have + k, 1] = sign[idx] * np.sqrt(p2[idx])
            out[have:have + k, 2] = Q[idx]
            out[have:have + k, 3] = P[idx]
            have += k
        if have == count:
            return out
    raise EmptyShellError(
        f"shell at epsilon = {epsilon} too thin: {have}/{count} points accepted")


def chaos_fraction_map(epsilon_grid, gamma_grid, params: ModelParams,
                       samples_per_cell: int = 200, lambda_cut: Optional[float] = None,
                       seed: int = 0, t_final: float = 600.0,
                       step: float = 0.05) -> ChaosMap:
    """Fraction of shell-sampled initial conditions with lambda > lambda_cut.

    ``params.gamma`` is ignored; the map sweeps the gamma grid.  Cells whose
    energy lies below the ground energy of that gamma column are NaN.  Cell
    seeds derive from (seed, i_eps, i_gamma), never from execution order.
    """
    epsilon_grid = np.asarray(epsilon_grid, dtype=float)
    gamma_grid = np.asarray(gamma_grid, dtype=float)
    if epsilon_grid.size == 0 or gamma_grid.size == 0:
        raise ParameterError("grids must be nonempty")
    if samples_per_cell < 1:
        raise ParameterError("samples_per_cell must be >= 1")
    if lambda_cut is None:
        lambda_cut = 1e-2 * params.omega
    fraction = np.full((epsilon_grid.size, gamma_grid.size), np.nan)
    for ig, gamma in enumerate(gamma_grid):
        cell_params = ModelParams(params.omega, params.omega0, float(gamma), params.j)
        eps_gs = epsilon_ground(cell_params)
        for ie, eps in enumerate(epsilon_grid):
            if eps < eps_gs:
                continue
            cell_seed = np.random.SeedSequence([int(seed), ie, ig]).generate_state(1)[0]
            try:
                x0s = sample_energy_shell(float(eps), cell_params,
                                          samples_per_cell, int(cell_seed))
            except EmptyShellError:
                continue
            lam = lyapunov_batch(x0s, cell_params, t_final=t_final, step=step)
            fraction[ie, ig] = float(np.mean(lam > lambda_cut))
    return ChaosMap(epsilon_grid, gamma_grid, fraction, samples_per_cell,
                    seed, float(lambda_cut), float(t_final))


_COORD = {"q": 0, "p": 1, "Q": 2, "P": 3}


def poincare_section(x0, params: ModelParams, t_final: float,
                     plane: tuple = ("p", 0.0, 1), record: tuple = ("Q", "P"),
                     tol: float = 1e-12) -> np.ndarray:
    """Section crossings of one orbit; default plane p = 0 with dp/dt > 0.

    Crossing times are located by root finding on the dense solver output;
    returns an array of the recorded coordinate pairs (possibly empty).
    """
    coord, level, direction = plane
    ci = _COORD[coord]
    x0 = _as_states(x0).reshape(4)

    def event(t, y):
        return y[ci] - level

    event.direction = direction
    sol = solve_ivp(_rhs_flow(params), (0.0, t_final), x0, method="DOP853",
                    rtol=tol, atol=tol, events=event, dense_output=False)
    if not sol.success:
        raise IntegrationError(f"integration failed: {sol.message}")
    hits = sol.y_events[0]
    if hits.size == 0:
        return np.empty((0, len(record)))
    cols = [_COORD[c] for c in record]
    return hits[:, cols]


# ---------------------------------------------------------------------------
# Semiclassical density of states
# ---------------------------------------------------------------------------

def _radial_terms(r: np.ndarray, params: ModelParams):
    """A(r) and B(r) with h_min(Q,P) = A - B cos^2(theta) on the atomic disk."""
    r2 = r * r
    a = 0.5 * params.omega0 * r2 - params.omega0
    b = (2.0 * params.gamma ** 2 / params.omega) * r2 * (1.0 - r2 / 4.0)
    return a, b


def _radial_breakpoints(epsilon: float, params: ModelParams):
    """Radii in (0, 2) where the angular measure changes regime."""
    pts = []
    w0, g, w = params.omega0, params.gamma, params.omega
    t = 2.0 * (epsilon + w0) / w0  # A(r) = eps  at r^2 = t
    if 0.0 < t < 4.0:
        pts.append(np.sqrt(t))
    if g > 0:
        c2 = g * g / (2.0 * w)
        c1 = 0.5 * w0 - 2.0 * g * g / w
        c0 = -(w0 + epsilon)
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc >= 0.0:
            for root in ((-c1 + np.sqrt(disc)) / (2 * c2), (-c1 - np.sqrt(disc)) / (2 * c2)):
                if 0.0 < root < 4.0:
                    pts.append(np.sqrt(root))
    return sorted(set(np.round(pts, 15)))


def semiclassical_dos(epsilon: float, params: ModelParams,
                      rel_tol: float = 1e-4) -> float:
    """Semiclassical density of states nu(eps) = V(eps) / (2 pi hbar_eff)^2.

    The bosonic (q, p) part of the shell-volume integral reduces exactly to
    2 pi / omega on the energetically allowed part of the atomic disk; the
    angular measure is likewise exact in polar coordinates, leaving a 1-D
    adaptive radial quadrature.  Saturates at 2 j^2 / omega for large eps.
    """
    if epsilon < epsilon_ground(params):
        return 0.0

    def angular(r):
        a, b = _radial_terms(np.asarray(r), params)
        u = epsilon - a
        if u >= 0.0:
            return 2.0 * np.pi
        if b <= 0.0 or u + b < 0.0:
            return 0.0
        return 4.0 * np.arccos(np.sqrt(np.clip(-u / b, 0.0, 1.0)))

    val, _ = quad(lambda r: r * angular(r), 0.0, 2.0,
                  points=_radial_breakpoints(epsilon, params),
                  epsrel=rel_tol, epsabs=0.0, limit=200)
    volume = (2.0 * np.pi / params.omega) * val
    return volume * params.j ** 2 / (4.0 * np.pi ** 2)


def semiclassical_state_count(epsilon: float, params: ModelParams,
                              rel_tol: float = 1e-4) -> float:
    """Integrated semiclassical level count from eps_GS up to ``epsilon``."""
    if epsilon <= epsilon_ground(params):
        return 0.0

    def angular_cumulative(r):
        a, b = _radial_terms(np.asarray(r), params)
        u = epsilon - a
        if u >= 0.0:
            return 2.0 * np.pi * u + np.pi * b
        if b <= 0.0 or u + b <= 0.0:
            return 0.0
        th = np.arccos(np.sqrt(np.clip(-u / b, 0.0, 1.0)))
        return 4.0 * (u * th + b * (0.5 * th + 0.25 * np.sin(2.0 * th)))

    val, _ = quad(lambda r: r * angular_cumulative(r), 0.0, 2.0,
                  points=_radial_breakpoints(epsilon, params),
                  epsrel=rel_tol, epsabs=0.0, limit=200)
    return val * params.j ** 2 / (2.0 * np.pi * params.omega)
