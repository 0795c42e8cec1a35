"""Displaced-Fock overlaps and efficient-basis -> Fock-basis coefficient maps.

Conventions used across the package:

* Coefficient grids are indexed ``[bosonic, atomic]`` with the atomic index
  ``a = m + j`` ascending (``a = 0`` is ``m = -j``).  Flat vectors use the
  atomic index fastest: ``flat = b * (2j + 1) + a``.
* ``|j, m_x>`` denotes the J_x eigenstate obtained by rotating ``|j, m_z=m>``
  with ``exp(-i (pi/2) J_y)``; the rotation matrix is real orthogonal and its
  ``m_x = +j`` column is the all-positive binomial vector.
* The displaced basis state is ``|N>_{m_x} = D(alpha_{m_x}) |N>`` with
  ``alpha_{m_x} = -G m_x`` and ``D(a) = exp(a (adag - a))`` for real ``a``.

All overlaps here are real.  ``<n|D(a)|N>`` is evaluated with the associated
Laguerre three-term recurrence in the lower index, run on pre-scaled values so
every intermediate stays bounded by 1 (the raw polynomial overflows long
before the physical overlap does).
"""

from __future__ import annotations

import threading

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import ParameterError, TruncationError

_kernel_cache: dict[tuple[float, int, int], np.ndarray] = {}
_wigner_cache: dict[int, np.ndarray] = {}
_cache_lock = threading.Lock()


def _scaled_laguerre_table(alpha: float, m_top: int, k_top: int) -> np.ndarray:
    """Table ``T[M, k] = <M+k|D(alpha)|M>`` for ``0 <= M <= m_top``, ``0 <= k <= k_top``.

    T is the Laguerre recurrence in the lower index M with the factor
    ``sqrt(M!/(M+k)!) alpha^k exp(-alpha^2/2)`` folded into the seed, so the
    recurrence runs on overlap amplitudes (|T| <= 1) instead of raw
    polynomial values.
    """
    x = alpha * alpha
    k = np.arange(k_top + 1, dtype=float)
    table = np.zeros((m_top + 1, k_top + 1))
    if alpha == 0.0:
        table[:, 0] = 1.0
        return table
    # T_0^k = alpha^k e^{-x/2} / sqrt(k!), assembled in log space.
    log_t0 = k * np.log(abs(alpha)) - 0.5 * x - 0.5 * gammaln(k + 1.0)
    sign = np.where(k % 2 == 0, 1.0, np.sign(alpha))
    table[0] = sign * np.exp(log_t0)
    if m_top == 0:
        return table
    prev = np.zeros(k_top + 1)
    cur = table[0]
    for m in range(m_top):
        nxt = ((2 * m + 1 + k - x) * cur - np.sqrt(m * (m + k)) * prev) \
            / np.sqrt((m + 1) * (m + 1 + k))
        table[m + 1] = nxt
        prev, cur = cur, nxt
    return table


def displacement_element(n: int, N: int, alpha: float) -> float:
    """Single matrix element ``<n|D(alpha)|N>`` of the displacement operator.

    For ``n < N`` the transpose relation ``<n|D(a)|N> = (-1)^(N-n) <N|D(a)|n>``
    (valid for real ``a``) is used instead of extending the ``n >= N`` formula.
    """
    if n < 0 or N < 0:
        raise ParameterError(f"Fock indices must be nonnegative, got n={n}, N={N}")
    if n >= N:
        return float(_scaled_laguerre_table(alpha, N, n - N)[N, n - N])
    value = _scaled_laguerre_table(alpha, n, N - n)[n, N - n]
    return float(value if (N - n) % 2 == 0 else -value)


def displacement_kernel(alpha: float, n_max: int, N_max: int) -> np.ndarray:
    """Dense ``(n_max+1, N_max+1)`` table of ``<n|D(alpha)|N>``.

    Results are cached per ``(alpha, n_max, N_max)``; the returned array is
    read-only and safe to share between threads.
    """
    if n_max < 0 or N_max < 0:
        raise ParameterError("kernel cutoffs must be nonnegative")
    key = (float(alpha), int(n_max), int(N_max))
    with _cache_lock:
        hit = _kernel_cache.get(key)
    if hit is not None:
        return hit
    table = _scaled_laguerre_table(alpha, min(n_max, N_max), max(n_max, N_max))
    kernel = np.zeros((n_max + 1, N_max + 1))
    n = np.arange(n_max + 1)[:, None]
    N = np.arange(N_max + 1)[None, :]
    lower = np.where(n >= N, N, n)
    offset = np.abs(n - N)
    kernel = table[lower, offset]
    # transpose relation supplies the sign of the upper triangle (n < N)
    kernel = np.where((n < N) & (offset % 2 == 1), -kernel, kernel)
    kernel.setflags(write=False)
    with _cache_lock:
        _kernel_cache[key] = kernel
    return kernel


def wigner_d_half_pi(j: float) -> np.ndarray:
    """Real orthogonal matrix ``d[m_z + j, m_x + j] = <j, m_z | j, m_x>``.

    Columns are the J_x eigenstates in the J_z basis, obtained from the
    tridiagonal J_x eigenproblem (stable at any j, unlike the closed-form
    Wigner sum).  eigh leaves each column with an arbitrary sign, so signs
    are pinned to the rotation convention by walking the x-frame lowering
    operator ``-J_z + (J_- - J_+)/2`` down from the all-positive binomial
    column at ``m_x = +j``.
    """
    two_j = int(round(2 * j))
    if two_j < 0 or abs(2 * j - two_j) > 1e-12:
        raise ParameterError(f"j must be a nonnegative half-integer, got {j}")
    with _cache_lock:
        hit = _wigner_cache.get(two_j)
    if hit is not None:
        return hit
    jj = two_j / 2.0
    dim = two_j + 1
    m = np.arange(dim) - jj
    cp = np.sqrt(np.maximum(jj * (jj + 1) - m * (m + 1), 0.0))  # c_+(m)
    if dim == 1:
        d = np.ones((1, 1))
    else:
        _, d = eigh_tridiagonal(np.zeros(dim), 0.5 * cp[:-1])

        def lower_x(v):
            w = -m * v
            w[:-1] += 0.5 * cp[:-1] * v[1:]
            w[1:] -= 0.5 * cp[:-1] * v[:-1]
            return w

        top = d[:, dim - 1]
        if top[np.argmax(np.abs(top))] < 0:
            d[:, dim - 1] = -top
        for col in range(dim - 1, 0, -1):
            # J~_- maps column col to col-1 with a positive coefficient
            if d[:, col - 1] @ lower_x(d[:, col]) < 0:
                d[:, col - 1] = -d[:, col - 1]
    d.setflags(write=False)
    with _cache_lock:
        _wigner_cache[two_j] = d
    return d


def rotate_atomic_x_to_z(coeffs: np.ndarray, j: float) -> np.ndarray:
    """Re-express the atomic index of a coefficient grid from |j,m_x> to |j,m_z>.

    ``coeffs`` has shape ``(n_boson, 2j+1)`` or ``(n_boson, 2j+1, n_states)``.
    Norm is preserved exactly (orthogonal rotation).
    """
    d = wigner_d_half_pi(j)
    return np.einsum("za,ba...->bz...", d, coeffs, optimize=True)


def rotate_atomic_z_to_x(coeffs: np.ndarray, j: float) -> np.ndarray:
    """Inverse of :func:`rotate_atomic_x_to_z`."""
    d = wigner_d_half_pi(j)
    return np.einsum("za,bz...->ba...", d, coeffs, optimize=True)


def map_efficient_to_fock(coeffs: np.ndarray, params, n_max: int,
                          norm_tol: float = 1e-6) -> np.ndarray:
    """Map efficient-basis coefficients ``C[N, m_x]`` to ``C[n, m_x]``.

    The bosonic index becomes an ordinary Fock index while the atomic index
    stays in the rotated ``|j, m_x>`` basis:
    ``C[n, m_x] = sum_N C[N, m_x] <n|D(-G m_x)|N>``.

    ``n_max >= 3 N_max`` is enforced; below that the mapped coefficients are
    not trustworthy and silently corrupt every downstream entropy.  A norm
    deficit beyond ``norm_tol`` on any input state raises TruncationError.

    Accepts a single grid ``(N_max+1, 2j+1)`` or a stack
    ``(N_max+1, 2j+1, n_states)``.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.ndim not in (2, 3):
        raise ParameterError("coefficient grid must be 2- or 3-dimensional")
    N_max = coeffs.shape[0] - 1
    dim_a = coeffs.shape[1]
    two_j = dim_a - 1
    if int(round(2 * params.j)) != two_j:
        raise ParameterError(
            f"atomic dimension {dim_a} does not match 2j+1 = {int(round(2 * params.j)) + 1}")
    if n_max < 3 * N_max:
        raise ParameterError(
            f"n_max = {n_max} violates the truncation rule n_max >= 3 N_max = {3 * N_max}")
    m_values = np.arange(dim_a) - params.j
    out_shape = (n_max + 1,) + coeffs.shape[1:]
    out = np.empty(out_shape, dtype=coeffs.dtype)
    for a, m in enumerate(m_values):
        kernel = displacement_kernel(-params.G * m, n_max, N_max)
        out[:, a] = np.tensordot(kernel, coeffs[:, a], axes=(1, 0))
    in_norm = np.sqrt(np.einsum("ba...,ba...->...", coeffs, coeffs.conj()).real)
    out_norm = np.sqrt(np.einsum("ba...,ba...->...", out, out.conj()).real)
    deficit = np.max(in_norm - out_norm)
    if deficit > norm_tol:
        raise TruncationError(
            f"mapping lost {deficit:.3e} of state norm; increase n_max (rule: 3 N_max)")
    return out


def map_fock_to_efficient(coeffs: np.ndarray, params, N_max: int) -> np.ndarray:
    """Project a Fock-rotated grid ``C[n, m_x]`` onto the efficient basis.

    Adjoint of :func:`map_efficient_to_fock` (the kernel columns are
    orthonormal): ``C[N, m_x] = sum_n <n|D(-G m_x)|N> C[n, m_x]``.  Weight
    outside the truncation shows up as a norm deficit; no error is raised
    here since callers (state preparation) have their own budgets.
    """
    coeffs = np.asarray(coeffs)
    n_max = coeffs.shape[0] - 1
    dim_a = coeffs.shape[1]
    m_values = np.arange(dim_a) - params.j
    out = np.empty((N_max + 1,) + coeffs.shape[1:], dtype=coeffs.dtype)
    for a, m in enumerate(m_values):
        kernel = displacement_kernel(-params.G * m, n_max, N_max)
        out[:, a] = np.tensordot(kernel.T, coeffs[:, a], axes=(1, 0))
    return out


def clear_caches() -> None:
    """Drop all cached kernels and rotation matrices (mainly for tests)."""
    with _cache_lock:
        _kernel_cache.clear()
        _wigner_cache.clear()
