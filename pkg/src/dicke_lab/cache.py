"""Versioned on-disk cache for eigen-solutions.

The dense diagonalization dominates every quantum pipeline's runtime and the
same solution is reused by four of them, so filtered solutions are stored as
checksummed ``.npz`` files keyed by (params, basis, tolerances, code
version).  Concurrent invocations coordinate through advisory file locks; a
corrupt entry is reported and rebuilt, never trusted.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import warnings

import numpy as np

from .archive import CODE_VERSION
from .errors import CacheError
from .model import BasisSpec, EigenSolution, ModelParams

ENV_CACHE_ROOT = "DICKE_LAB_CACHE"


def cache_root() -> str:
    root = os.environ.get(ENV_CACHE_ROOT)
    if root:
        return root
    return os.path.join(os.path.expanduser("~"), ".cache", "dicke-lab")


def solution_key(params: ModelParams, basis: BasisSpec, tol_energy: float,
                 tol_tail: float, reference_factor: float) -> str:
    payload = json.dumps({
        "omega": params.omega, "omega0": params.omega0,
        "gamma": params.gamma, "j": params.j,
        "kind": basis.kind, "cutoff": basis.boson_cutoff,
        "tol_energy": tol_energy, "tol_tail": tol_tail,
        "reference_factor": reference_factor,
        "version": CODE_VERSION,
    }, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:32]


class _Lock:
    def __init__(self, path: str):
        self._path = path
        self._fh = None

    def __enter__(self):
        self._fh = open(self._path, "a")
        fcntl.flock(self._fh, fcntl.LOCK_EX)
        return self

    def __exit__(self, *exc):
        fcntl.flock(self._fh, fcntl.LOCK_UN)
        self._fh.close()


def store_solution(key: str, sol: EigenSolution) -> str:
    root = cache_root()
    os.makedirs(root, exist_ok=True)
    path = os.path.join(root, f"{key}.npz")
    with _Lock(path + ".lock"):
        tmp = path + ".tmp.npz"
        np.savez(
            tmp,
            energies=sol.energies,
            coefficients=sol.coefficients if sol.coefficients is not None
            else np.empty((0, 0)),
            parity=sol.parity, converged=sol.converged,
            epsilon_t=np.array([sol.epsilon_t]),
            model=np.array([sol.params.omega, sol.params.omega0,
                            sol.params.gamma, sol.params.j]),
            basis_cutoff=np.array([sol.basis.boson_cutoff]),
            basis_kind=np.array([sol.basis.kind]),
        )
        digest = _file_digest(tmp)
        os.replace(tmp, path)
        with open(path + ".sha256", "w") as fh:
            fh.write(digest + "\n")
    return path


def load_solution(key: str) -> EigenSolution:
    root = cache_root()
    path = os.path.join(root, f"{key}.npz")
    if not os.path.exists(path):
        raise KeyError(key)
    with _Lock(path + ".lock"):
        try:
            with open(path + ".sha256") as fh:
                expected = fh.read().strip()
        except FileNotFoundError as exc:
            raise CacheError(f"cache entry {key} has no checksum") from exc
        if _file_digest(path) != expected:
            raise CacheError(f"cache entry {key} failed its checksum")
        with np.load(path, allow_pickle=False) as payload:
            omega, omega0, gamma, j = payload["model"]
            params = ModelParams(float(omega), float(omega0), float(gamma), float(j))
            basis = BasisSpec(str(payload["basis_kind"][0]),
                              int(payload["basis_cutoff"][0]))
            coeffs = payload["coefficients"]
            return EigenSolution(
                energies=payload["energies"],
                coefficients=None if coeffs.size == 0 else coeffs,
                basis=basis, params=params,
                parity=payload["parity"],
                converged=payload["converged"],
                epsilon_t=float(payload["epsilon_t"][0]),
            )


def load_or_rebuild(key: str, builder, use_cache: bool = True) -> EigenSolution:
    """Fetch a cached solution or compute and store it.

    A corrupt cache entry is rebuilt with a warning rather than trusted or
    fatal.
    """
    if use_cache:
        try:
            return load_solution(key)
        except KeyError:
            pass
        except CacheError as exc:
            warnings.warn(f"rebuilding corrupt cache entry: {exc}")
    sol = builder()
    if use_cache:
        store_solution(key, sol)
    return sol


def _file_digest(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()