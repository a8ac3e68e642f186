"""Thick-restart block Lanczos for the low end of a symmetric spectrum.

The operator is only accessed through a block product ``apply(X)`` with
``X`` of shape ``(n, b)``. Every new block is orthogonalized twice against
the whole basis, so no spurious copies appear. Block size 2 resolves
the paired degeneracies of Fourier spectra. A fresh random block is
mixed in at each restart, and convergence is declared only after one
verification cycle leaves the wanted Ritz values unchanged. Without
that step an eigenspace of multiplicity above the block size could be
under-counted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NumericError


@dataclass
class LanczosResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    applications: int
    restarts: int


def _orth_against(Q, X):
    if Q.shape[1]:
        X = X - Q @ (Q.T @ X)
        X = X - Q @ (Q.T @ X)
    return X


def _basis(X, cap, floor):
    """Orthonormal basis of range(X) keeping at most ``cap`` directions."""
    if X.shape[1] == 0:
        return X
    U, s, _ = linalg.svd(X, full_matrices=False, check_finite=False)
    keep = int(np.sum(s > floor))
    return U[:, : min(keep, cap)]


def block_lanczos(apply, n, k, *, tol=1e-8, seed=0, block=2, max_applications=5000,
                  max_basis=None, dense_below=400):
    """Lowest ``k`` eigenpairs of a symmetric operator.

    Parameters
    ----------
    apply : callable
        ``apply(X) -> A @ X`` for ``X`` of shape ``(n, b)``.
    n : int
        Dimension.
    k : int
        Number of wanted eigenpairs, ``k <= n``.
    tol : float
        Certification threshold, ``||A v - theta v|| <= tol * max(theta, 1)``.
    seed : int
        Seed of the random start and injection blocks.
    block : int
        Block size.
    max_applications : int
        Budget of single-vector operator applications.
    max_basis : int, optional
        Basis size before a restart. Defaults to ``max(3k, k + 60)``.
    dense_below : int
        If ``n`` is at most this, the basis is grown to the full space and
        the Rayleigh-Ritz step is exact.

    Returns
    -------
    LanczosResult

    Raises
    ------
    NumericError
        When the application budget is exhausted before certification.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    if max_basis is None:
        max_basis = max(3 * k, k + 60)
    if n <= dense_below:
        max_basis = n
    max_basis = min(max(max_basis, k + 2 * block), n)
    keep = min(k + block + 4, max_basis - block) if max_basis < n else max_basis

    Q = np.empty((n, 0))
    AQ = np.empty((n, 0))
    new = _basis(rng.standard_normal((n, block)), block, 0.0)
    apps = 0
    restarts = 0
    prev = None
    verified = False
    while True:
        # expand
        while Q.shape[1] < max_basis:
            room = max_basis - Q.shape[1]
            if new.shape[1] == 0:
                # invariant subspace: continue from fresh random directions
                new = _basis(_orth_against(Q, rng.standard_normal((n, min(block, room)))),
                             min(block, room), 1e-8 * np.sqrt(n))
                if new.shape[1] == 0:
                    break
            new = new[:, :room]
            Anew = apply(new)
            apps += new.shape[1]
            Q = np.hstack([Q, new])
            AQ = np.hstack([AQ, Anew])
            W = _orth_against(Q, Anew)
            scale = max(np.abs(Anew).max(), 1.0)
            new = _basis(W, block, 1e-12 * scale)
            if apps >= max_applications:
                break
        T = Q.T @ AQ
        theta, S = linalg.eigh((T + T.T) / 2, check_finite=False)
        m = min(keep, Q.shape[1])
        Y = Q @ S[:, :m]
        AY = AQ @ S[:, :m]
        R = AY - Y * theta[:m]
        res = np.linalg.norm(R[:, :k], axis=0)
        ok = bool(np.all(res <= tol * np.maximum(np.abs(theta[:k]), 1.0)))
        full = Q.shape[1] >= n
        if ok and (full or (verified and prev is not None
                            and np.all(np.abs(theta[:k] - prev) <= tol * np.maximum(np.abs(theta[:k]), 1.0)))):
            return LanczosResult(theta[:k].copy(), Y[:, :k].copy(), res, apps, restarts)
        if ok:
            verified = True
        prev = theta[:k].copy()
        if apps >= max_applications:
            raise NumericError(
                "block Lanczos did not converge within the application budget",
                applications=apps, max_residual=float(res.max()), restarts=restarts,
                ritz_values=theta[:k].tolist(),
            )
        # thick restart: keep Ritz vectors, continue from residual block plus a random probe
        restarts += 1
        Q, AQ = Y, AY
        scale = max(np.abs(AY).max(), 1.0)
        new = _basis(_orth_against(Q, R), block, 1e-12 * scale)
        probe = _orth_against(np.hstack([Q, new]), rng.standard_normal((n, 1)))
        new = np.hstack([new, probe / np.linalg.norm(probe)])
