"""Iterative symmetric eigensolvers used by the exact and DMRG modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Matvec = Callable[[np.ndarray], np.ndarray]


class ConvergenceError(RuntimeError):
    """An iterative eigensolver ran out of iterations."""


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray  # columns
    residuals: np.ndarray
    converged: np.ndarray
    iterations: int


def fix_sign(v: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Flip ``v`` so its first component with ``|v_i| > atol`` is positive."""
    nz = np.flatnonzero(np.abs(v) > atol)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def _orthogonalize(w: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    # two passes of classical Gram-Schmidt
    for _ in range(2):
        for q in basis:
            w = w - (q @ w) * q
    return w


def lanczos(
    matvec: Matvec,
    v0: np.ndarray,
    k: int = 1,
    tol: float = 1e-10,
    max_iter: int = 2000,
    krylov_dim: int = 80,
) -> EigenResult:
    """Lowest ``k`` eigenpairs by restarted Lanczos with full reorthogonalization.

    Eigenpairs are found one at a time; each new Krylov sequence is kept
    orthogonal to the pairs already converged.  A pair is accepted when
    ``|Hv - Ev| <= tol * max(1, |E|)``.
    """
    n = v0.size
    k = min(k, n)
    found_vals: list[float] = []
    found_vecs: list[np.ndarray] = []
    residuals: list[float] = []
    converged: list[bool] = []
    total = 0
    start = np.asarray(v0, dtype=float)
    rng = np.random.default_rng(12345)
    for idx in range(k):
        v = start.copy()
        if idx:
            # a fresh seeded component reaches degenerate partners that are
            # orthogonal to the Krylov space of v0
            v = v / np.linalg.norm(v) + rng.standard_normal(n) / np.sqrt(n)
        v = _orthogonalize(v, found_vecs)
        v /= np.linalg.norm(v)
        theta, res, ok = np.nan, np.inf, False
        while total < max_iter:
            basis = [v]
            alphas, betas = [], []
            w_prev = None
            m = min(krylov_dim, n - len(found_vecs))
            for i in range(m):
                w = matvec(basis[i])
                total += 1
                a = basis[i] @ w
                alphas.append(a)
                w = w - a * basis[i]
                if w_prev is not None:
                    w = w - betas[-1] * basis[i - 1]
                w = _orthogonalize(w, found_vecs + basis)
                b = np.linalg.norm(w)
                w_prev = w
                if i == m - 1 or b < 1e-14 * max(1.0, abs(a)) or total >= max_iter:
                    break
                betas.append(b)
                basis.append(w / b)
            t = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            evals, evecs = np.linalg.eigh(t)
            theta = float(evals[0])
            y = np.array(basis).T @ evecs[:, 0]
            y /= np.linalg.norm(y)
            r = matvec(y) - theta * y
            total += 1
            res = float(np.linalg.norm(r))
            v = y
            if res <= tol * max(1.0, abs(theta)):
                ok = True
                break
        found_vals.append(theta)
        found_vecs.append(v)
        residuals.append(res)
        converged.append(ok)
        if not ok:
            break
    order = np.argsort(found_vals, kind="stable")
    return EigenResult(
        values=np.array(found_vals)[order],
        vectors=np.array([fix_sign(found_vecs[i]) for i in order]).T,
        residuals=np.array(residuals)[order],
        converged=np.array(converged)[order],
        iterations=total,
    )


def davidson(
    matvec: Matvec,
    diagonal: np.ndarray,
    v0: np.ndarray,
    k: int = 1,
    tol: float = 1e-10,
    max_iter: int = 2000,
    max_space: int = 40,
    dense_limit: int = 1000,
) -> EigenResult:
    """Lowest ``k`` eigenpairs by Davidson's method with a diagonal preconditioner.

    Suited to superblock operators whose block Hamiltonians are diagonal, so
    ``diagonal`` is a good approximation of the operator on high-energy
    states.  ``v0`` may hold ``k`` starting columns or a single vector.
    """
    n = diagonal.size
    k = min(k, n)
    if n <= max(2 * k, 8, dense_limit):
        mat = np.column_stack([matvec(e) for e in np.eye(n)])
        vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
        vecs = vecs[:, :k]
        res = np.linalg.norm(mat @ vecs - vecs * vals[:k], axis=0)
        return EigenResult(vals[:k], np.column_stack([fix_sign(c) for c in vecs.T]), res, np.ones(k, bool), n)

    v0 = np.asarray(v0, dtype=float).reshape(n, -1)
    cols = [v0[:, i] for i in range(v0.shape[1])]
    for i in range(v0.shape[1], k):
        cols.append(np.cos(np.arange(n) * (0.37 + 0.11 * i)))
    V = np.zeros((n, 0))
    AV = np.zeros((n, 0))
    for c in cols:
        c = c - V @ (V.T @ c)
        c = c - V @ (V.T @ c)
        nrm = np.linalg.norm(c)
        if nrm > 1e-10:
            c = c / nrm
            V = np.column_stack([V, c])
            AV = np.column_stack([AV, matvec(c)])
    iters = V.shape[1]
    while True:
        S = V.T @ AV
        S = 0.5 * (S + S.T)
        vals, vecs = np.linalg.eigh(S)
        kk = min(k, vals.size)
        X = V @ vecs[:, :kk]
        AX = AV @ vecs[:, :kk]
        R = AX - X * vals[:kk]
        res = np.linalg.norm(R, axis=0)
        scale = np.maximum(1.0, np.abs(vals[:kk]))
        done = res <= tol * scale
        if (kk == k and np.all(done)) or iters >= max_iter:
            break
        if V.shape[1] + k > max_space:
            # thick restart: current Ritz vectors plus the previous ones
            keep = min(vals.size, 2 * k)
            V, AV = V @ vecs[:, :keep], AV @ vecs[:, :keep]
        new = []
        for i in np.flatnonzero(~done):
            denom = diagonal - vals[i]
            floor = 1e-8 * scale[i]
            denom = np.where(np.abs(denom) < floor, np.where(denom < 0, -floor, floor), denom)
            # Olsen correction keeps the update from collapsing onto x
            kx = X[:, i] / denom
            kr = R[:, i] / denom
            eps = (X[:, i] @ kr) / (X[:, i] @ kx)
            t = kr - eps * kx
            for _ in range(2):
                t = t - V @ (V.T @ t)
                for q in new:
                    t = t - (q @ t) * q
            nrm = np.linalg.norm(t)
            if nrm < 1e-14:
                t = R[:, i] - V @ (V.T @ R[:, i])
                nrm = np.linalg.norm(t)
                if nrm < 1e-14:
                    continue
            new.append(t / nrm)
        if not new:
            break
        for t in new:
            V = np.column_stack([V, t])
            AV = np.column_stack([AV, matvec(t)])
            iters += 1
    X = np.column_stack([fix_sign(c / np.linalg.norm(c)) for c in X.T])
    return EigenResult(vals[:kk].copy(), X, res, done, iters)
