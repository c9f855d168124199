"""One-body treatment of the deformed spinless tight-binding chain.

Bond ``j`` carries ``w_j [ -t (c+_{j+1} c_j + h.c.) + (-1)^j (D/2) (n_j - n_{j+1}) ]``.
The staggered part is folded onto the diagonal: site ``j`` receives
``+(-1)^j w_j D/2`` from its right bond and ``-(-1)^(j-1) w_(j-1) D/2`` from its
left bond, i.e. ``(-1)^j (D/2) (w_j + w_(j-1))``.  End sites only get the
term of their single bond.

Eigenvalues come from bisection with a tiny absolute tolerance, which keeps
full relative accuracy for the exponentially graded matrices produced by
the exp profile.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .profiles import ChainSpec, DeformationProfile, Kind, weight_vector

_TINY = 2 * np.finfo(float).tiny


@dataclass(frozen=True)
class FermionModel:
    hopping: float = 1.0
    staggered_gap: float = 0.0

    def __post_init__(self):
        if not self.hopping > 0:
            raise ValueError("hopping must be > 0")
        if not self.staggered_gap >= 0:
            raise ValueError("staggered gap must be >= 0")


@dataclass(frozen=True, eq=False)
class OneBodyMatrix:
    diagonal: np.ndarray
    offdiagonal: np.ndarray
    half_length: int

    @property
    def dim(self) -> int:
        return self.diagonal.size

    def dense(self) -> np.ndarray:
        return np.diag(self.diagonal) + np.diag(self.offdiagonal, 1) + np.diag(self.offdiagonal, -1)


@dataclass(frozen=True, eq=False)
class OneBodySpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, orthonormal


def assemble(spec: ChainSpec, profile: DeformationProfile, model: FermionModel) -> OneBodyMatrix:
    if profile.kind not in (Kind.UNIFORM, Kind.EXP, Kind.COSH):
        raise ValueError(f"unsupported profile kind {profile.kind.value} for the tight-binding chain")
    w = weight_vector(spec, profile).values
    j = spec.bonds()
    stagger = np.where(j % 2 == 0, 1.0, -1.0) * (0.5 * model.staggered_gap) * w
    diag = np.zeros(spec.n_sites)
    diag[:-1] += stagger
    diag[1:] -= stagger
    return OneBodyMatrix(diag, -model.hopping * w, spec.half_length)


def diagonalize(matrix: OneBodyMatrix) -> OneBodySpectrum:
    if matrix.dim == 1:
        return OneBodySpectrum(matrix.diagonal.copy(), np.ones((1, 1)))
    vals, vecs = eigh_tridiagonal(matrix.diagonal, matrix.offdiagonal, lapack_driver="stebz", tol=_TINY)
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            vecs[:, k] = -col
    return OneBodySpectrum(vals, vecs)


def open_chain_levels(n_sites: int, hopping: float = 1.0) -> np.ndarray:
    """Uniform open chain: ``-2 t cos(k pi / (L+1))``, ascending."""
    k = np.arange(1, n_sites + 1)
    return np.sort(-2 * hopping * np.cos(k * np.pi / (n_sites + 1)))


def _check_normalized(v: np.ndarray):
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise ValueError("vector must be normalized")


def inverse_participation_ratio(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    _check_normalized(v)
    return float(np.sum(v**4))


def shift_overlap(v: np.ndarray, direction: int = 1, distance: int = 1) -> float:
    """``<v|S^d|v>`` with ``S`` moving amplitudes one site in ``direction``.

    Amplitude pushed past the chain end is dropped.  On a finite exp chain
    the one-particle modes follow a single dimer covering, so the one-site
    overlap stays large and ``distance=2`` is the one that vanishes.
    """
    v = np.asarray(v, dtype=float)
    _check_normalized(v)
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if distance < 1:
        raise ValueError("distance must be >= 1")
    if distance >= v.size:
        return 0.0
    # real vectors: both directions give the same number
    return float(v[distance:] @ v[:-distance])


def half_filled_gap(spectrum: OneBodySpectrum | np.ndarray) -> float:
    e = spectrum.eigenvalues if isinstance(spectrum, OneBodySpectrum) else np.sort(np.asarray(spectrum, dtype=float))
    if e.size % 2:
        raise ValueError("half filling needs an even number of levels")
    h = e.size // 2
    return float(e[h] - e[h - 1])


def positive_log_spacings(spectrum: OneBodySpectrum | np.ndarray) -> np.ndarray:
    e = spectrum.eigenvalues if isinstance(spectrum, OneBodySpectrum) else np.asarray(spectrum, dtype=float)
    pos = np.sort(e[e > 0])
    return np.diff(np.log(pos))


def central_window(values: np.ndarray, fraction: float = 0.2) -> np.ndarray:
    """The middle ``fraction`` of an array (at least one element)."""
    n = values.size
    width = max(1, int(round(fraction * n)))
    start = (n - width) // 2
    return values[start : start + width]


def ladder_spread(spacings: np.ndarray, target: float) -> float:
    """Root-mean-square relative deviation of log spacings from ``target``."""
    return float(np.sqrt(np.mean((spacings / target - 1.0) ** 2)))


def spectrum_tsv(spectrum: OneBodySpectrum) -> str:
    buf = io.StringIO()
    buf.write("level_index\tenergy\tipr\tshift_overlap\n")
    for k, e in enumerate(spectrum.eigenvalues):
        v = spectrum.eigenvectors[:, k]
        buf.write(f"{k}\t{float(e)!r}\t{float(np.sum(v**4))!r}\t{float(v[1:] @ v[:-1])!r}\n")
    return buf.getvalue()
