"""Exact diagonalization of deformed S=1/2 chains in a fixed total-Sz sector.

Site ``p`` (0-based array position) is bit ``p`` of the configuration
integer; a set bit is spin up.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .linalg import ConvergenceError, fix_sign, lanczos
from .profiles import BondModel, ChainSpec, DeformationProfile, WeightVector, raw_weights, weight_vector

MAX_SITES = 24
DENSE_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class SectorBasis:
    n_sites: int
    sz_total: float
    states: np.ndarray  # ascending configuration integers

    @classmethod
    def build(cls, n_sites: int, sz_total: float) -> "SectorBasis":
        n_up = n_sites / 2 + sz_total
        if abs(sz_total) > n_sites / 2 or n_up != int(n_up):
            raise ValueError(f"no states with Sz={sz_total} on {n_sites} sites")
        if n_sites > MAX_SITES:
            raise ValueError(f"{n_sites} sites exceeds the exact-diagonalization bound {MAX_SITES}")
        allconf = np.arange(1 << n_sites, dtype=np.int64)
        states = allconf[np.bitwise_count(allconf) == int(n_up)]
        states.flags.writeable = False
        return cls(n_sites, float(sz_total), states)

    @property
    def dim(self) -> int:
        return self.states.size

    def index(self, configs: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.states, configs)

    def spin(self, p: int) -> np.ndarray:
        """``s^z`` of site ``p`` on every basis state."""
        return ((self.states >> p) & 1) - 0.5


@dataclass(frozen=True, eq=False)
class ManyBodyOperator:
    basis: SectorBasis
    matrix: sp.csr_matrix
    weights: WeightVector
    model: BondModel
    shift: float = 0.0  # constant already added to the matrix

    @property
    def dim(self) -> int:
        return self.basis.dim

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    converged: np.ndarray
    residual_norms: np.ndarray
    n_sites: int = 0
    sector: float = 0.0
    lam: float | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "lambda": self.lam,
                "n_sites": self.n_sites,
                "sector": self.sector,
                "eigenvalues": [float(e) for e in self.eigenvalues],
                "residuals": [float(r) for r in self.residual_norms],
            }
        )


def heisenberg_matrix(basis: SectorBasis, bond_weights: np.ndarray, model: BondModel) -> sp.csr_matrix:
    """Assemble ``sum_b w_b (J s_b.s_{b+1} + offset)`` on a sector basis.

    ``bond_weights[b]`` multiplies the bond between positions ``b`` and ``b+1``.
    """
    n = basis.n_sites
    if len(bond_weights) != n - 1:
        raise ValueError(f"{n} sites need {n - 1} bond weights, got {len(bond_weights)}")
    states = basis.states
    dim = basis.dim
    diag = np.zeros(dim)
    rows, cols, vals = [], [], []
    J = model.coupling
    for b, w in enumerate(bond_weights):
        up1 = (states >> b) & 1
        up2 = (states >> (b + 1)) & 1
        same = up1 == up2
        diag += w * (np.where(same, 0.25 * J, -0.25 * J) + model.energy_offset)
        flip = np.flatnonzero(~same)
        if flip.size and J != 0 and w != 0:
            target = basis.index(states[flip] ^ (3 << b))
            rows.append(flip)
            cols.append(target)
            vals.append(np.full(flip.size, 0.5 * J * w))
    rows.append(np.arange(dim))
    cols.append(np.arange(dim))
    vals.append(diag)
    m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
    return m.tocsr()


def build_hamiltonian(
    spec: ChainSpec, profile: DeformationProfile, model: BondModel, sz_total: float = 0.0
) -> ManyBodyOperator:
    weights = weight_vector(spec, profile)
    return build_from_weights(weights, model, sz_total)


def build_from_weights(weights: WeightVector | np.ndarray, model: BondModel, sz_total: float) -> ManyBodyOperator:
    """Hamiltonian of a chain with arbitrary bond weights.

    Plain arrays may have any length, which allows odd site counts; they are
    stored as a centered raw weight vector when the length is odd.
    """
    if isinstance(weights, WeightVector):
        values = weights.values
        wv = weights
    else:
        values = np.asarray(weights, dtype=float)
        wv = raw_weights(values) if values.size % 2 else None
    n_sites = values.size + 1
    if n_sites > MAX_SITES:
        raise ValueError(f"{n_sites} sites exceeds the exact-diagonalization bound {MAX_SITES}")
    basis = SectorBasis.build(n_sites, sz_total)
    return ManyBodyOperator(basis, heisenberg_matrix(basis, values, model), wv, model)


def lowest_eigenpairs(op: ManyBodyOperator, k: int = 1, tol: float = 1e-10, max_iter: int = 10000) -> SpectrumResult:
    """Lowest ``k`` eigenpairs; dense below ``DENSE_LIMIT``, Lanczos above."""
    dim = op.dim
    if not 1 <= k <= dim:
        raise ValueError(f"k must lie in 1..{dim}, got {k}")
    if dim <= DENSE_LIMIT:
        vals, vecs = np.linalg.eigh(op.dense())
        vals, vecs = vals[:k], vecs[:, :k]
        vecs = np.column_stack([fix_sign(v) for v in vecs.T])
        res = np.linalg.norm(op.matrix @ vecs - vecs * vals, axis=0)
        converged = np.ones(k, dtype=bool)
    else:
        # a generic start vector: the all-ones vector is orthogonal to spin-flip odd states
        v0 = np.random.default_rng(20240229).standard_normal(dim)
        r = lanczos(lambda x: op.matrix @ x, v0, k=k, tol=tol, max_iter=max_iter)
        if r.values.size < k or not np.all(r.converged):
            raise ConvergenceError(f"Lanczos did not converge within {max_iter} iterations (residuals {r.residuals})")
        vals, vecs, res, converged = r.values, r.vectors, r.residuals, r.converged
    lam = op.weights.profile.lam if op.weights is not None and op.weights.profile is not None else None
    return SpectrumResult(vals, vecs, converged, res, op.basis.n_sites, op.basis.sz_total, lam)


def full_spectrum(op: ManyBodyOperator) -> np.ndarray:
    if op.dim > DENSE_LIMIT:
        raise ValueError(f"full spectrum refused above dimension {DENSE_LIMIT}")
    return np.linalg.eigvalsh(op.dense())


def apply_offset_for_zero_ground(op: ManyBodyOperator, ground_energy: float | None = None) -> ManyBodyOperator:
    """Shift ``op`` by a constant so that its ground energy is zero."""
    if ground_energy is None:
        ground_energy = float(lowest_eigenpairs(op, 1).eigenvalues[0])
    matrix = (op.matrix - ground_energy * sp.identity(op.dim, format="csr")).tocsr()
    return replace(op, matrix=matrix, shift=op.shift - ground_energy)


def ladder_ratios(eigenvalues, lam: float) -> list[tuple[float, float]]:
    """Consecutive ratios of the positive levels and their deviation from ``e^lam``.

    ``eigenvalues`` is a spectrum shifted so that level 0 is the zero-energy
    ground state; levels beyond index 0 must be positive.
    """
    if isinstance(eigenvalues, SpectrumResult):
        eigenvalues = eigenvalues.eigenvalues
    e = np.sort(np.asarray(eigenvalues, dtype=float))
    positive = e[1:]
    if np.any(positive <= 0):
        raise ValueError("levels above the ground state must be strictly positive")
    ratios = positive[1:] / positive[:-1]
    target = math.exp(lam)
    return [(float(r), float(r - target)) for r in ratios]


def _check_norm(state: np.ndarray, atol: float = 1e-10):
    nrm = np.linalg.norm(state)
    if abs(nrm - 1.0) > atol:
        raise ValueError(f"state is not normalized (norm {nrm})")


def reduced_density_matrix(state: np.ndarray, basis: SectorBasis, cut: int) -> np.ndarray:
    """Descending eigenvalues of the reduced density matrix of positions ``0..cut``."""
    _check_norm(state)
    n = basis.n_sites
    if not 0 <= cut < n - 1:
        raise ValueError(f"cut must lie in 0..{n - 2}, got {cut}")
    n_left = cut + 1
    left = basis.states & ((1 << n_left) - 1)
    right = basis.states >> n_left
    # block structure by the number of up spins on the left
    n_up_left = np.bitwise_count(left)
    eig = []
    for q in np.unique(n_up_left):
        sel = n_up_left == q
        lu, li = np.unique(left[sel], return_inverse=True)
        ru, ri = np.unique(right[sel], return_inverse=True)
        psi = np.zeros((lu.size, ru.size))
        psi[li, ri] = state[sel]
        eig.append(np.linalg.svd(psi, compute_uv=False) ** 2)
    p = np.sort(np.concatenate(eig))[::-1]
    return p


def spin_correlation(state: np.ndarray, basis: SectorBasis, i: int, j: int) -> float:
    """``<s^z_i s^z_j>`` at array positions ``i`` and ``j``."""
    n = basis.n_sites
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"sites ({i}, {j}) outside 0..{n - 1}")
    if i == j:
        raise ValueError("need two distinct sites")
    return float(np.sum(np.abs(state) ** 2 * basis.spin(i) * basis.spin(j)))


def bond_correlations(state: np.ndarray, basis: SectorBasis) -> np.ndarray:
    return np.array([spin_correlation(state, basis, p, p + 1) for p in range(basis.n_sites - 1)])


def entropy(p: np.ndarray, cutoff: float = 1e-14) -> float:
    """Von Neumann entropy ``-sum p ln p``; eigenvalues below ``cutoff`` are dropped."""
    p = np.asarray(p, dtype=float)
    p = p[p > cutoff]
    return float(-np.sum(p * np.log(p)))
