"""Finite-system DMRG for S=1/2 Heisenberg chains with position-dependent bonds.

The superblock is ``L . . R``: a left block of ``l`` sites (positions
``0..l-1``), two free sites ``l`` and ``l+1``, and a right block covering the
rest.  Block Hamiltonians are kept diagonal in their basis and shifted so
that their lowest level is zero; the removed constants are tracked in
``Block.offset``.  This keeps strongly graded chains (cosh weights spanning
many decades) numerically usable, together with the spin-flip pairing of
block levels in ``_flip_symmetrize``.

Site basis: index 0 is spin up, index 1 spin down.  Quantum numbers are
stored as ``2 S^z`` integers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import ObservableSeries
from .exact import entropy
from .linalg import ConvergenceError, davidson
from .profiles import BondModel, ChainSpec, DeformationProfile, WeightVector, weight_vector

log = logging.getLogger(__name__)

SITE_QN = np.array([1, -1])
SITE_SZ = np.array([0.5, -0.5])
DM_CUTOFF = 1e-14


@dataclass
class DmrgParams:
    m_max: int = 64
    n_sweeps: int = 6
    energy_tol: float = 1e-9
    truncation_log: bool = False
    m_start: int = 16
    solver_tol: float = 1e-9
    warmup_m: int | None = None  # defaults to min(m_max, m_start)

    def __post_init__(self):
        if self.m_max < 2:
            raise ValueError("m_max must be >= 2")
        if self.n_sweeps < 1:
            raise ValueError("n_sweeps must be >= 1")
        if not self.energy_tol > 0:
            raise ValueError("energy_tol must be > 0")
        if self.m_start < 2:
            raise ValueError("m_start must be >= 2")

    def m_for_sweep(self, sweep: int) -> int:
        return min(self.m_max, self.m_start * 2**sweep)

    def to_dict(self) -> dict:
        return {
            "m_max": self.m_max,
            "n_sweeps": self.n_sweeps,
            "energy_tol": self.energy_tol,
            "truncation_log": self.truncation_log,
            "m_start": self.m_start,
            "solver_tol": self.solver_tol,
            "warmup_m": self.warmup_m,
        }


@dataclass
class Block:
    size: int
    side: str  # "left" or "right"
    energies: np.ndarray
    offset: float
    qn: np.ndarray
    sz: np.ndarray  # edge site s^z
    sp: np.ndarray  # edge site s^+
    rotation: np.ndarray | None  # enlarged basis -> block basis, columns orthonormal

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies)

    @classmethod
    def empty(cls, side: str) -> "Block":
        z = np.zeros((1, 1))
        return cls(0, side, np.zeros(1), 0.0, np.zeros(1, dtype=int), z, z.copy(), None)


def _enlarged(block: Block, w: float, J: float) -> tuple[np.ndarray, np.ndarray]:
    """Dense Hamiltonian and quantum numbers of block + adjacent new site.

    Left blocks enlarge as ``(a, s)``, right blocks as ``(s, b)``.
    """
    d = block.dim
    eye2 = np.eye(2)
    sz_site = np.diag(SITE_SZ)
    sp_site = np.array([[0.0, 1.0], [0.0, 0.0]])
    if block.side == "left":
        h = np.kron(np.diag(block.energies), eye2)
        if block.size and w:
            h += w * J * (
                np.kron(block.sz, sz_site) + 0.5 * (np.kron(block.sp, sp_site.T) + np.kron(block.sp.T, sp_site))
            )
        qn = (block.qn[:, None] + SITE_QN[None, :]).ravel()
    else:
        h = np.kron(eye2, np.diag(block.energies))
        if block.size and w:
            h += w * J * (
                np.kron(sz_site, block.sz) + 0.5 * (np.kron(sp_site, block.sp.T) + np.kron(sp_site.T, block.sp))
            )
        qn = (SITE_QN[:, None] + block.qn[None, :]).ravel()
    return 0.5 * (h + h.T), qn


@dataclass
class Truncation:
    block: Block
    spectrum: np.ndarray  # all density-matrix eigenvalues, descending
    truncation_error: float


def _truncate(
    rho: np.ndarray, h_enl: np.ndarray, qn: np.ndarray, m: int, old: Block, side: str, bond_const: float
) -> Truncation:
    """Keep the ``m`` dominant density-matrix states, then rotate to the energy basis inside each sector."""
    weights, vectors, sectors = [], [], []
    for q in np.unique(qn):
        idx = np.flatnonzero(qn == q)
        p, v = np.linalg.eigh(rho[np.ix_(idx, idx)])
        for k in range(p.size - 1, -1, -1):
            weights.append(max(p[k], 0.0))
            vectors.append((idx, v[:, k]))
            sectors.append(q)
    weights = np.array(weights)
    order = np.argsort(-weights, kind="stable")
    n_keep = min(m, max(1, int(np.count_nonzero(weights > DM_CUTOFF))))
    kept = order[:n_keep]
    spectrum = weights[order]
    total = spectrum.sum()
    if total > 0:
        spectrum = spectrum / total
    trunc_err = float(max(0.0, 1.0 - spectrum[:n_keep].sum()))

    dim_enl = qn.size
    cols, energies, new_qn = [], [], []
    kept_sectors = np.array(sectors)[kept]
    levels = {}
    for q in np.unique(kept_sectors):
        members = kept[kept_sectors == q]
        idx = vectors[members[0]][0]
        u = np.column_stack([vectors[k][1] for k in members])
        hq = u.T @ h_enl[np.ix_(idx, idx)] @ u
        e, c = np.linalg.eigh(0.5 * (hq + hq.T))
        full = np.zeros((dim_enl, len(members)))
        full[idx] = u @ c
        cols.append(full)
        levels[q] = e
        new_qn.append(np.full(len(members), q))
    _flip_symmetrize(levels)
    energies = [levels[q] for q in np.unique(kept_sectors)]
    U = np.hstack(cols)
    energies = np.concatenate(energies)
    new_qn = np.concatenate(new_qn)
    emin = float(energies.min())
    energies = energies - emin

    if side == "left":
        sz_diag = np.tile(SITE_SZ, old.dim)
        sp = U[0::2].T @ U[1::2]
    else:
        sz_diag = np.repeat(SITE_SZ, old.dim)
        sp = U[: old.dim].T @ U[old.dim :]
    sz = U.T @ (sz_diag[:, None] * U)
    block = Block(old.size + 1, side, energies, old.offset + bond_const + emin, new_qn, sz, sp, U)
    return Truncation(block, spectrum, trunc_err)


def _flip_symmetrize(levels: dict):
    """Give sectors ``q`` and ``-q`` identical spectra where they agree to round-off.

    Spin-flip symmetry makes them equal exactly, but dense diagonalization of
    a strongly graded block splits partners by ``eps * |H|``.  Stored block
    energies are relative, so such a splitting would survive as a spurious
    field once the block is coupled through much weaker bonds.
    """
    for q in [q for q in levels if q > 0 and -q in levels]:
        a, b = levels[q], levels[-q]
        if a.size != b.size:
            continue
        tol = 64 * np.finfo(float).eps * max(np.abs(a).max(), np.abs(b).max(), 1.0)
        same = np.abs(a - b) <= tol
        mean = 0.5 * (a + b)
        a[same] = mean[same]
        b[same] = mean[same]


@dataclass
class Superblock:
    left: Block
    right: Block
    hl: np.ndarray
    hr: np.ndarray
    w_center: float
    J: float
    index: np.ndarray  # flat positions of the Sz = 0 sector
    qrow: np.ndarray
    qcol: np.ndarray
    constant: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.hl.shape[0], self.hr.shape[0]

    def _center(self, psi: np.ndarray) -> np.ndarray:
        a, b = self.left.dim, self.right.dim
        p4 = psi.reshape(a, 2, 2, b)
        out = p4 * (0.25 * np.array([[1.0, -1.0], [-1.0, 1.0]]))[None, :, :, None]
        out[:, 0, 1, :] += 0.5 * p4[:, 1, 0, :]
        out[:, 1, 0, :] += 0.5 * p4[:, 0, 1, :]
        return (self.w_center * self.J) * out.reshape(psi.shape)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = self.hl @ psi + psi @ self.hr
        if self.w_center:
            out += self._center(psi)
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        psi = np.zeros(self.shape)
        psi.flat[self.index] = x
        return self.apply(psi).ravel()[self.index]

    def diagonal(self) -> np.ndarray:
        dl, dr = np.diag(self.hl), np.diag(self.hr)
        sl = np.tile(SITE_SZ, self.left.dim)
        sr = np.repeat(SITE_SZ, self.right.dim)
        d = dl[:, None] + dr[None, :] + self.w_center * self.J * sl[:, None] * sr[None, :]
        return d.ravel()[self.index]

    def embed(self, x: np.ndarray) -> np.ndarray:
        psi = np.zeros(self.shape)
        psi.flat[self.index] = x
        return psi


def _bond_offset(model: BondModel, *weights: float) -> float:
    return model.energy_offset * sum(weights)


@dataclass
class DmrgState:
    chain: ChainSpec
    profile: DeformationProfile
    model: BondModel
    params: DmrgParams
    weights: WeightVector
    left_blocks: list
    right_blocks: list
    psi: np.ndarray  # superblock wavefunction at the center position, shape (2a, 2b)
    energy: float = float("nan")
    energy_history: list = field(default_factory=list)
    sweeps_done: int = 0
    converged: bool = False
    dm_spectrum_per_cut: dict = field(default_factory=dict)
    truncation_error_per_cut: dict = field(default_factory=dict)
    center_gap: float | None = None
    entropy_log_base: str = "e"

    @property
    def n_sites(self) -> int:
        return self.chain.n_sites

    @property
    def center(self) -> int:
        """Left-block size whose free sites are labels 0 and 1."""
        return self.chain.half_length


def _bond(weights: np.ndarray, b: int) -> float:
    return float(weights[b]) if 0 <= b < weights.size else 0.0


def _make_superblock(left: Block, right: Block, w_l: float, w_c: float, w_r: float, model: BondModel) -> Superblock:
    J = model.coupling
    hl, qrow = _enlarged(left, w_l, J)
    hr, qcol = _enlarged(right, w_r, J)
    index = np.flatnonzero((qrow[:, None] + qcol[None, :]).ravel() == 0)
    const = left.offset + right.offset + _bond_offset(model, w_l if left.size else 0.0, w_c, w_r if right.size else 0.0)
    return Superblock(left, right, hl, hr.T.copy(), w_c, J, index, qrow, qcol, const)


def _start_vector(n: int) -> np.ndarray:
    return np.random.default_rng(7).standard_normal(n)


def _solve(sb: Superblock, guess: np.ndarray | None, tol: float, k: int = 1, where: str = ""):
    v0 = None
    if guess is not None and guess.shape == sb.shape:
        v0 = guess.ravel()[sb.index]
        if not np.linalg.norm(v0) > 1e-8:
            v0 = None
    if v0 is None:
        v0 = _start_vector(sb.index.size)
    res = davidson(sb.matvec, sb.diagonal(), v0, k=k, tol=tol)
    if not np.all(res.converged):
        raise ConvergenceError(f"superblock solver did not converge at {where} (residuals {res.residuals})")
    return res


def _grow_left(sb: Superblock, psi: np.ndarray, m: int, model: BondModel, w_l: float) -> Truncation:
    rho = psi @ psi.T
    return _truncate(rho, sb.hl, sb.qrow, m, sb.left, "left", _bond_offset(model, w_l if sb.left.size else 0.0))


def _grow_right(sb: Superblock, psi: np.ndarray, m: int, model: BondModel, w_r: float) -> Truncation:
    rho = psi.T @ psi
    hr = sb.hr.T
    return _truncate(rho, hr, sb.qcol, m, sb.right, "right", _bond_offset(model, w_r if sb.right.size else 0.0))


def warmup(chain: ChainSpec, profile: DeformationProfile, model: BondModel, params: DmrgParams) -> DmrgState:
    """Infinite-system growth from 4 sites to the full chain.

    Two sites are inserted at the center per step.  The bonds touching the
    free sites always carry the final chain's weights of bonds -1, 0, 1, so
    every bond absorbed into a block is weighted like bond -1 (or 1) of the
    final chain.
    """
    weights = weight_vector(chain, profile)
    n = chain.half_length
    m = params.warmup_m or min(params.m_max, params.m_start)
    left_blocks: list = [None] * (chain.n_sites - 1)
    right_blocks: list = [None] * (chain.n_sites - 1)
    left_blocks[0] = Block.empty("left")
    right_blocks[0] = Block.empty("right")
    w_l, w_c, w_r = weights[-1] if n else 0.0, weights[0], weights[1] if n else 0.0

    if n == 0:
        sb = _make_superblock(left_blocks[0], right_blocks[0], 0.0, w_c, 0.0, model)
        res = _solve(sb, None, params.solver_tol, where="2-site chain")
        psi = sb.embed(res.vectors[:, 0])
        state = DmrgState(chain, profile, model, params, weights, left_blocks, right_blocks, psi)
        state.energy = float(res.values[0] + sb.constant)
        return state

    # single-site blocks
    sb = _make_superblock(left_blocks[0], right_blocks[0], 0.0, 0.0, 0.0, model)
    left_blocks[1] = _truncate(np.eye(2), sb.hl, sb.qrow, 2, left_blocks[0], "left", 0.0).block
    right_blocks[1] = _truncate(np.eye(2), sb.hr.T, sb.qcol, 2, right_blocks[0], "right", 0.0).block
    psi = None
    for size in range(1, n + 1):
        sb = _make_superblock(left_blocks[size], right_blocks[size], w_l, w_c, w_r, model)
        res = _solve(sb, None, params.solver_tol, where=f"warm-up size {2 * size + 2}")
        psi = sb.embed(res.vectors[:, 0])
        energy = float(res.values[0] + sb.constant)
        if size < n:
            left_blocks[size + 1] = _grow_left(sb, psi, m, model, w_l).block
            right_blocks[size + 1] = _grow_right(sb, psi, m, model, w_r).block
        log.debug("warm-up %d sites: E = %.12g", 2 * size + 2, energy)
    state = DmrgState(chain, profile, model, params, weights, left_blocks, right_blocks, psi)
    state.energy = energy
    state.energy_history.append(energy)
    return state


def _superblock_at(state: DmrgState, l: int) -> Superblock:
    w = state.weights.values
    L = state.n_sites
    left = state.left_blocks[l]
    right = state.right_blocks[L - l - 2]
    return _make_superblock(left, right, _bond(w, l - 1), _bond(w, l), _bond(w, l + 1), state.model)


def _predict_right(psi: np.ndarray, U_new: np.ndarray, right_old: Block, next_sb_shape) -> np.ndarray:
    # psi rows (a s1), cols (s2 b); b = (s3 b') through right_old.rotation
    a2 = U_new.shape[1]
    p1 = U_new.T @ psi  # (a', s2 b)
    nb = right_old.dim
    p1 = p1.reshape(a2 * 2, nb)
    out = p1 @ right_old.rotation.T  # (a' s2, s3 b')
    return out if out.shape == next_sb_shape else None


def _predict_left(psi: np.ndarray, U_new: np.ndarray, left_old: Block, next_sb_shape) -> np.ndarray:
    p2 = psi @ U_new  # (a s1, b'')
    na = left_old.dim
    p2 = p2.reshape(na, 2 * U_new.shape[1])
    out = left_old.rotation @ p2  # (a' s0, s1 b'')
    return out if out.shape == next_sb_shape else None


def _step(state: DmrgState, l: int, direction: str, guess, m: int):
    """Solve at left-block size ``l``, then grow the block on the ``direction`` side by one site."""
    L = state.n_sites
    sb = _superblock_at(state, l)
    res = _solve(sb, guess, state.params.solver_tol, where=f"cut {l}")
    psi = sb.embed(res.vectors[:, 0])
    energy = float(res.values[0] + sb.constant)
    w = state.weights.values
    if direction == "right":
        tr = _grow_left(sb, psi, m, state.model, _bond(w, l - 1))
        state.left_blocks[l + 1] = tr.block
        nxt = (2 * tr.block.dim, 2 * state.right_blocks[L - l - 3].dim) if L - l - 3 >= 0 else None
        guess = _predict_right(psi, tr.block.rotation, state.right_blocks[L - l - 2], nxt) if nxt else None
    else:
        tr = _grow_right(sb, psi, m, state.model, _bond(w, l + 1))
        state.right_blocks[L - l - 1] = tr.block
        nxt = (2 * state.left_blocks[l - 1].dim, 2 * tr.block.dim) if l - 1 >= 0 else None
        guess = _predict_left(psi, tr.block.rotation, state.left_blocks[l], nxt) if nxt else None
    state.dm_spectrum_per_cut[l] = tr.spectrum
    state.truncation_error_per_cut[l] = tr.truncation_error
    if state.params.truncation_log:
        log.info("cut %d (%s): E = %.12g, m = %d, truncation error %.3e", l, direction, energy, tr.block.dim, tr.truncation_error)
    return energy, guess


def sweep_once(state: DmrgState, m: int) -> float:
    """One full sweep: center -> right end -> left end -> center.

    Returns the energy of the last step, whose blocks were all rebuilt during
    this sweep.  (The first step re-solves the previous sweep's final
    superblock and carries no new information.)
    """
    L = state.n_sites
    c = state.center
    guess = state.psi
    energy, guess = _step(state, c, "right", guess, m)
    for l in range(c + 1, L - 2):
        energy, guess = _step(state, l, "right", guess, m)
    for l in range(L - 2, 0, -1):
        energy, guess = _step(state, l, "left", guess, m)
    for l in range(0, c):
        energy, guess = _step(state, l, "right", guess, m)
    state.psi = guess
    return energy


def finalize(state: DmrgState, probe_gap: bool = True) -> DmrgState:
    """Solve at the center with the current blocks and store the center wavefunction."""
    sb = _superblock_at(state, state.center)
    k = 2 if probe_gap and sb.index.size > 2 else 1
    res = _solve(sb, state.psi, state.params.solver_tol, k=k, where="center")
    state.psi = sb.embed(res.vectors[:, 0])
    state.energy = float(res.values[0] + sb.constant)
    if k == 2:
        state.center_gap = float(res.values[1] - res.values[0])
        log.info("center superblock gap to first excited Sz=0 state: %.6g", state.center_gap)
    p = np.linalg.svd(state.psi, compute_uv=False) ** 2
    state.dm_spectrum_per_cut[state.center] = np.sort(p)[::-1] / p.sum()
    return state


def sweep_to_convergence(state: DmrgState, params: DmrgParams | None = None, on_sweep=None) -> DmrgState:
    """Finite-system sweeps until the center energy changes by less than ``energy_tol``.

    The tolerance is relative to ``max(1, |E|)``.  Convergence is only
    declared once the schedule has reached ``m_max``.  ``on_sweep(state)``
    is called after every completed sweep (the checkpoint hook).
    """
    params = params or state.params
    state.params = params
    if state.n_sites <= 2:
        state.converged = True
        return finalize(state, probe_gap=False)
    while state.sweeps_done < params.n_sweeps:
        m = params.m_for_sweep(state.sweeps_done)
        energy = sweep_once(state, m)
        prev = state.energy_history[-1] if state.energy_history else None
        state.energy_history.append(energy)
        state.energy = energy
        state.sweeps_done += 1
        log.info("sweep %d (m=%d): E = %.14g", state.sweeps_done, m, energy)
        if prev is not None and m == params.m_max and abs(energy - prev) < params.energy_tol * max(1.0, abs(energy)):
            state.converged = True
        if on_sweep is not None:
            on_sweep(state)
        if state.converged:
            break
    finalize(state)
    if not state.converged:
        log.warning("DMRG stopped after %d sweeps without meeting energy_tol", state.sweeps_done)
    return state


def run_dmrg(
    chain: ChainSpec, profile: DeformationProfile, model: BondModel, params: DmrgParams, on_sweep=None
) -> DmrgState:
    return sweep_to_convergence(warmup(chain, profile, model, params), params, on_sweep)


# measurements on the center wavefunction


class UnconvergedError(RuntimeError):
    pass


def _require(state: DmrgState, force: bool):
    if not (state.converged or force):
        raise UnconvergedError("state has not converged; pass force=True to measure anyway")


def _center_blocks(state: DmrgState) -> tuple[Block, Block]:
    c = state.center
    return state.left_blocks[c], state.right_blocks[state.n_sites - c - 2]


def measure_bond_correlations(state: DmrgState, force: bool = False) -> ObservableSeries:
    """``<s^z_j s^z_{j+1}>`` on every bond, indexed by bond label."""
    _require(state, force)
    left, right = _center_blocks(state)
    a, b = left.dim, right.dim
    psi = state.psi
    L, c = state.n_sites, state.center
    out = np.zeros(L - 1)
    p4 = psi.reshape(a, 2, 2, b)
    # free-site bond
    out[c] = np.einsum("asnb,s,n->", p4**2, SITE_SZ, SITE_SZ)

    # left side: reduced density matrix of (left block, site c) propagated outward
    rho = psi @ psi.T  # rows (a, s1)
    blocks = state.left_blocks
    for size in range(c, 0, -1):
        blk = blocks[size]
        r4 = rho.reshape(blk.dim, 2, blk.dim, 2)
        # bond between positions size-1 (block edge) and size
        out[size - 1] = np.einsum("asbt,ba,s->", r4 * (SITE_SZ[None, :, None, None] == SITE_SZ[None, None, None, :]), blk.sz, SITE_SZ)
        rho_block = np.einsum("asbs->ab", r4)
        if blk.rotation is None:
            break
        rho = blk.rotation @ rho_block @ blk.rotation.T

    # right side, mirror image
    rho = psi.T @ psi  # rows (s2, b)
    blocks = state.right_blocks
    for size in range(L - c - 2, 0, -1):
        blk = blocks[size]
        r4 = rho.reshape(2, blk.dim, 2, blk.dim)
        pos = L - size  # edge site of this block
        out[pos - 1] = np.einsum("sauc,ca,s->", r4 * (SITE_SZ[:, None, None, None] == SITE_SZ[None, None, :, None]), blk.sz, SITE_SZ)
        rho_block = np.einsum("sasb->ab", r4)
        if blk.rotation is None:
            break
        rho = blk.rotation @ rho_block @ blk.rotation.T

    bonds = state.chain.bonds().astype(float)
    meta = {"lambda": state.profile.lam, "kind": state.profile.kind.value, "N": state.chain.half_length, "m": state.params.m_max}
    return ObservableSeries(bonds, out, meta)


def _site_operator_in_block(blocks: list, pos_in_block: int, size: int, side: str) -> np.ndarray:
    """``s^z`` of one site, expressed in the basis of the block of ``size`` sites.

    For left blocks ``pos_in_block`` is the 0-based position from the left
    edge; for right blocks it counts from the right edge.
    """
    first = pos_in_block + 1  # block size at which the site becomes the edge
    op = blocks[first].sz
    for s in range(first + 1, size + 1):
        U = blocks[s].rotation
        d = blocks[s - 1].dim
        if side == "left":
            big = np.kron(op, np.eye(2))
        else:
            big = np.kron(np.eye(2), op)
        op = U.T @ big @ U
    return op


def measure_center_correlations(state: DmrgState, j_max: int | None = None, force: bool = False) -> ObservableSeries:
    """Sign-rectified ``(-1)^(2j+1) <s^z_{-j} s^z_{j+1}>`` against distance ``2j+1``."""
    _require(state, force)
    n = state.chain.half_length
    if j_max is None:
        j_max = n
    if not 0 <= j_max <= n:
        raise ValueError(f"j_max must lie in 0..{n}, got {j_max}")
    left, right = _center_blocks(state)
    a, b = left.dim, right.dim
    c = state.center
    L = state.n_sites
    psi = state.psi
    vals = np.zeros(j_max + 1)
    p4 = psi.reshape(a, 2, 2, b)
    vals[0] = np.einsum("asnb,s,n->", p4**2, SITE_SZ, SITE_SZ)
    for j in range(1, j_max + 1):
        lpos = c - j  # absolute position, inside the left block of size c
        rpos = c + 1 + j
        ol = _site_operator_in_block(state.left_blocks, lpos, c, "left")
        or_ = _site_operator_in_block(state.right_blocks, L - 1 - rpos, L - c - 2, "right")
        # <psi| ol (x) 1 (x) 1 (x) or |psi>
        t = np.einsum("ab,bsnc->asnc", ol, p4)
        t = np.einsum("asnc,dc->asnd", t, or_)
        vals[j] = float(np.sum(p4 * t))
    distance = 2 * np.arange(j_max + 1) + 1.0
    meta = {"lambda": state.profile.lam, "kind": state.profile.kind.value, "N": n, "m": state.params.m_max}
    return ObservableSeries(distance, -vals, meta)


def center_entropy(state: DmrgState) -> float:
    """Entanglement entropy (natural log) across the cut between labels 0 and 1."""
    spec = state.dm_spectrum_per_cut.get(state.center)
    if spec is None:
        raise ValueError("no density-matrix spectrum recorded at the center cut")
    return entropy(spec)
