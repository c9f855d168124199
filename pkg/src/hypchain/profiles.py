"""Bond-weight profiles of deformed chains and their coefficient algebra.

A chain of half length ``N`` has sites labeled ``-N .. N+1`` and bonds
``j = -N .. N``; bond ``j`` joins sites ``j`` and ``j+1``.  A deformed
Hamiltonian is ``sum_j w_j h_{j,j+1}`` and everything in this module works on
the weights ``w_j`` alone.
"""

from __future__ import annotations

import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Above this magnitude identity residuals are reported relative to the
# largest coefficient involved.
RELATIVE_SCALE_THRESHOLD = 1e6


class Kind(str, enum.Enum):
    UNIFORM = "uniform"
    EXP = "exp"
    COSH = "cosh"
    SINH = "sinh"
    JOINT = "joint"


@dataclass(frozen=True)
class DeformationProfile:
    kind: Kind
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        lam = float(self.lam)
        if not math.isfinite(lam) or lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)

    def weight(self, j: int) -> float:
        return bond_weight(self, j)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "lambda": self.lam}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "DeformationProfile":
        return cls(Kind(d["kind"]), float(d.get("lambda", 0.0)))

    @classmethod
    def from_json(cls, s: str) -> "DeformationProfile":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class ChainSpec:
    half_length: int

    def __post_init__(self):
        if int(self.half_length) != self.half_length or self.half_length < 0:
            raise ValueError(f"half_length must be a non-negative integer, got {self.half_length!r}")
        object.__setattr__(self, "half_length", int(self.half_length))

    @classmethod
    def from_sites(cls, n_sites: int) -> "ChainSpec":
        if n_sites < 2 or n_sites % 2:
            raise ValueError(f"a chain has an even number >= 2 of sites, got {n_sites}")
        return cls((n_sites - 2) // 2)

    @property
    def n_sites(self) -> int:
        return 2 * self.half_length + 2

    @property
    def n_bonds(self) -> int:
        return 2 * self.half_length + 1

    def bonds(self) -> np.ndarray:
        """Bond labels ``-N .. N``."""
        return np.arange(-self.half_length, self.half_length + 1)

    def sites(self) -> np.ndarray:
        return np.arange(-self.half_length, self.half_length + 2)

    def site_position(self, label: int) -> int:
        """0-based array position of a site label."""
        pos = label + self.half_length
        if not 0 <= pos < self.n_sites:
            raise IndexError(f"site {label} outside {-self.half_length}..{self.half_length + 1}")
        return pos

    def bond_position(self, j: int) -> int:
        pos = j + self.half_length
        if not 0 <= pos < self.n_bonds:
            raise IndexError(f"bond {j} outside {-self.half_length}..{self.half_length}")
        return pos


class BondKind(str, enum.Enum):
    HEISENBERG = "heisenberg"


@dataclass(frozen=True)
class BondModel:
    """Two-site S=1/2 exchange ``J s_j.s_{j+1} + energy_offset``."""

    coupling: float = 1.0
    energy_offset: float = 0.0
    kind: BondKind = BondKind.HEISENBERG

    def __post_init__(self):
        object.__setattr__(self, "kind", BondKind(self.kind))
        if not self.coupling >= 0:
            raise ValueError(f"exchange coupling must be >= 0, got {self.coupling!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "coupling": self.coupling, "energy_offset": self.energy_offset}


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Bond weights indexed by bond label.

    ``profile`` is the generating profile, or None for a raw array.
    """

    values: np.ndarray
    half_length: int
    profile: DeformationProfile | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size != 2 * self.half_length + 1:
            raise ValueError(f"expected {2 * self.half_length + 1} weights, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("weights must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __getitem__(self, j: int) -> float:
        return float(self.values[j + self.half_length])

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, WeightVector):
            return NotImplemented
        return (
            self.half_length == other.half_length
            and self.profile == other.profile
            and np.array_equal(self.values, other.values)
        )

    @property
    def bonds(self) -> np.ndarray:
        return np.arange(-self.half_length, self.half_length + 1)

    def to_tsv(self) -> str:
        buf = io.StringIO()
        buf.write("j\tweight\n")
        for j, w in zip(self.bonds, self.values):
            buf.write(f"{j}\t{float(w)!r}\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class PartitionCoefficients:
    """Coefficient groups of ``H_L + h_{0,1} + H_R`` (or ``C_L + C_R``).

    ``left`` covers bonds ``-N..-1`` and ``right`` bonds ``1..N``.  With
    ``star_offset = s > 0`` the right group holds the re-indexed block
    ``sum_{j>s} f((j-s) lam) h_{j,j+1}``, zero on bonds ``1..s``.
    """

    left: np.ndarray
    center: float
    right: np.ndarray
    star_offset: int = 0

    def full(self) -> np.ndarray:
        if self.star_offset:
            raise ValueError("only the plain partition reassembles the full weight vector")
        return np.concatenate([self.left, [self.center], self.right])


def bond_weight(profile: DeformationProfile, j: int) -> float:
    lam = profile.lam
    kind = profile.kind
    if kind is Kind.UNIFORM:
        return 1.0
    if kind is Kind.EXP:
        return math.exp(j * lam)
    if kind is Kind.COSH:
        return math.cosh(j * lam)
    if kind is Kind.SINH:
        return math.sinh(j * lam)
    if kind is Kind.JOINT:
        return math.exp(abs(j) * lam)
    raise ValueError(f"unknown profile kind {kind!r}")


def _profile_values(profile: DeformationProfile, j: np.ndarray, dtype=float) -> np.ndarray:
    j = np.asarray(j, dtype=dtype)
    x = j * dtype(profile.lam)
    kind = profile.kind
    if kind is Kind.UNIFORM:
        return np.ones(j.shape, dtype=dtype)
    if kind is Kind.EXP:
        return np.exp(x)
    if kind is Kind.COSH:
        return np.cosh(x)
    if kind is Kind.SINH:
        return np.sinh(x)
    return np.exp(np.abs(x))


def weight_vector(spec: ChainSpec, profile: DeformationProfile) -> WeightVector:
    values = _profile_values(profile, spec.bonds().astype(float))
    return WeightVector(values, spec.half_length, profile)


def raw_weights(values: Sequence[float]) -> WeightVector:
    """Anonymous weight vector; its length must be odd (``2N+1`` bonds)."""
    values = np.asarray(values, dtype=float)
    if values.size % 2 == 0:
        raise ValueError("a raw weight vector needs 2N+1 entries")
    return WeightVector(values, (values.size - 1) // 2, None)


def shift_weights(w: WeightVector) -> WeightVector:
    """Coefficients of ``S H S^dagger``: the profile re-evaluated at ``j-1``."""
    if w.profile is None:
        raise ValueError("cannot shift a weight vector without its generating profile")
    values = _profile_values(w.profile, w.bonds.astype(float) - 1.0)
    return WeightVector(values, w.half_length, w.profile)


def _scaled(residuals: np.ndarray, magnitude: float) -> float:
    worst = float(np.max(np.abs(residuals))) if residuals.size else 0.0
    if magnitude > RELATIVE_SCALE_THRESHOLD:
        return worst / magnitude
    return worst


# The identity checks run in extended precision.  Near the 1e6 switch to
# relative residuals a single float64 rounding of cosh(j l) is already
# ~1e-10 in absolute terms.
_EXT = np.longdouble


def _ext_values(kind: Kind, lam: float, j: np.ndarray) -> np.ndarray:
    return _profile_values(DeformationProfile(kind, lam), j, dtype=_EXT)


def verify_shift_identities(lam: float, half_length: int) -> float:
    """Largest residual of the three one-site shift identities.

    Per bond ``j`` the checked relations are::

        cosh(j l) - cosh((j-1) l) / cosh(l) = tanh(l) sinh(j l)
        sinh(j l) - sinh((j-1) l) / cosh(l) = tanh(l) cosh(j l)
        exp((j-1) l) = exp(-l) exp(j l)
    """
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    if half_length < 1:
        raise ValueError("half_length must be >= 1")
    j = ChainSpec(half_length).bonds()
    c, s, e = (_ext_values(k, lam, j) for k in (Kind.COSH, Kind.SINH, Kind.EXP))
    sc, ss, se = (_ext_values(k, lam, j - 1) for k in (Kind.COSH, Kind.SINH, Kind.EXP))
    l = _EXT(lam)
    ch, th = np.cosh(l), np.tanh(l)

    r1 = c - sc / ch - th * s
    r2 = s - ss / ch - th * c
    r3 = se - np.exp(-l) * e
    magnitude = max(math.cosh(half_length * lam), math.exp(half_length * lam))
    return max(_scaled(r.astype(float), magnitude) for r in (r1, r2, r3))


def partition(spec: ChainSpec, profile: DeformationProfile, star_offset: int = 0, dtype=float) -> PartitionCoefficients:
    if profile.kind not in (Kind.COSH, Kind.SINH):
        raise ValueError(f"partition is defined for the cosh/sinh profiles, got {profile.kind.value}")
    if star_offset < 0:
        raise ValueError("star_offset must be >= 0")
    n = spec.half_length
    left = _profile_values(profile, np.arange(-n, 0), dtype)
    center = bond_weight(profile, 0)
    j = np.arange(1, n + 1)
    right = np.where(j > star_offset, _profile_values(profile, j - star_offset, dtype), 0)
    return PartitionCoefficients(left, center, right, star_offset)


def verify_recursions(lam: float, half_length: int) -> float:
    """Largest residual of the star and double-star recursions for the right block.

    Arrays run over bonds ``1..N``; ``h12`` and ``h23`` are indicator arrays
    of bonds 1 and 2.
    """
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    if half_length < 3:
        raise ValueError("half_length must be >= 3")
    spec = ChainSpec(half_length)
    cosh_p = DeformationProfile(Kind.COSH, lam)
    sinh_p = DeformationProfile(Kind.SINH, lam)
    h_r, h_r1, h_r2 = (partition(spec, cosh_p, s, _EXT).right for s in (0, 1, 2))
    c_r, c_r1, c_r2 = (partition(spec, sinh_p, s, _EXT).right for s in (0, 1, 2))
    h12 = np.zeros(half_length, dtype=_EXT)
    h12[0] = 1
    h23 = np.zeros(half_length, dtype=_EXT)
    h23[1] = 1
    ch, sh = np.cosh(_EXT(lam)), np.sinh(_EXT(lam))

    residuals = [
        c_r - (ch * c_r1 + sh * (h12 + h_r1)),
        h_r - (ch * (h12 + h_r1) + sh * c_r1),
        h_r - (ch * h12 - h23 + 2 * ch * h_r1 - h_r2),
        c_r - (sh * h12 + 2 * ch * c_r1 - c_r2),
    ]
    magnitude = math.cosh(half_length * lam)
    return max(_scaled(r.astype(float), magnitude) for r in residuals)


def corner_limit_check(half_length: int, lams: Sequence[float]) -> list[float]:
    """``max_j |sinh(j l)/sinh(l) - j|`` over bonds ``1..N`` for each ``l``."""
    j = np.arange(1, half_length + 1, dtype=float)
    out = []
    for lam in lams:
        if not lam > 0:
            raise ValueError("lambda values must be > 0")
        out.append(float(np.max(np.abs(np.sinh(j * lam) / math.sinh(lam) - j))) if j.size else 0.0)
    return out


def exp_average_residual(lam: float, half_length: int) -> float:
    """Max deviation of cosh weights from the mean of the exp(+l) and exp(-l) weights."""
    j = ChainSpec(half_length).bonds().astype(float)
    return float(np.max(np.abs(np.cosh(j * lam) - 0.5 * (np.exp(j * lam) + np.exp(-j * lam)))))
