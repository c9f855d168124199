"""Hyperbolically and exponentially deformed quantum chains.

Coefficient identities, exact diagonalization, finite-system DMRG,
one-body tight-binding spectra and the analysis that ties them together.
"""

from .profiles import BondModel, ChainSpec, DeformationProfile, WeightVector, weight_vector
from .dmrg import DmrgParams, run_dmrg

__all__ = ["BondModel", "ChainSpec", "DeformationProfile", "DmrgParams", "WeightVector", "run_dmrg", "weight_vector"]
__version__ = "0.1.0"
