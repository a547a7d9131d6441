"""Numerical laboratory for the GDoF of the symmetric K-user interference
channel under finite precision CSIT.

Submodules
----------
gdof      closed-form GDoF curves and regime classification
channel   channel-gain laws, bounds and realizations
linksim   finite-SNR evaluation of the layered achievable schemes
detmodel  quantized deterministic channel model
ais       aligned-image-set and entropy oracles on the deterministic model
cli       command line front end
"""

from .gdof import (
    GdofPoint,
    Regime,
    SystemParams,
    classify_regime,
    curve_sweep,
    gdof_finite_precision,
    gdof_gap,
    gdof_perfect_csit,
)

__all__ = [
    "GdofPoint",
    "Regime",
    "SystemParams",
    "classify_regime",
    "curve_sweep",
    "gdof_finite_precision",
    "gdof_gap",
    "gdof_perfect_csit",
]

__version__ = "0.1.0"
