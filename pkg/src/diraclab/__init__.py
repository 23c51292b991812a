"""diraclab: a pseudospectral desk laboratory for frequency-localized
dispersive estimates and small-data evolution of a cubic Dirac system."""

__version__ = "0.1.0"

from .spectral import (
    Grid,
    ScalarField,
    SpinorField,
    SpaceTimeSeries,
    bracket,
    apply_multiplier,
    free_propagator,
    free_series,
    kg_solution,
    mixed_norm,
)

__all__ = [
    "Grid",
    "ScalarField",
    "SpinorField",
    "SpaceTimeSeries",
    "bracket",
    "apply_multiplier",
    "free_propagator",
    "free_series",
    "kg_solution",
    "mixed_norm",
]
