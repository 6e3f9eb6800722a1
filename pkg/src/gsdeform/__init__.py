"""Exact symbolic checks for Gerstenhaber-Schack deformations of span diagrams."""

from gsdeform.ratlaurent import (
    AlgebraSpec,
    EpsFamily,
    LaurentPoly,
    MorphismSpec,
    parse_poly,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraSpec",
    "EpsFamily",
    "LaurentPoly",
    "MorphismSpec",
    "parse_poly",
]
