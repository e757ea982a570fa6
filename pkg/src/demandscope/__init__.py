"""demandscope: explainable tabular classification for travel-demand surveys."""

from .data import Dataset, EncodedMatrix, FeatureSpec, FoldPlan, Schema, TravelClass

__all__ = [
    "Dataset",
    "EncodedMatrix",
    "FeatureSpec",
    "FoldPlan",
    "Schema",
    "TravelClass",
]

__version__ = "0.1.0"
