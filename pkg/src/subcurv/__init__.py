"""Curvature-dimension toolkit for sub-Riemannian structures with transverse symmetries."""

from subcurv.structures import (
    StructureConstants,
    ValidationReport,
    catalog_model,
    validate_structure,
    yang_mills_check,
)
from subcurv.ncdiff import Jet, NCExpression, jet_eval, random_jet, reduce
from subcurv.forms import CDParams, FormValues, evaluate_forms

__version__ = "0.1.0"

__all__ = [
    "CDParams",
    "FormValues",
    "Jet",
    "NCExpression",
    "StructureConstants",
    "ValidationReport",
    "catalog_model",
    "evaluate_forms",
    "jet_eval",
    "random_jet",
    "reduce",
    "validate_structure",
    "yang_mills_check",
]
