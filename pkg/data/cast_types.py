"""
Data Type Casting Module
Casting parsed curve documents to typed curves and back.
"""

import logging
from typing import Sequence, Union

from data.curve_files import CurveDocument
from utils.curves import SampledCurve, resample_arclength
from utils.errors import ValidationError
from utils.rotations import RotationCurve
from utils.sphere import SphereCurve

logger = logging.getLogger(__name__)

Curve = Union[SampledCurve, RotationCurve, SphereCurve]


def _require_space(document: CurveDocument, space: str):
    if document.space != space:
        logger.error(f"Cannot cast a {document.space} document as {space}")
        raise ValidationError(f"expected an {space} document, got {document.space}")


def cast_sampled_curve(document: CurveDocument) -> SampledCurve:
    """
    Cast an rd document to a sampled curve.

    Raises:
        ValidationError: If the document is not in space rd
    """
    _require_space(document, "rd")
    return SampledCurve(document.points, document.closed)


def cast_sphere_curve(document: CurveDocument) -> SphereCurve:
    _require_space(document, "s2")
    return SphereCurve(document.points)


def cast_rotation_curve(document: CurveDocument) -> RotationCurve:
    """Cast an so_n document, unflattening its row-major samples."""
    _require_space(document, "so_n")
    n = document.dimension
    return RotationCurve(document.points.reshape(-1, n, n))


def cast_curve(document: CurveDocument) -> Curve:
    """Typed curve for any supported space."""
    casts = {
        "rd": cast_sampled_curve,
        "so_n": cast_rotation_curve,
        "s2": cast_sphere_curve,
    }
    return casts[document.space](document)


def curve_document(curve: Curve) -> CurveDocument:
    """Curve document for a typed curve."""
    if isinstance(curve, SampledCurve):
        return CurveDocument("rd", curve.dim, curve.closed, curve.points)
    if isinstance(curve, RotationCurve):
        return CurveDocument("so_n", curve.dim, False, curve.samples.reshape(len(curve.samples), -1))
    return CurveDocument("s2", 3, False, curve.samples)


def resample_curves(curves: Sequence[SampledCurve], m: int) -> list:
    """Resample every curve by arclength to m intervals."""
    if m < 1:
        raise ValidationError("the resampling count must be positive")
    return [resample_arclength(curve, m) for curve in curves]
