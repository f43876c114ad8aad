"""
Curve File Functions
Reading and writing curve, geodesic, match and distance-matrix documents.
JSON documents carry a space tag; CSV files hold one point of a curve in
R^d per line.
"""

import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import polars as pl

from utils.curves import Reparametrization
from utils.errors import ParseError, ValidationError
from utils.rotations import nearest_rotation, orthogonality_defect
from utils.stats_aggregation import DistanceMatrix

logger = logging.getLogger(__name__)

SPACES = ("rd", "so_n", "s2")

# Samples within LOAD_TOL of the manifold are projected onto it, others rejected
LOAD_TOL = 1e-6
SILENT_TOL = 1e-10


@dataclass(frozen=True)
class CurveDocument:
    """
    Parsed curve document.

    Args:
        space: "rd", "so_n" or "s2"
        dimension: d for rd, n for so_n, 3 for s2
        closed: Closed flag (rd only)
        points: One row per sample; so_n rows are row-major flattened matrices
    """

    space: str
    dimension: int
    closed: bool
    points: np.ndarray

    def __post_init__(self):
        if self.space not in SPACES:
            raise ValidationError(f"unknown space {self.space!r}, expected one of {SPACES}")
        if self.dimension < 1:
            raise ValidationError("dimension must be positive")
        if self.space == "s2" and self.dimension != 3:
            raise ValidationError("s2 documents must have dimension 3")
        points = np.array(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.row_width:
            raise ValidationError(
                f"rows must have {self.row_width} entries for space {self.space} "
                f"of dimension {self.dimension}"
            )
        if points.shape[0] < 2:
            raise ValidationError("a curve needs at least 2 points")
        points = _conform_samples(self.space, self.dimension, points)
        points.flags.writeable = False
        object.__setattr__(self, "points", points)

    @property
    def row_width(self) -> int:
        if self.space == "so_n":
            return self.dimension * self.dimension
        return self.dimension

    def to_dict(self) -> Dict[str, Any]:
        return {
            "space": self.space,
            "dimension": self.dimension,
            "closed": self.closed,
            "points": _rows(self.points),
        }


def _conform_samples(space: str, dimension: int, points: np.ndarray) -> np.ndarray:
    """
    Enforce the per-space sample invariants, projecting samples that miss
    the manifold by less than LOAD_TOL.

    Raises:
        ValidationError: If a sample is further from the manifold
    """
    if space == "s2":
        norms = np.linalg.norm(points, axis=1)
        deviation = np.abs(norms - 1.0)
        worst = int(np.argmax(deviation))
        if deviation[worst] >= LOAD_TOL:
            logger.error(f"Sample {worst} has norm {norms[worst]:.12g}")
            raise ValidationError(f"sample {worst} has norm {norms[worst]:.12g}, expected 1")
        if deviation[worst] < SILENT_TOL:
            return points
        logger.warning(f"Projecting samples onto the sphere (max deviation {deviation[worst]:.3g})")
        return points / norms[:, None]

    if space == "so_n":
        samples = points.reshape(-1, dimension, dimension)
        for index, sample in enumerate(samples):
            defect = orthogonality_defect(sample)
            if defect >= LOAD_TOL or np.linalg.det(sample) <= 0.0:
                logger.error(f"Sample {index} is not a rotation (defect {defect:.3g})")
                raise ValidationError(f"sample {index} is not a rotation matrix")
            if defect >= SILENT_TOL:
                logger.warning(f"Projecting sample {index} onto SO({dimension}) (defect {defect:.3g})")
                samples[index] = nearest_rotation(sample)
        return samples.reshape(points.shape)

    return points


def _rows(values: np.ndarray) -> List[List[float]]:
    """Nested lists of Python floats, with negative zero normalized."""
    return [[float(x) + 0.0 for x in row] for row in np.atleast_2d(values)]


def _decode(raw: Union[bytes, str]) -> str:
    if isinstance(raw, str):
        return raw
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        logger.error(f"Input is not UTF-8: {e}")
        raise ParseError(f"input is not valid UTF-8: {e.reason}")


def _load_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON document: {e}")
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, field=f"column {e.colno}")


def _require(document: Dict[str, Any], key: str, kind, where: str = "") -> Any:
    if key not in document:
        raise ParseError(f"missing key {key!r}", field=f"{where}{key}")
    value = document[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(f"{key!r} must be an integer", field=f"{where}{key}")
    if kind is not int and not isinstance(value, kind):
        raise ParseError(f"{key!r} has the wrong type", field=f"{where}{key}")
    return value


def _document_from_dict(document: Any, where: str = "") -> CurveDocument:
    if not isinstance(document, dict):
        raise ParseError("a curve document must be a JSON object", field=where or None)
    space = _require(document, "space", str, where)
    dimension = _require(document, "dimension", int, where)
    closed = document.get("closed", False)
    if not isinstance(closed, bool):
        raise ParseError("'closed' must be a boolean", field=f"{where}closed")
    rows = _require(document, "points", list, where)
    if dimension < 1:
        raise ValidationError("dimension must be positive")

    width = dimension * dimension if space == "so_n" else dimension
    for index, row in enumerate(rows):
        locus = f"{where}points[{index}]"
        if not isinstance(row, list):
            raise ParseError("each point must be an array", field=locus)
        if len(row) != width:
            raise ParseError(f"expected {width} entries, got {len(row)}", field=locus)
        for entry in row:
            if isinstance(entry, bool) or not isinstance(entry, (int, float)):
                raise ParseError(f"non-numeric entry {entry!r}", field=locus)
    return CurveDocument(space, dimension, closed, np.array(rows, dtype=float).reshape(-1, width))


def _parse_csv(text: str) -> CurveDocument:
    """
    One point per line, comma separated; blank lines are skipped.

    Raises:
        ParseError: With the 1-based line number of ragged or non-numeric rows
    """
    numbered = [(number, line) for number, line in enumerate(text.splitlines(), 1) if line.strip()]
    if not numbered:
        raise ParseError("empty CSV input")
    width = numbered[0][1].count(",") + 1
    for number, line in numbered:
        if line.count(",") + 1 != width:
            raise ParseError(f"expected {width} fields", line=number)

    frame = pl.read_csv(
        io.BytesIO("\n".join(line for _, line in numbered).encode("utf-8")),
        has_header=False,
        infer_schema=False,
    )
    values = frame.select(
        pl.col(column).str.strip_chars().cast(pl.Float64, strict=False) for column in frame.columns
    )
    invalid = values.select(pl.all().is_null()).to_numpy()
    if invalid.any():
        row, column = np.argwhere(invalid)[0]
        raise ParseError("non-numeric value", line=numbered[row][0], field=str(column + 1))
    return CurveDocument("rd", width, False, values.to_numpy())


def parse_curve_file(raw: Union[bytes, str]) -> CurveDocument:
    """
    Parse a curve document in JSON or CSV form.

    Args:
        raw: UTF-8 bytes or text; a leading "{" selects JSON

    Returns:
        CurveDocument (CSV input gives an open curve in space rd)

    Raises:
        ParseError: If the input is malformed, with a line/field locus
        ValidationError: If a document invariant is violated
    """
    text = _decode(raw)
    if text.lstrip().startswith("{"):
        return _document_from_dict(_load_json(text))
    return _parse_csv(text)


def read_curve_file(path: Union[str, Path]) -> CurveDocument:
    """Read and parse a curve file from disk."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        logger.error(f"Cannot read {path}: {e}")
        raise ParseError(f"cannot read {path}: {e.strerror}")
    logger.debug(f"Parsing {path}")
    return parse_curve_file(raw)


def _dump(payload: Dict[str, Any]) -> bytes:
    return (json.dumps(payload) + "\n").encode("utf-8")


def write_curve_document(document: CurveDocument) -> bytes:
    """Serialize a curve document; floats use their shortest round-trip form."""
    return _dump(document.to_dict())


def write_geodesic(times: Sequence[float], documents: Sequence[CurveDocument]) -> bytes:
    """
    Serialize a geodesic as {"times": [...], "curves": [...]}.

    Args:
        times: Slice times t_j
        documents: One curve document per time

    Returns:
        UTF-8 JSON bytes
    """
    if len(times) != len(documents):
        raise ValidationError("one curve document per time is required")
    return _dump(
        {
            "times": [float(t) + 0.0 for t in times],
            "curves": [document.to_dict() for document in documents],
        }
    )


def parse_geodesic_file(raw: Union[bytes, str]) -> Tuple[Tuple[float, ...], List[CurveDocument]]:
    """
    Parse a geodesic document written by write_geodesic.

    Returns:
        Tuple of (times, curve documents)

    Raises:
        ParseError: If the document is malformed
    """
    payload = _load_json(_decode(raw))
    if not isinstance(payload, dict):
        raise ParseError("a geodesic document must be a JSON object")
    times = _require(payload, "times", list)
    curves = _require(payload, "curves", list)
    if len(times) != len(curves):
        raise ParseError("times and curves differ in length", field="times")
    for index, t in enumerate(times):
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise ParseError(f"non-numeric time {t!r}", field=f"times[{index}]")
    documents = [
        _document_from_dict(curve, where=f"curves[{index}].") for index, curve in enumerate(curves)
    ]
    return tuple(float(t) for t in times), documents


def write_match_document(
    distance: float,
    gamma: Reparametrization,
    rotation: Optional[np.ndarray] = None,
    seed_shift: int = 0,
    fiber_angle: Optional[float] = None,
) -> bytes:
    """
    Serialize an alignment result.

    Args:
        distance: Optimal distance
        gamma: Optimal warp of the second curve
        rotation: Optimal rotation of the second curve, if any
        seed_shift: Starting-point shift of the second curve
        fiber_angle: Optimal fiber angle for sphere curves, if any

    Returns:
        UTF-8 JSON bytes
    """
    payload: Dict[str, Any] = {
        "distance": float(distance),
        "gamma": _rows(gamma.nodes()),
        "rotation": None if rotation is None else _rows(rotation),
        "seed_shift": int(seed_shift),
    }
    if fiber_angle is not None:
        payload["fiber_angle"] = float(fiber_angle)
    return _dump(payload)


def write_distance_matrix(matrix: DistanceMatrix) -> bytes:
    """CSV with a "curve" label column and a header row of curve labels."""
    return matrix.to_frame().write_csv().encode("utf-8")
