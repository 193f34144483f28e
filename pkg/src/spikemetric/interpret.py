"""Feature-importance reports from an optimized metric matrix.

Diagonal entries measure each feature's singular contribution to the learned
distance; large off-diagonals flag informative feature pairs.  For 3D-SIFT
descriptors the flat feature index decodes to (subregion, direction).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, IoFailure, ValidationError
from .graph import MetricMatrix

THRESHOLD_DOMINANT = 0.3   # red-dot preset
THRESHOLD_SELECT = 0.5     # feature-selection preset


@dataclass(frozen=True)
class ImportanceReport:
    diag: np.ndarray
    dominant: tuple           # indices with diag >= threshold_fraction * max
    top_pairs: tuple          # ((i, j, |M_ij|), ...) sorted non-increasing
    threshold_fraction: float
    degenerate: bool = False  # max diag is zero; no dominant features exist


@dataclass(frozen=True)
class SiftIndexMap:
    """Layout of a concatenated 3D-SIFT descriptor: subregion-major ordering.

    64 subregions on a 4x4x4 lattice, 12 icosahedron-vertex directions each
    (6 after 2:1 subsampling).
    """

    n_subregions: int = 64
    n_directions: int = 12

    @property
    def dim(self):
        return self.n_subregions * self.n_directions


def diag_importance(metric: MetricMatrix, threshold_fraction: float,
                    n_pairs: int = 10) -> ImportanceReport:
    if not (0 < threshold_fraction < 1):
        raise ValueError("threshold_fraction must be in (0, 1)")
    diag = np.diag(metric.entries).copy()
    peak = float(np.max(diag)) if len(diag) else 0.0
    if peak <= 0:
        dominant = ()
        degenerate = True
    else:
        dominant = tuple(int(i) for i in np.flatnonzero(diag >= threshold_fraction * peak))
        degenerate = False
    return ImportanceReport(
        diag=diag,
        dominant=dominant,
        top_pairs=top_offdiag_pairs(metric, n_pairs),
        threshold_fraction=threshold_fraction,
        degenerate=degenerate,
    )


def top_offdiag_pairs(metric: MetricMatrix, n: int) -> tuple:
    """The n largest off-diagonal magnitudes as (i, j, |M_ij|), i < j."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = metric.entries
    k = metric.dim
    pairs = [(i, j, float(abs(m[i, j]))) for i in range(k) for j in range(i + 1, k)]
    pairs.sort(key=lambda p: (-p[2], p[0], p[1]))
    return tuple(pairs[:n])


def decode_sift_index(e: int, index_map: SiftIndexMap):
    """Feature index -> (subregion, (x, y, z), direction), x-fastest lattice order."""
    if not (0 <= e < index_map.dim):
        raise IndexOutOfRange(f"feature index {e} outside [0, {index_map.dim})")
    subregion, direction = divmod(e, index_map.n_directions)
    x = subregion % 4
    y = (subregion // 4) % 4
    z = subregion // 16
    return subregion, (x, y, z), direction


def encode_sift_index(subregion: int, direction: int, index_map: SiftIndexMap) -> int:
    if not (0 <= subregion < index_map.n_subregions):
        raise IndexOutOfRange(f"subregion {subregion} out of range")
    if not (0 <= direction < index_map.n_directions):
        raise IndexOutOfRange(f"direction {direction} out of range")
    return subregion * index_map.n_directions + direction


def report_to_dict(report: ImportanceReport, index_map: SiftIndexMap | None = None) -> dict:
    k = len(report.diag)
    if index_map is not None and index_map.dim != k:
        raise ValidationError(
            f"descriptor map covers {index_map.dim} features, metric has {k}"
        )
    dominant = []
    for e in report.dominant:
        entry = {"index": int(e)}
        if index_map is not None:
            _sub, xyz, direction = decode_sift_index(e, index_map)
            entry["subregion"] = list(xyz)
            entry["direction"] = int(direction)
        dominant.append(entry)
    return {
        "K": k,
        "threshold": report.threshold_fraction,
        "diag": [float(v) for v in report.diag],
        "dominant": dominant,
        "top_pairs": [[int(i), int(j), float(v)] for i, j, v in report.top_pairs],
    }


def emit_report(report: ImportanceReport, path, index_map: SiftIndexMap | None = None):
    doc = report_to_dict(report, index_map)
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return doc
