"""Extreme eigenpair computation and Gershgorin disc arithmetic.

The minimum eigenpair routine runs shifted power iteration (shift = the
Gershgorin upper bound, so the shifted matrix is PSD with the wanted pair
dominant) followed by a few shifted inverse-iteration polish steps.  It is
dependency-free beyond numpy and adequate at the problem sizes handled here;
the interface permits swapping in a LOBPCG-style solver later.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, ZeroScale

log = logging.getLogger(__name__)

EIGVEC_CLAMP = 1e-4


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray


def _fix_sign(v):
    """Deterministic orientation: the largest-magnitude entry is positive."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def min_eigpair(m, max_iters: int = 20000, tol: float = 1e-12) -> EigenPair:
    """Smallest eigenvalue and unit eigenvector of a symmetric matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if np.max(np.abs(m - m.T)) > 1e-10 * max(1.0, np.max(np.abs(m))):
        raise ValueError("matrix must be symmetric")
    k = m.shape[0]
    if k == 1:
        return EigenPair(float(m[0, 0]), np.ones(1))

    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return EigenPair(0.0, _fix_sign(np.eye(k)[0]))

    # Gershgorin upper bound; shifted matrix sigma*I - M is PSD and its top
    # eigenpair is (sigma - lambda_min, v_min)
    sigma = float(np.max(np.diag(m) + np.sum(np.abs(m), axis=1) - np.abs(np.diag(m))))
    shifted = sigma * np.eye(k) - m

    rng = np.random.default_rng(k)
    v = np.ones(k) + 1e-3 * rng.standard_normal(k)
    v /= np.linalg.norm(v)
    lam = float(v @ m @ v)
    for _ in range(max_iters):
        w = shifted @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break  # v is exactly an eigenvector of the shift
        w /= norm
        if np.linalg.norm(w - v) < tol:
            v = w
            break
        v = w
    lam = float(v @ m @ v)

    # Rayleigh-shifted inverse iteration polish
    for _ in range(8):
        residual = np.linalg.norm(m @ v - lam * v)
        if residual <= 1e-14 * max(scale, 1e-300):
            break
        try:
            w = np.linalg.solve(m - (lam - 1e-10 * scale) * np.eye(k), v)
        except np.linalg.LinAlgError:
            break
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            break
        v = w / nw
        lam = float(v @ m @ v)

    if np.linalg.norm(m @ v - lam * v) > 1e-8 * max(scale, 1e-300):
        raise ConvergenceFailure("min_eigpair residual above tolerance")
    return EigenPair(lam, _fix_sign(v))


def gct_lower_bound(m) -> float:
    """Smallest Gershgorin disc left-end: min_i (M_ii - sum_{j!=i} |M_ij|)."""
    m = np.asarray(m, dtype=float)
    radii = np.sum(np.abs(m), axis=1) - np.abs(np.diag(m))
    return float(np.min(np.diag(m) - radii))


def scaled_disc_left_ends(m, s):
    """Disc left-ends of S M S^{-1} for diagonal S = diag(s)."""
    m = np.asarray(m, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s == 0):
        raise ZeroScale("scaling vector has zero entries")
    scaled = np.abs(m) * np.abs(s[:, None] / s[None, :])
    radii = np.sum(scaled, axis=1) - np.abs(np.diag(m))
    return np.diag(m) - radii


def scaling_from_eigvec(v):
    """s_i = 1/v_i, with near-zero entries clamped sign-preservingly.

    Zero eigenvector entries arise for disconnected signed graphs; clamping is
    a pragmatic fallback and is logged when it fires.
    """
    v = np.asarray(v, dtype=float)
    # clamp relative to the largest entry so the disc ratios s_i/s_j stay
    # within a range the LP solver can digest
    floor = EIGVEC_CLAMP * max(float(np.max(np.abs(v))), 1e-300)
    small = np.abs(v) < floor
    if small.any():
        log.warning("clamping %d near-zero eigenvector entries", int(small.sum()))
        v = np.where(small, np.where(v >= 0, floor, -floor), v)
    return 1.0 / v
