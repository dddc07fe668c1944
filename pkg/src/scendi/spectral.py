"""Symmetric-matrix primitives: eigendecomposition, PSD clamping,
spectral pseudoinverse, and matrix-based (von Neumann) entropy.

All spectra are sorted descending. Entropy uses the natural log, so
exp(entropy) is an effective mode count. Eigenvectors follow a fixed
sign convention (first nonzero component positive) to make downstream
cluster labels and reports reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PSDViolationError, ValidationError

SYMMETRY_ATOL = 1e-9

# Spectrum entries at or below this are treated as exact zeros in
# entropy sums; avoids log-of-noise blowups.
ENTROPY_FLOOR = 1e-12

DEFAULT_REL_CUTOFF = 1e-10
DEFAULT_SIGN_TOL = 1e-9


@dataclass(frozen=True)
class EigenSystem:
    """Spectrum (descending) and column-orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def check_symmetric(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate a square symmetric float64 matrix; returns it as ndarray."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_ATOL:
        raise ValidationError(
            f"{name} is not symmetric within {SYMMETRY_ATOL:g} per entry"
        )
    return a


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Average away roundoff asymmetry from matrix products."""
    return (a + a.T) / 2.0


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # First nonzero component of each eigenvector made positive.
    v = vectors.copy()
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.nonzero(col)[0]
        if nz.size and col[nz[0]] < 0:
            v[:, j] = -col
    return v


def eigh(a: np.ndarray) -> EigenSystem:
    """Eigendecomposition of a symmetric matrix, spectrum descending.

    Deterministic for a fixed input. Raises NumericalError if the
    underlying solver fails to converge.
    """
    a = check_symmetric(a)
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(values)[::-1]
    return EigenSystem(values=values[order], vectors=_fix_signs(vectors[:, order]))


def clamp_psd(
    values: np.ndarray,
    rel_tol: float = DEFAULT_SIGN_TOL,
    scale: float | None = None,
) -> np.ndarray:
    """Zero out negative eigenvalues inside the sign-noise band.

    The band is [-rel_tol * scale, 0), where `scale` defaults to the
    largest nonnegative value of the spectrum itself. Callers that
    decompose a difference of matrices (where the part may vanish while
    the parent does not) pass the parent's largest eigenvalue as scale.
    Values more negative than the band raise PSDViolationError.
    """
    values = np.asarray(values, dtype=np.float64)
    if scale is None:
        scale = float(max(values[0], 0.0)) if values.size else 0.0
    threshold = -rel_tol * scale
    worst = float(values[-1]) if values.size else 0.0
    if worst < threshold:
        raise PSDViolationError(worst, threshold)
    return np.where(values < 0.0, 0.0, values)


def pseudoinverse(a: np.ndarray, rel_cutoff: float = DEFAULT_REL_CUTOFF) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a PSD matrix via its spectrum.

    Eigenvalues above rel_cutoff * lambda_max are inverted, the rest
    zeroed. An all-zero matrix maps to the zero matrix.
    """
    system = eigh(a)
    values = clamp_psd(system.values)
    lam_max = float(values[0]) if values.size else 0.0
    if lam_max == 0.0:
        return np.zeros_like(a, dtype=np.float64)
    kept = values > rel_cutoff * lam_max
    inv = np.zeros_like(values)
    inv[kept] = 1.0 / values[kept]
    return symmetrize((system.vectors * inv) @ system.vectors.T)


def range_projector(a: np.ndarray, rel_cutoff: float = DEFAULT_REL_CUTOFF) -> np.ndarray:
    """Orthogonal projector onto the numerical range of a PSD matrix."""
    system = eigh(a)
    values = clamp_psd(system.values)
    lam_max = float(values[0]) if values.size else 0.0
    if lam_max == 0.0:
        return np.zeros_like(a, dtype=np.float64)
    kept = system.vectors[:, values > rel_cutoff * lam_max]
    return symmetrize(kept @ kept.T)


def matrix_entropy(values: np.ndarray) -> float:
    """Von Neumann entropy sum(l * log(1/l)) of a spectrum, natural log.

    Expects a nonnegative spectrum with sum <= 1 + 1e-8; entries at or
    below ENTROPY_FLOOR contribute zero (the 0 * log(1/0) convention).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size and float(values.min()) < 0.0:
        raise ValidationError(
            f"entropy input has negative value {float(values.min())!r}; clamp first"
        )
    total = float(values.sum())
    if total > 1.0 + 1e-8:
        raise ValidationError(f"entropy input sums to {total!r} > 1")
    live = values[values > ENTROPY_FLOOR]
    if live.size == 0:
        return 0.0
    return float(-np.sum(live * np.log(live)))
