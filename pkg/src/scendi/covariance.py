"""Joint (image, text) kernel covariance blocks and their
Schur-complement split into model-driven and prompt-driven parts.

All computation is feature-space (d x d); the Gram-side dual is left
to tests. The prompt-driven part is C_IT pinv(C_TT) C_IT^T; what
remains of C_II is the covariance of the residual features
phi(x_I) - Gamma phi(x_T), where Gamma = C_IT pinv(C_TT) is the
least-squares text-to-image conversion matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kernels import FeatureMatrix
from .spectral import (
    DEFAULT_REL_CUTOFF,
    DEFAULT_SIGN_TOL,
    clamp_psd,
    eigh,
    pseudoinverse,
    symmetrize,
)

TRACE_ATOL = 1e-8


@dataclass(frozen=True)
class CovarianceBlocks:
    """The three d x d blocks of the joint covariance, plus n.

    When built by blocks() the underlying feature matrices ride along;
    the decomposition then works at the feature level, which keeps both
    parts PSD to machine precision instead of amplifying roundoff
    through the pseudoinverse.
    """

    c_ii: np.ndarray
    c_it: np.ndarray
    c_tt: np.ndarray
    n: int
    phi_i: FeatureMatrix | None = None
    phi_t: FeatureMatrix | None = None

    def __post_init__(self):
        for name in ("c_ii", "c_it", "c_tt"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            if m.ndim != 2 or m.shape != self.c_ii.shape:
                raise ValidationError(f"{name} must be d x d, got {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ValidationError(f"{name} has non-finite entries")
        for name in ("c_ii", "c_tt"):
            tr = float(np.trace(getattr(self, name)))
            if abs(tr - 1.0) > TRACE_ATOL:
                raise ValidationError(
                    f"trace({name}) = {tr!r}, expected 1 for a normalized kernel"
                )

    @property
    def d(self) -> int:
        return self.c_ii.shape[0]

    def joint(self) -> np.ndarray:
        """Assemble the 2d x 2d joint covariance [[C_II, C_IT], [C_IT^T, C_TT]]."""
        top = np.hstack([self.c_ii, self.c_it])
        bottom = np.hstack([self.c_it.T, self.c_tt])
        return np.vstack([top, bottom])


@dataclass(frozen=True)
class SchurDecomposition:
    """C_II split as lambda_i (model-driven) + lambda_t (prompt-driven).

    lambda_i and lambda_t are the raw symmetrized parts (their sum
    reproduces c_ii to roundoff); spectrum_i and spectrum_t are their
    PSD-clamped eigenvalues, descending, and trace_i/trace_t the
    corresponding clamped masses (trace_i is the erasure probability
    of the text-based mode predictor).
    """

    lambda_i: np.ndarray
    lambda_t: np.ndarray
    gamma_star: np.ndarray
    spectrum_i: np.ndarray
    spectrum_t: np.ndarray
    trace_i: float
    trace_t: float
    rel_cutoff: float


def blocks(phi_i: FeatureMatrix, phi_t: FeatureMatrix) -> CovarianceBlocks:
    """C_II = (1/n) Phi_I^T Phi_I, C_IT = (1/n) Phi_I^T Phi_T, likewise C_TT.

    Rows of the two feature matrices must be positionally paired.
    """
    if phi_i.n != phi_t.n:
        raise ValidationError(
            f"pairing error: {phi_i.n} image rows vs {phi_t.n} text rows"
        )
    if phi_i.d != phi_t.d:
        raise ValidationError(
            f"pairing error: feature dims differ ({phi_i.d} vs {phi_t.d}); "
            "both modalities must share one kernel feature space"
        )
    n = phi_i.n
    fi, ft = phi_i.entries, phi_t.entries
    return CovarianceBlocks(
        c_ii=symmetrize(fi.T @ fi / n),
        c_it=fi.T @ ft / n,
        c_tt=symmetrize(ft.T @ ft / n),
        n=n,
        phi_i=phi_i,
        phi_t=phi_t,
    )


def covariance_matrix(phi: FeatureMatrix) -> np.ndarray:
    """Single-modality kernel covariance (1/n) Phi^T Phi."""
    return symmetrize(phi.entries.T @ phi.entries / phi.n)


def gamma_star(b: CovarianceBlocks, rel_cutoff: float = DEFAULT_REL_CUTOFF) -> np.ndarray:
    """Least-squares text-to-image conversion matrix C_IT pinv(C_TT)."""
    if b.phi_i is not None and b.phi_t is not None:
        return _split_from_features(b, rel_cutoff)[2]
    return b.c_it @ pseudoinverse(b.c_tt, rel_cutoff)


def _split_from_features(
    b: CovarianceBlocks, rel_cutoff: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Least-squares route: the prediction Gamma phi(x_T) equals the
    # projection of the image features onto the kept left singular
    # space of Phi_T, so both parts come out as Gram matrices (PSD to
    # machine precision) instead of a difference involving pinv(C_TT).
    fi, ft = b.phi_i.entries, b.phi_t.entries
    u, s, vt = np.linalg.svd(ft, full_matrices=False)
    kept = s**2 > rel_cutoff * (s[0] ** 2 if s.size else 0.0)
    u_k = u[:, kept]
    predicted = u_k @ (u_k.T @ fi)
    residual = fi - predicted
    lam_t = symmetrize(predicted.T @ predicted / b.n)
    lam_i = symmetrize(residual.T @ residual / b.n)
    gamma = (fi.T @ u_k / s[kept]) @ vt[kept]
    return lam_i, lam_t, gamma


def _split_from_blocks(
    b: CovarianceBlocks, rel_cutoff: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gamma = b.c_it @ pseudoinverse(b.c_tt, rel_cutoff)
    lam_t = symmetrize(gamma @ b.c_it.T)
    lam_i = symmetrize(b.c_ii - lam_t)
    return lam_i, lam_t, gamma


def schur_decompose(
    b: CovarianceBlocks,
    rel_cutoff: float = DEFAULT_REL_CUTOFF,
    sign_tol: float = DEFAULT_SIGN_TOL,
) -> SchurDecomposition:
    """Split C_II into the Schur complement and the text-explained part.

    Both parts are PSD up to roundoff; spectra are clamped against the
    scale of C_II's largest eigenvalue (either part may vanish entirely,
    leaving only noise in its own spectrum). Raises PSDViolationError
    when negativity exceeds the sign-noise band.
    """
    if b.phi_i is not None and b.phi_t is not None:
        lam_i, lam_t, gamma = _split_from_features(b, rel_cutoff)
    else:
        lam_i, lam_t, gamma = _split_from_blocks(b, rel_cutoff)

    scale = float(max(eigh(b.c_ii).values[0], 0.0))
    spec_i = clamp_psd(eigh(lam_i).values, rel_tol=sign_tol, scale=scale)
    spec_t = clamp_psd(eigh(lam_t).values, rel_tol=sign_tol, scale=scale)

    trace_i = min(max(float(spec_i.sum()), 0.0), 1.0)
    trace_t = min(max(float(spec_t.sum()), 0.0), 1.0)
    return SchurDecomposition(
        lambda_i=lam_i,
        lambda_t=lam_t,
        gamma_star=gamma,
        spectrum_i=spec_i,
        spectrum_t=spec_t,
        trace_i=trace_i,
        trace_t=trace_t,
        rel_cutoff=rel_cutoff,
    )
