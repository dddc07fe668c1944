"""Top-eigendirection clustering of kernel (or Schur-split) covariances.

Samples are assigned to whichever of the top-m eigenvectors carries
their largest squared loading; squared loadings sidestep eigenvector
sign ambiguity, and the spectral sign convention keeps labels stable
across reruns. Clustering a Schur part shows the structure that
survives (model side) or is induced by (text side) the prompts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .covariance import blocks, schur_decompose
from .errors import ValidationError
from .kernels import FeatureMatrix, gram
from .spectral import DEFAULT_REL_CUTOFF, clamp_psd, eigh

DEGENERATE_TRACE = 1e-9


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-sample labels, squared loadings, and the top-m eigenvalues."""

    labels: np.ndarray
    scores: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def m(self) -> int:
        return self.scores.shape[1]

    def to_dict(self, top_loadings: int = 3) -> dict:
        per_sample = []
        for i in range(self.n):
            order = np.argsort(-self.scores[i], kind="stable")[:top_loadings]
            per_sample.append(
                [[int(j), float(self.scores[i, j])] for j in order]
            )
        return {
            "labels": [int(v) for v in self.labels],
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "top_loadings": per_sample,
        }


def _assign(scores: np.ndarray, eigenvalues: np.ndarray) -> ClusterAssignment:
    # argmax resolves ties toward the lower cluster id
    return ClusterAssignment(
        labels=np.argmax(scores, axis=1),
        scores=scores,
        eigenvalues=eigenvalues,
    )


def kpca_clusters(phi: FeatureMatrix, m: int, center: bool = False) -> ClusterAssignment:
    """Cluster by the top-m eigenvectors of the scaled kernel matrix.

    Uncentered by default so the spectrum matches the one the scores
    use; `center` applies classical double-centering first.
    """
    n = phi.n
    if not 1 <= m <= n:
        raise ValidationError(f"cluster count m={m} out of range [1, {n}]")
    k = gram(phi) / n
    if center:
        h = np.eye(n) - np.full((n, n), 1.0 / n)
        k = h @ k @ h
    system = eigh(k)
    vecs = system.vectors[:, :m]
    return _assign(vecs**2, system.values[:m])


def schur_clusters(
    phi_i: FeatureMatrix,
    phi_t: FeatureMatrix,
    m: int,
    which: str = "model",
    rel_cutoff: float = DEFAULT_REL_CUTOFF,
) -> ClusterAssignment:
    """Cluster samples by the eigenvectors of a Schur-split part.

    which="model" uses the prompt-removed part and projects the residual
    features phi(x_I) - Gamma phi(x_T) onto its eigenvectors;
    which="text" uses the text-explained part with Gamma phi(x_T).
    A vanished part yields one degenerate cluster and a warning.
    """
    if which not in ("model", "text"):
        raise ValidationError(f"which must be 'model' or 'text', got {which!r}")
    if not 1 <= m <= phi_i.d:
        raise ValidationError(f"cluster count m={m} out of range [1, {phi_i.d}]")
    b = blocks(phi_i, phi_t)
    decomp = schur_decompose(b, rel_cutoff)

    text_part = phi_t.entries @ decomp.gamma_star.T
    if which == "model":
        part = decomp.lambda_i
        trace = decomp.trace_i
        samples = phi_i.entries - text_part
    else:
        part = decomp.lambda_t
        trace = decomp.trace_t
        samples = text_part

    if trace < DEGENERATE_TRACE:
        warnings.warn(
            f"{which} part has vanished (trace {trace:.3e}); "
            "returning a single degenerate cluster",
            stacklevel=2,
        )
        return ClusterAssignment(
            labels=np.zeros(phi_i.n, dtype=np.intp),
            scores=np.zeros((phi_i.n, m)),
            eigenvalues=np.zeros(m),
        )

    system = eigh(part)
    # noise band is relative to the full covariance scale, not the part's
    scale = float(max(eigh(b.c_ii).values[0], 0.0))
    values = clamp_psd(system.values, scale=scale)
    vecs = system.vectors[:, :m]
    return _assign((samples @ vecs) ** 2, values[:m])
