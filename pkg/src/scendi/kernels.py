"""Explicit kernel feature maps for embedding matrices.

Two normalized kernels (k(x,x) = 1 for all x):
  * cosine similarity, whose exact feature map is row normalization;
  * Gaussian(sigma), approximated by random Fourier features with
    paired cos/sin components so rows stay exactly unit norm.

Feature rows of both modalities must live in the same feature space,
so a single KernelConfig (and hence one frequency draw) is shared by
the image and text maps of a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .spectral import symmetrize

ROW_NORM_ATOL = 1e-9


@dataclass(frozen=True)
class KernelConfig:
    """Kernel choice plus every knob needed to reproduce the features.

    sigma/rff_dim/seed only apply to the gaussian kernel. rff_dim is
    the total feature dimension r; r/2 frequencies are drawn. sigma
    may be None, meaning "use the median heuristic" (resolved before
    feature mapping; resolved configs always carry a number).
    l2_normalize controls whether raw embeddings are unit-normalized
    before the Gaussian map (off by default; the cosine map normalizes
    by definition).
    """

    kind: str = "cosine"
    sigma: float | None = None
    rff_dim: int = 2000
    seed: int = 0
    l2_normalize: bool = False

    def __post_init__(self):
        if self.kind not in ("cosine", "gaussian"):
            raise ValidationError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian":
            if self.rff_dim <= 0 or self.rff_dim % 2 != 0:
                raise ValidationError(
                    f"rff_dim must be an even positive integer, got {self.rff_dim}"
                )
            if self.sigma is not None and not self.sigma > 0:
                raise ValidationError(f"sigma must be positive, got {self.sigma}")

    def to_dict(self) -> dict:
        return {
            "kernel": self.kind,
            "sigma": self.sigma,
            "rff_dim": self.rff_dim if self.kind == "gaussian" else None,
            "seed": self.seed,
            "l2_normalize": self.l2_normalize,
        }


@dataclass(frozen=True)
class FeatureMatrix:
    """n x d kernel feature rows, each unit norm within 1e-9."""

    entries: np.ndarray
    kernel_config: KernelConfig = field(default_factory=KernelConfig)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2:
            raise ValidationError(f"feature matrix must be 2-D, got {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValidationError("feature matrix has non-finite entries")
        norms = np.linalg.norm(entries, axis=1)
        bad = np.nonzero(np.abs(norms - 1.0) > ROW_NORM_ATOL)[0]
        if bad.size:
            raise ValidationError(
                f"feature row {bad[0]} has norm {norms[bad[0]]!r}, expected 1"
            )
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def d(self) -> int:
        return self.entries.shape[1]


def check_embeddings(e: np.ndarray, name: str = "embeddings") -> np.ndarray:
    """Validate a raw n x d_raw embedding matrix: finite, no zero rows."""
    e = np.asarray(e, dtype=np.float64)
    if e.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {e.shape}")
    if not np.all(np.isfinite(e)):
        raise ValidationError(f"{name} has non-finite entries")
    norms = np.linalg.norm(e, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValidationError(f"{name} row {zero[0]} is all-zero")
    return e


def cosine_features(e: np.ndarray, cfg: KernelConfig | None = None) -> FeatureMatrix:
    """Row-normalize embeddings; dot products equal cosine similarity."""
    e = check_embeddings(e)
    if cfg is None:
        cfg = KernelConfig(kind="cosine")
    norms = np.linalg.norm(e, axis=1, keepdims=True)
    return FeatureMatrix(entries=e / norms, kernel_config=cfg)


def median_sigma(e: np.ndarray, max_rows: int = 2048) -> float:
    """Median pairwise Euclidean distance heuristic for sigma.

    Rows beyond max_rows are subsampled by even striding so the result
    stays deterministic.
    """
    e = check_embeddings(e)
    n = e.shape[0]
    if n > max_rows:
        stride = -(-n // max_rows)
        e = e[::stride]
        n = e.shape[0]
    if n < 2:
        raise ValidationError("median heuristic needs at least 2 rows")
    sq = np.sum(e * e, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (e @ e.T)
    iu = np.triu_indices(n, k=1)
    dists = np.sqrt(np.maximum(d2[iu], 0.0))
    sigma = float(np.median(dists))
    if sigma <= 0.0:
        raise ValidationError("median pairwise distance is zero; sigma undefined")
    return sigma


def rff_frequencies(d_raw: int, cfg: KernelConfig) -> np.ndarray:
    """Draw the shared (r/2) x d_raw frequency matrix for Gaussian RFF.

    Frequencies are iid N(0, sigma^-2 I), seeded by cfg.seed; identical
    configs yield bitwise-identical draws.
    """
    if cfg.kind != "gaussian":
        raise ValidationError("RFF frequencies only apply to the gaussian kernel")
    if cfg.sigma is None:
        raise ValidationError("sigma unresolved; compute the median heuristic first")
    rng = np.random.default_rng(cfg.seed)
    return rng.standard_normal((cfg.rff_dim // 2, d_raw)) / cfg.sigma


def rff_features(e: np.ndarray, cfg: KernelConfig) -> FeatureMatrix:
    """Random Fourier feature map for the Gaussian kernel.

    Row i is (1/sqrt(D)) [cos(w_1 x_i), sin(w_1 x_i), ..., cos(w_D x_i),
    sin(w_D x_i)] with D = rff_dim / 2, so every row has exactly unit
    norm and phi(x) . phi(y) estimates exp(-|x-y|^2 / (2 sigma^2)).
    """
    e = check_embeddings(e)
    if cfg.l2_normalize:
        e = e / np.linalg.norm(e, axis=1, keepdims=True)
    freqs = rff_frequencies(e.shape[1], cfg)
    proj = e @ freqs.T
    n_freq = freqs.shape[0]
    out = np.empty((e.shape[0], 2 * n_freq), dtype=np.float64)
    out[:, 0::2] = np.cos(proj)
    out[:, 1::2] = np.sin(proj)
    out /= np.sqrt(n_freq)
    return FeatureMatrix(entries=out, kernel_config=cfg)


def features_for(e: np.ndarray, cfg: KernelConfig) -> FeatureMatrix:
    """Dispatch on cfg.kind; the one entry point the pipeline uses."""
    if cfg.kind == "cosine":
        return cosine_features(e, cfg)
    return rff_features(e, cfg)


def resolve_sigma(cfg: KernelConfig, e_reference: np.ndarray) -> KernelConfig:
    """Fill in sigma via the median heuristic when left unset."""
    if cfg.kind != "gaussian" or cfg.sigma is not None:
        return cfg
    ref = e_reference
    if cfg.l2_normalize:
        ref = check_embeddings(e_reference)
        ref = ref / np.linalg.norm(ref, axis=1, keepdims=True)
    return KernelConfig(
        kind=cfg.kind,
        sigma=median_sigma(ref),
        rff_dim=cfg.rff_dim,
        seed=cfg.seed,
        l2_normalize=cfg.l2_normalize,
    )


def gram(phi: FeatureMatrix) -> np.ndarray:
    """n x n kernel matrix Phi Phi^T; unit diagonal for these kernels."""
    return symmetrize(phi.entries @ phi.entries.T)
