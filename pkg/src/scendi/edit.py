"""Prompt-direction cancellation for embeddings.

A Modifier wraps the text-to-image conversion matrix fitted on a
reference corpus; applying it subtracts the text-predictable part of
an image feature vector, decorrelating it from the prompt. The naive
baseline subtracts the text vector directly (conversion matrix
replaced by identity) and is kept for comparison. Top-k cosine
retrieval works on either raw or modified vectors.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .covariance import blocks, gamma_star
from .errors import FileFormatError, ValidationError
from .kernels import FeatureMatrix, KernelConfig
from .spectral import DEFAULT_REL_CUTOFF


@dataclass(frozen=True)
class Modifier:
    """Fitted conversion matrix plus the provenance to reproduce it."""

    gamma: np.ndarray
    kernel_config: KernelConfig
    fitted_on: str
    rel_cutoff: float

    @property
    def d(self) -> int:
        return self.gamma.shape[0]


def fit_modifier(
    phi_i: FeatureMatrix,
    phi_t: FeatureMatrix,
    rel_cutoff: float = DEFAULT_REL_CUTOFF,
    corpus: str = "unnamed",
) -> Modifier:
    """Fit the conversion matrix on an aligned reference corpus."""
    g = gamma_star(blocks(phi_i, phi_t), rel_cutoff)
    return Modifier(
        gamma=g,
        kernel_config=phi_i.kernel_config,
        fitted_on=corpus,
        rel_cutoff=rel_cutoff,
    )


def modify(
    x_i: np.ndarray,
    x_t: np.ndarray,
    m: Modifier,
    renormalize: bool = False,
) -> np.ndarray:
    """Cancel the prompt direction: x_i - Gamma x_t.

    The raw residual is returned by default; renormalize rescales it to
    unit norm for downstream cosine retrieval (zero residuals stay zero).
    """
    x_i = np.asarray(x_i, dtype=np.float64)
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_i.shape[-1] != m.d or x_t.shape[-1] != m.d:
        raise ValidationError(
            f"dimension mismatch: modifier is {m.d}-dim, "
            f"inputs are {x_i.shape[-1]} and {x_t.shape[-1]}"
        )
    out = x_i - x_t @ m.gamma.T
    if renormalize:
        norm = np.linalg.norm(out, axis=-1, keepdims=True)
        out = np.divide(out, norm, out=np.zeros_like(out), where=norm > 0)
    return out


def naive_modify(x_i: np.ndarray, x_t: np.ndarray) -> np.ndarray:
    """Baseline subtraction x_i - x_t (conversion matrix = identity)."""
    x_i = np.asarray(x_i, dtype=np.float64)
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_i.shape != x_t.shape:
        raise ValidationError(
            f"dimension mismatch: {x_i.shape} vs {x_t.shape}"
        )
    return x_i - x_t


def retrieve_topk(
    query: np.ndarray,
    gallery: FeatureMatrix,
    k: int,
) -> list[tuple[int, float]]:
    """Indices and scores of the k most cosine-similar gallery rows.

    Descending by score, ties broken by lower index. A zero query
    scores 0 against everything.
    """
    if gallery.n == 0:
        raise ValidationError("empty gallery")
    if not 1 <= k <= gallery.n:
        raise ValidationError(f"k={k} out of range for gallery of {gallery.n}")
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.shape[0] != gallery.d:
        raise ValidationError(
            f"query dim {query.shape[0]} != gallery dim {gallery.d}"
        )
    qnorm = float(np.linalg.norm(query))
    if qnorm == 0.0:
        scores = np.zeros(gallery.n)
    else:
        scores = gallery.entries @ (query / qnorm)
    order = np.argsort(-scores, kind="stable")[:k]
    return [(int(i), float(scores[i])) for i in order]


def save_modifier(m: Modifier, prefix: str | Path) -> tuple[Path, Path]:
    """Persist as <prefix>.gamma.npy + <prefix>.gamma.json."""
    from .io import save_matrix

    prefix = Path(prefix)
    npy_path = prefix.with_name(prefix.name + ".gamma.npy")
    json_path = prefix.with_name(prefix.name + ".gamma.json")
    save_matrix(m.gamma, npy_path)
    cfg = m.kernel_config
    meta = {
        "kernel": cfg.kind,
        "sigma": cfg.sigma,
        "rff_dim": cfg.rff_dim if cfg.kind == "gaussian" else None,
        "seed": cfg.seed,
        "rel_cutoff": m.rel_cutoff,
        "corpus": m.fitted_on,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    json_path.write_text(json.dumps(meta, indent=2) + "\n")
    return npy_path, json_path


def load_modifier(prefix: str | Path) -> Modifier:
    """Reload a persisted modifier; the matrix round-trips bit-exactly."""
    from .io import load_matrix

    prefix = Path(prefix)
    npy_path = prefix.with_name(prefix.name + ".gamma.npy")
    json_path = prefix.with_name(prefix.name + ".gamma.json")
    gamma = load_matrix(npy_path)
    try:
        meta = json.loads(json_path.read_text())
    except (json.JSONDecodeError, OSError) as exc:
        raise FileFormatError("bad-manifest", f"cannot read {json_path}: {exc}") from exc
    kind = meta.get("kernel", "cosine")
    cfg = KernelConfig(
        kind=kind,
        sigma=meta.get("sigma"),
        rff_dim=meta.get("rff_dim") or 2000,
        seed=meta.get("seed") or 0,
    )
    return Modifier(
        gamma=gamma,
        kernel_config=cfg,
        fitted_on=meta.get("corpus", "unknown"),
        rel_cutoff=float(meta.get("rel_cutoff", DEFAULT_REL_CUTOFF)),
    )
