"""Encode an image directory and a prompt list into paired embedding
matrices (NPY, float32) plus a pair manifest for downstream diversity
scoring. Embeddings are stored unnormalized; kernel preprocessing is
the scorer's job.
"""

__version__ = "0.1.0"

from .encoders import EncoderLoadError, load_encoder
from .extract import ExtractJob, UndecodableImageError, extract

__all__ = [
    "EncoderLoadError",
    "ExtractJob",
    "UndecodableImageError",
    "extract",
    "load_encoder",
    "__version__",
]
