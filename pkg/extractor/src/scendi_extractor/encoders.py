"""Encoder registry.

Identifiers use a scheme prefix:

  toy:<dim>          deterministic offline encoder (pixel statistics
                     for images, character-trigram hashing for text,
                     both projected to a shared <dim>-dimensional
                     space); intended for tests and pipeline checks.
  clip:<model-id>    a pretrained contrastive vision-language
                     checkpoint loaded via transformers; needs torch
                     and locally available weights.

Both modalities of one encoder share the embedding dimension, as the
downstream joint-covariance math requires.
"""

from __future__ import annotations

import zlib

import numpy as np
from PIL import Image

TOY_IMAGE_SIDE = 16
TOY_TEXT_BUCKETS = 512


class EncoderLoadError(Exception):
    """The requested encoder cannot be constructed; extraction aborts."""


class ToyEncoder:
    """Seeded random-projection encoder; deterministic, no downloads.

    Images are resized to a fixed thumbnail and their RGB pixels
    projected; texts are hashed character trigrams projected into the
    same space. Projections are fixed by the identifier alone.
    """

    preprocessing = f"rgb thumbnail {TOY_IMAGE_SIDE}x{TOY_IMAGE_SIDE}; char-trigram hash {TOY_TEXT_BUCKETS}"

    def __init__(self, dim: int):
        if dim < 2:
            raise EncoderLoadError(f"toy encoder dim must be >= 2, got {dim}")
        self.dim = dim
        rng = np.random.default_rng(zlib.crc32(f"toy:{dim}".encode()))
        pixel_features = 3 * TOY_IMAGE_SIDE * TOY_IMAGE_SIDE
        self._image_proj = rng.standard_normal((pixel_features, dim)).astype(np.float32)
        self._image_proj /= np.sqrt(pixel_features)
        self._text_proj = rng.standard_normal((TOY_TEXT_BUCKETS, dim)).astype(np.float32)
        self._text_proj /= np.sqrt(TOY_TEXT_BUCKETS)

    def encode_image(self, image: Image.Image) -> np.ndarray:
        thumb = image.convert("RGB").resize((TOY_IMAGE_SIDE, TOY_IMAGE_SIDE))
        pixels = np.asarray(thumb, dtype=np.float32).reshape(-1) / 255.0
        return (pixels - pixels.mean()) @ self._image_proj

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for row, text in enumerate(texts):
            counts = np.zeros(TOY_TEXT_BUCKETS, dtype=np.float32)
            padded = f"  {text.lower()}  "
            for i in range(len(padded) - 2):
                bucket = zlib.crc32(padded[i : i + 3].encode()) % TOY_TEXT_BUCKETS
                counts[bucket] += 1.0
            counts += 1e-3  # keep rows nonzero even for empty prompts
            out[row] = counts @ self._text_proj
        return out

    def encode_images(self, images: list[Image.Image]) -> np.ndarray:
        return np.stack([self.encode_image(img) for img in images])


class ClipEncoder:
    """Contrastive vision-language checkpoint via transformers."""

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderLoadError(f"clip encoder needs torch+transformers: {exc}") from exc
        try:
            self._model = CLIPModel.from_pretrained(model_id).to(device).eval()
            self._processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise EncoderLoadError(f"cannot load {model_id!r}: {exc}") from exc
        self._torch = torch
        self._device = device
        self.dim = int(self._model.config.projection_dim)
        self.preprocessing = f"CLIPProcessor defaults for {model_id}"

    def encode_images(self, images) -> np.ndarray:
        inputs = self._processor(images=images, return_tensors="pt").to(self._device)
        with self._torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        return feats.cpu().numpy().astype(np.float32)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        inputs = self._processor(
            text=texts, return_tensors="pt", padding=True, truncation=True
        ).to(self._device)
        with self._torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        return feats.cpu().numpy().astype(np.float32)


def load_encoder(identifier: str, device: str = "cpu"):
    scheme, _, rest = identifier.partition(":")
    if scheme == "toy":
        try:
            dim = int(rest or "64")
        except ValueError:
            raise EncoderLoadError(f"bad toy encoder dim {rest!r}")
        return ToyEncoder(dim)
    if scheme == "clip":
        if not rest:
            raise EncoderLoadError("clip encoder needs a model id, e.g. clip:<org/name>")
        return ClipEncoder(rest, device=device)
    raise EncoderLoadError(f"unknown encoder scheme {scheme!r} in {identifier!r}")
