"""Batched extraction of paired image/text embeddings.

Output rows follow input order exactly. Results are written as NPY
(float32) matrices `<prefix>.img.npy` / `<prefix>.txt.npy`, a pair
manifest `<prefix>.manifest.json` with positional row indices, and a
`<prefix>.config.json` sidecar recording the encoder and
preprocessing.
"""

from __future__ import annotations

import datetime as _dt
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .encoders import load_encoder

log = logging.getLogger("scendi_extractor")

MANIFEST_SCHEMA = "scendi-manifest/1"


class UndecodableImageError(Exception):
    """An input image could not be decoded and on_error is 'abort'."""


@dataclass
class ExtractJob:
    image_paths: list[str]
    prompts: list[str]
    encoder: str = "toy:64"
    batch_size: int = 16
    device: str = "cpu"
    out_prefix: str = "extracted"
    on_error: str = "abort"  # "abort" | "skip"
    groups: list[str] | None = field(default=None)

    def __post_init__(self):
        if len(self.image_paths) != len(self.prompts):
            raise ValueError(
                f"{len(self.image_paths)} images vs {len(self.prompts)} prompts; "
                "lists must be aligned"
            )
        if self.groups is not None and len(self.groups) != len(self.prompts):
            raise ValueError("groups, when given, must align with prompts")
        if self.on_error not in ("abort", "skip"):
            raise ValueError(f"on_error must be 'abort' or 'skip', got {self.on_error!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _decode(path: str, on_error: str, skipped: list[str]) -> Image.Image | None:
    try:
        with Image.open(path) as img:
            img.load()
            return img.convert("RGB")
    except (OSError, UnidentifiedImageError) as exc:
        if on_error == "skip":
            log.warning("skipping undecodable image %s: %s", path, exc)
            print(f"skipping undecodable image {path}: {exc}", file=sys.stderr)
            skipped.append(str(path))
            return None
        raise UndecodableImageError(f"cannot decode {path}: {exc}") from exc


def extract(job: ExtractJob) -> tuple[Path, Path, Path]:
    """Run the job; returns (image NPY, text NPY, manifest JSON) paths."""
    encoder = load_encoder(job.encoder, device=job.device)

    skipped: list[str] = []
    kept_images: list[Image.Image] = []
    kept_prompts: list[str] = []
    kept_groups: list[str | None] = []
    for idx, path in enumerate(job.image_paths):
        image = _decode(path, job.on_error, skipped)
        if image is None:
            continue
        kept_images.append(image)
        kept_prompts.append(job.prompts[idx])
        kept_groups.append(job.groups[idx] if job.groups is not None else None)
    if not kept_images:
        raise UndecodableImageError("no decodable images in the job")

    image_blocks = []
    for start in range(0, len(kept_images), job.batch_size):
        image_blocks.append(encoder.encode_images(kept_images[start : start + job.batch_size]))
    image_matrix = np.vstack(image_blocks).astype(np.float32)

    text_blocks = []
    for start in range(0, len(kept_prompts), job.batch_size):
        text_blocks.append(encoder.encode_texts(kept_prompts[start : start + job.batch_size]))
    text_matrix = np.vstack(text_blocks).astype(np.float32)

    prefix = Path(job.out_prefix)
    if prefix.parent != Path("."):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    img_path = prefix.with_name(prefix.name + ".img.npy")
    txt_path = prefix.with_name(prefix.name + ".txt.npy")
    man_path = prefix.with_name(prefix.name + ".manifest.json")
    cfg_path = prefix.with_name(prefix.name + ".config.json")

    np.save(img_path, image_matrix)
    np.save(txt_path, text_matrix)

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "image_matrix": img_path.name,
        "text_matrix": txt_path.name,
        "records": [
            {
                "prompt_text": prompt,
                "image_row": row,
                "text_row": row,
                "group": group,
            }
            for row, (prompt, group) in enumerate(zip(kept_prompts, kept_groups))
        ],
    }
    man_path.write_text(json.dumps(manifest, indent=2) + "\n")

    cfg_path.write_text(json.dumps({
        "encoder": job.encoder,
        "preprocessing": encoder.preprocessing,
        "embedding_dim": int(image_matrix.shape[1]),
        "batch_size": job.batch_size,
        "device": job.device,
        "skipped_images": skipped,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }, indent=2) + "\n")

    return img_path, txt_path, man_path
