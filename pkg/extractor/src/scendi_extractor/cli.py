"""Command line: extract --images DIR_OR_LIST --prompts FILE --encoder ID --out PREFIX."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .encoders import EncoderLoadError
from .extract import ExtractJob, UndecodableImageError, extract

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


def _collect_images(images: str) -> list[str]:
    path = Path(images)
    if path.is_dir():
        found = sorted(
            str(p) for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not found:
            raise click.ClickException(f"no image files found in {path}")
        return found
    if path.is_file():
        lines = [ln.strip() for ln in path.read_text().splitlines()]
        return [ln for ln in lines if ln]
    raise click.ClickException(f"{images} is neither a directory nor a list file")


@click.command()
@click.version_option(__version__)
@click.option("--images", required=True,
              help="Directory of images or a text file listing image paths.")
@click.option("--prompts", required=True, type=click.Path(exists=True),
              help="Text file, one prompt per line, aligned with the images.")
@click.option("--encoder", default="toy:64", show_default=True,
              help="Encoder id, e.g. toy:64 or clip:<org/model>.")
@click.option("--out", "out_prefix", required=True, help="Output file prefix.")
@click.option("--batch-size", type=int, default=16, show_default=True)
@click.option("--device", default="cpu", show_default=True)
@click.option("--on-error", type=click.Choice(["abort", "skip"]), default="abort",
              show_default=True, help="What to do with undecodable images.")
def main(images, prompts, encoder, out_prefix, batch_size, device, on_error):
    """Encode aligned (image, prompt) pairs into embedding matrices."""
    image_paths = _collect_images(images)
    prompt_lines = Path(prompts).read_text().splitlines()
    prompt_list = [ln.strip() for ln in prompt_lines if ln.strip()]
    try:
        job = ExtractJob(
            image_paths=image_paths,
            prompts=prompt_list,
            encoder=encoder,
            batch_size=batch_size,
            device=device,
            out_prefix=out_prefix,
            on_error=on_error,
        )
        img_path, txt_path, man_path = extract(job)
    except (ValueError, UndecodableImageError) as exc:
        click.echo(json.dumps({"error": {"kind": "validation", "message": str(exc)}}), err=True)
        sys.exit(2)
    except EncoderLoadError as exc:
        click.echo(json.dumps({"error": {"kind": "encoder", "message": str(exc)}}), err=True)
        sys.exit(3)
    rows = len(json.loads(man_path.read_text())["records"])
    click.echo(json.dumps({
        "images": str(img_path),
        "texts": str(txt_path),
        "manifest": str(man_path),
        "rows": rows,
    }))


if __name__ == "__main__":
    main()
