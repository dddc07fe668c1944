"""Bit-exact file ingestion and persistence.

Matrices travel as NPY v1.0 (little-endian f4/f8, C-order, 2-D) or CSV
with an optional header row; everything is upcast to float64 on load
and save is always f8 C-order, so load(save(x)) is bitwise x. Pair
manifests bind prompt records to matrix rows positionally. Reports
carry enough provenance (config, seeds, input digests) to re-run
bit-identically; their schema id is "scendi-report/1".
"""

from __future__ import annotations

import ast
import datetime as _dt
import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FileFormatError, ValidationError

NPY_MAGIC = b"\x93NUMPY"
MANIFEST_SCHEMA = "scendi-manifest/1"
REPORT_SCHEMA = "scendi-report/1"


def _read_npy_header(raw: bytes, path: Path) -> tuple[dict, int]:
    if len(raw) < 10:
        raise FileFormatError("truncated", f"{path}: shorter than an NPY header")
    if raw[:6] != NPY_MAGIC:
        raise FileFormatError("bad-magic", f"{path}: missing NPY magic bytes")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise FileFormatError(
            "bad-version", f"{path}: NPY version {major}.{minor}, only 1.0 supported"
        )
    (header_len,) = struct.unpack("<H", raw[8:10])
    if len(raw) < 10 + header_len:
        raise FileFormatError("truncated", f"{path}: header extends past end of file")
    try:
        header = ast.literal_eval(raw[10 : 10 + header_len].decode("ascii"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise FileFormatError("bad-header", f"{path}: unparseable header: {exc}") from exc
    if not isinstance(header, dict) or not {"descr", "fortran_order", "shape"} <= set(header):
        raise FileFormatError("bad-header", f"{path}: header missing required keys")
    return header, 10 + header_len


def load_matrix(
    path: str | Path,
    expected: tuple[int, int] | None = None,
) -> np.ndarray:
    """Load a 2-D float matrix from NPY v1.0 or CSV, as float64.

    f4 input is upcast to f8. `expected`, when given, is the required
    (n, d) shape. Structural problems raise FileFormatError; NaN/Inf
    entries and shape mismatches raise ValidationError.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        matrix = _load_csv(path)
    else:
        raw = path.read_bytes()
        header, offset = _read_npy_header(raw, path)
        if header["fortran_order"]:
            raise FileFormatError(
                "fortran-order", f"{path}: Fortran-order arrays are not accepted"
            )
        descr = header["descr"]
        if descr not in ("<f4", "<f8"):
            raise FileFormatError(
                "bad-dtype", f"{path}: descr {descr!r}, expected '<f4' or '<f8'"
            )
        shape = header["shape"]
        if not (isinstance(shape, tuple) and len(shape) == 2):
            raise FileFormatError("not-2d", f"{path}: shape {shape!r} is not 2-D")
        dtype = np.dtype(descr)
        count = shape[0] * shape[1]
        if len(raw) - offset < count * dtype.itemsize:
            raise FileFormatError("truncated", f"{path}: data shorter than shape implies")
        matrix = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
        matrix = matrix.reshape(shape).astype(np.float64)

    if not np.all(np.isfinite(matrix)):
        raise ValidationError(f"{path}: matrix contains NaN or Inf entries")
    if expected is not None and matrix.shape != tuple(expected):
        raise ValidationError(
            f"{path}: shape {matrix.shape} does not match expected {tuple(expected)}"
        )
    return matrix


def _load_csv(path: Path) -> np.ndarray:
    rows: list[list[float]] = []
    try:
        lines = path.read_text().splitlines()
    except UnicodeDecodeError as exc:
        raise FileFormatError("bad-csv", f"{path}: not a text file: {exc}") from exc
    for lineno, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        tokens = [t.strip() for t in line.split(",")]
        try:
            rows.append([float(t) for t in tokens])
        except ValueError:
            if lineno == 0 and not rows:
                continue  # optional header row
            raise FileFormatError(
                "bad-csv", f"{path}: non-numeric value on line {lineno + 1}"
            ) from None
    if not rows:
        raise FileFormatError("bad-csv", f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FileFormatError("bad-csv", f"{path}: ragged rows")
    return np.asarray(rows, dtype=np.float64)


def save_matrix(matrix: np.ndarray, path: str | Path) -> None:
    """Write NPY v1.0, '<f8', C-order; loading back is bitwise identical."""
    path = Path(path)
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValidationError(f"only 2-D matrices are saved, got shape {matrix.shape}")
    header = (
        "{'descr': '<f8', 'fortran_order': False, "
        f"'shape': {matrix.shape}, }}"
    )
    # pad so magic + version + length word + header is a multiple of 64
    unpadded = len(NPY_MAGIC) + 2 + 2 + len(header) + 1
    header = header + " " * (-unpadded % 64) + "\n"
    with open(path, "wb") as fh:
        fh.write(NPY_MAGIC)
        fh.write(bytes((1, 0)))
        fh.write(struct.pack("<H", len(header)))
        fh.write(header.encode("ascii"))
        fh.write(matrix.tobytes(order="C"))


@dataclass(frozen=True)
class ManifestRecord:
    prompt_text: str
    image_row: int
    text_row: int
    group: str | None = None


@dataclass(frozen=True)
class PairManifest:
    """Positional binding between prompts and embedding-matrix rows."""

    records: list[ManifestRecord]
    image_matrix: str | None = None
    text_matrix: str | None = None

    def __post_init__(self):
        seen: set[int] = set()
        for rec in self.records:
            if rec.image_row < 0 or rec.text_row < 0:
                raise ValidationError(f"negative row index in record {rec!r}")
            if rec.image_row in seen:
                raise ValidationError(f"duplicate image_row {rec.image_row}")
            seen.add(rec.image_row)
            if rec.group is not None and rec.group == "":
                raise ValidationError("group labels must be nonempty strings")

    def __len__(self) -> int:
        return len(self.records)

    def check_bounds(self, n_image: int, n_text: int) -> None:
        for rec in self.records:
            if rec.image_row >= n_image:
                raise ValidationError(
                    f"image_row {rec.image_row} out of bounds for {n_image} rows"
                )
            if rec.text_row >= n_text:
                raise ValidationError(
                    f"text_row {rec.text_row} out of bounds for {n_text} rows"
                )

    def groups(self) -> list[str]:
        """Distinct group labels in first-appearance order."""
        out: list[str] = []
        for rec in self.records:
            if rec.group is not None and rec.group not in out:
                out.append(rec.group)
        return out

    def to_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "image_matrix": self.image_matrix,
            "text_matrix": self.text_matrix,
            "records": [
                {
                    "prompt_text": r.prompt_text,
                    "image_row": r.image_row,
                    "text_row": r.text_row,
                    "group": r.group,
                }
                for r in self.records
            ],
        }


def load_manifest(path: str | Path) -> PairManifest:
    """Read a pair manifest from JSON or CSV.

    CSV columns: prompt, image_row, text_row, group (group optional or
    empty). Row bounds are checked later, once matrix shapes are known.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return _load_manifest_csv(path)
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FileFormatError("bad-manifest", f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or "records" not in doc:
        raise FileFormatError("bad-manifest", f"{path}: missing 'records'")
    records = []
    for idx, rec in enumerate(doc["records"]):
        try:
            records.append(
                ManifestRecord(
                    prompt_text=str(rec["prompt_text"]),
                    image_row=int(rec["image_row"]),
                    text_row=int(rec["text_row"]),
                    group=rec.get("group"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(
                "bad-manifest", f"{path}: bad record {idx}: {exc}"
            ) from exc
    return PairManifest(
        records=records,
        image_matrix=doc.get("image_matrix"),
        text_matrix=doc.get("text_matrix"),
    )


def _load_manifest_csv(path: Path) -> PairManifest:
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise FileFormatError("bad-manifest", f"{path}: empty manifest")
    header = [h.strip().lower() for h in lines[0].split(",")]
    required = ("prompt", "image_row", "text_row")
    if not all(col in header for col in required):
        raise FileFormatError(
            "bad-manifest", f"{path}: CSV manifest needs columns {required}"
        )
    idx = {name: header.index(name) for name in header}
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        try:
            group = cells[idx["group"]] if "group" in idx and idx["group"] < len(cells) else ""
            records.append(
                ManifestRecord(
                    prompt_text=cells[idx["prompt"]],
                    image_row=int(cells[idx["image_row"]]),
                    text_row=int(cells[idx["text_row"]]),
                    group=group or None,
                )
            )
        except (IndexError, ValueError) as exc:
            raise FileFormatError(
                "bad-manifest", f"{path}: bad row on line {lineno}: {exc}"
            ) from exc
    return PairManifest(records=records)


def save_manifest(manifest: PairManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; serialized into reports for provenance."""

    kernel: str = "cosine"
    sigma: float | None = None
    rff_dim: int = 2000
    seed: int = 0
    l2_normalize: bool = False
    rel_cutoff: float = 1e-10
    center: bool = False
    renormalize: bool = False
    output: str | None = None

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "sigma": self.sigma,
            "rff_dim": self.rff_dim,
            "seed": self.seed,
            "l2_normalize": self.l2_normalize,
            "rel_cutoff": self.rel_cutoff,
            "center": self.center,
            "renormalize": self.renormalize,
            "output": self.output,
        }


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_report(
    report_body: dict,
    path: str | Path,
    config: RunConfig | None = None,
    inputs: dict[str, str | Path] | None = None,
) -> dict:
    """Assemble and write a report JSON; returns the written document.

    `report_body` carries the score payload (e.g. DiversityReport
    .to_dict()); config and input digests are attached alongside.
    Timestamps live only here, in report metadata.
    """
    from . import __version__

    doc = {
        "schema": REPORT_SCHEMA,
        "tool_version": __version__,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": config.to_dict() if config is not None else None,
        "inputs": {
            name: {"path": str(p), "sha256": sha256_file(p)}
            for name, p in (inputs or {}).items()
        },
    }
    doc.update(report_body)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    return doc


def load_report(path: str | Path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FileFormatError("bad-report", f"{path}: malformed JSON: {exc}") from exc
    if doc.get("schema") != REPORT_SCHEMA:
        raise FileFormatError(
            "bad-report", f"{path}: schema {doc.get('schema')!r} != {REPORT_SCHEMA!r}"
        )
    return doc
