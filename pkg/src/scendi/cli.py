"""Command-line surface: score, decompose, modify, retrieve, cluster,
sweep, and synth.

Commands are deterministic given identical inputs and seeds; outputs
are byte-identical across runs except timestamps, which only appear in
report metadata. Exit codes: 0 success, 2 validation error, 3
numerical failure, 4 I/O or file-format error. Failures emit a
machine-readable JSON object on stderr. SCENDI_THREADS caps BLAS
parallelism (read at package import).
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .covariance import blocks, schur_decompose
from .edit import fit_modifier, load_modifier, modify, naive_modify, retrieve_topk, save_modifier
from .errors import FileFormatError, NumericalError, ValidationError
from .io import (
    PairManifest,
    RunConfig,
    load_manifest,
    load_matrix,
    save_manifest,
    save_matrix,
    write_report,
)
from .kernels import KernelConfig, cosine_features, features_for, resolve_sigma
from .kpca import kpca_clusters, schur_clusters
from .scores import evaluate
from .synth import FactorialSpec, SynthSpec, deterministic_spec, generate, generate_factorial

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _fail(code: int, kind: str, exc: Exception) -> None:
    payload = {"error": {"kind": kind, "message": str(exc)}}
    if isinstance(exc, FileFormatError):
        payload["error"]["code"] = exc.code
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def guarded(fn):
    """Translate package errors into exit codes + JSON on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            _fail(EXIT_VALIDATION, "validation", exc)
        except NumericalError as exc:
            _fail(EXIT_NUMERICAL, "numerical", exc)
        except FileFormatError as exc:
            _fail(EXIT_IO, "format", exc)
        except OSError as exc:
            _fail(EXIT_IO, "io", exc)

    return wrapper


def kernel_options(fn):
    fn = click.option(
        "--kernel", type=click.Choice(["cosine", "gaussian"]), default="cosine",
        show_default=True, help="Kernel feature map.")(fn)
    fn = click.option(
        "--sigma", default="median", show_default=True,
        help="Gaussian bandwidth: a float or 'median' for the median heuristic.")(fn)
    fn = click.option(
        "--rff-dim", type=int, default=2000, show_default=True,
        help="Total random Fourier feature dimension (even).")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True,
                      help="Seed for the frequency draw.")(fn)
    fn = click.option("--rel-cutoff", type=float, default=1e-10, show_default=True,
                      help="Relative eigenvalue cutoff for pseudoinversion.")(fn)
    fn = click.option("--l2-normalize", is_flag=True,
                      help="Unit-normalize embeddings before the Gaussian map.")(fn)
    return fn


def _parse_sigma(sigma: str) -> float | None:
    if sigma == "median":
        return None
    try:
        value = float(sigma)
    except ValueError:
        raise ValidationError(f"--sigma must be a float or 'median', got {sigma!r}")
    return value


def _make_config(kernel, sigma, rff_dim, seed, l2_normalize) -> KernelConfig:
    return KernelConfig(
        kind=kernel,
        sigma=_parse_sigma(sigma),
        rff_dim=rff_dim,
        seed=seed,
        l2_normalize=l2_normalize,
    )


def _load_pair(images, texts, manifest_path) -> tuple[np.ndarray, np.ndarray, PairManifest | None]:
    e_i = load_matrix(images)
    e_t = load_matrix(texts)
    manifest = None
    if manifest_path:
        manifest = load_manifest(manifest_path)
        manifest.check_bounds(e_i.shape[0], e_t.shape[0])
        rows_i = [r.image_row for r in manifest.records]
        rows_t = [r.text_row for r in manifest.records]
        e_i = e_i[rows_i]
        e_t = e_t[rows_t]
    elif e_i.shape[0] != e_t.shape[0]:
        raise ValidationError(
            f"row counts differ ({e_i.shape[0]} vs {e_t.shape[0]}) and no manifest given"
        )
    return e_i, e_t, manifest


def _featurize(e_i, e_t, cfg: KernelConfig):
    cfg = resolve_sigma(cfg, e_i)
    return features_for(e_i, cfg), features_for(e_t, cfg), cfg


@click.group()
@click.version_option(__version__)
def main():
    """Prompt-aware diversity scoring via Schur-complement splitting."""


@main.command("score")
@click.option("--images", required=True, type=click.Path(), help="Image embedding matrix (NPY/CSV).")
@click.option("--texts", required=True, type=click.Path(), help="Text embedding matrix (NPY/CSV).")
@click.option("--manifest", type=click.Path(), default=None, help="Pair manifest (JSON/CSV).")
@click.option("--out", required=True, type=click.Path(), help="Report JSON path.")
@kernel_options
@guarded
def cmd_score(images, texts, manifest, out, kernel, sigma, rff_dim, seed, rel_cutoff, l2_normalize):
    """Compute Vendi, RKE, and both Scendi scores; write a report."""
    cfg = _make_config(kernel, sigma, rff_dim, seed, l2_normalize)
    e_i, e_t, _ = _load_pair(images, texts, manifest)
    phi_i, phi_t, cfg = _featurize(e_i, e_t, cfg)
    report = evaluate(phi_i, phi_t, rel_cutoff)
    run_cfg = RunConfig(
        kernel=cfg.kind, sigma=cfg.sigma, rff_dim=cfg.rff_dim, seed=cfg.seed,
        l2_normalize=cfg.l2_normalize, rel_cutoff=rel_cutoff, output=str(out),
    )
    inputs = {"images": images, "texts": texts}
    if manifest:
        inputs["manifest"] = manifest
    doc = write_report(report.to_dict(), out, config=run_cfg, inputs=inputs)
    click.echo(json.dumps(doc["scores"]))


@main.command("decompose")
@click.option("--images", required=True, type=click.Path())
@click.option("--texts", required=True, type=click.Path())
@click.option("--manifest", type=click.Path(), default=None)
@click.option("--out-prefix", required=True, type=click.Path(),
              help="Writes <prefix>.gamma.npy/.json and <prefix>.spectra.csv.")
@kernel_options
@guarded
def cmd_decompose(images, texts, manifest, out_prefix, kernel, sigma, rff_dim, seed,
                  rel_cutoff, l2_normalize):
    """Split the covariance; persist the conversion matrix and spectra."""
    cfg = _make_config(kernel, sigma, rff_dim, seed, l2_normalize)
    e_i, e_t, _ = _load_pair(images, texts, manifest)
    phi_i, phi_t, cfg = _featurize(e_i, e_t, cfg)
    decomp = schur_decompose(blocks(phi_i, phi_t), rel_cutoff)

    modifier = fit_modifier(phi_i, phi_t, rel_cutoff, corpus=str(images))
    save_modifier(modifier, out_prefix)

    prefix = Path(out_prefix)
    spectra_path = prefix.with_name(prefix.name + ".spectra.csv")
    with open(spectra_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "lambda_i", "lambda_t"])
        for rank, (li, lt) in enumerate(zip(decomp.spectrum_i, decomp.spectrum_t)):
            if li <= 1e-12 and lt <= 1e-12:
                continue
            writer.writerow([rank, repr(float(li)), repr(float(lt))])
    click.echo(json.dumps({"trace_i": decomp.trace_i, "trace_t": decomp.trace_t}))


@main.command("modify")
@click.option("--images", required=True, type=click.Path())
@click.option("--texts", required=True, type=click.Path())
@click.option("--manifest", type=click.Path(), default=None)
@click.option("--gamma", "gamma_prefix", type=click.Path(), default=None,
              help="Load a fitted conversion matrix (file prefix); default fits on this corpus.")
@click.option("--naive", is_flag=True, help="Subtract text features directly instead.")
@click.option("--renormalize", is_flag=True, help="Rescale residuals to unit norm.")
@click.option("--out", required=True, type=click.Path(), help="Output NPY of modified features.")
@kernel_options
@guarded
def cmd_modify(images, texts, manifest, gamma_prefix, naive, renormalize, out,
               kernel, sigma, rff_dim, seed, rel_cutoff, l2_normalize):
    """Cancel prompt directions from every embedding row."""
    cfg = _make_config(kernel, sigma, rff_dim, seed, l2_normalize)
    e_i, e_t, _ = _load_pair(images, texts, manifest)
    phi_i, phi_t, cfg = _featurize(e_i, e_t, cfg)
    if naive:
        result = naive_modify(phi_i.entries, phi_t.entries)
        if renormalize:
            norms = np.linalg.norm(result, axis=1, keepdims=True)
            result = np.divide(result, norms, out=np.zeros_like(result), where=norms > 0)
    else:
        if gamma_prefix:
            modifier = load_modifier(_strip_gamma_suffix(gamma_prefix))
        else:
            modifier = fit_modifier(phi_i, phi_t, rel_cutoff, corpus=str(images))
        result = modify(phi_i.entries, phi_t.entries, modifier, renormalize=renormalize)
    save_matrix(result, out)
    click.echo(json.dumps({"rows": int(result.shape[0]), "out": str(out)}))


def _strip_gamma_suffix(path: str) -> str:
    for suffix in (".gamma.npy", ".gamma.json"):
        if path.endswith(suffix):
            return path[: -len(suffix)]
    return path


@main.command("retrieve")
@click.option("--gallery", required=True, type=click.Path(), help="Gallery embedding matrix.")
@click.option("--query-file", type=click.Path(), default=None,
              help="Single-row matrix holding the query vector.")
@click.option("--query-row", type=int, default=None, help="Use a gallery row as the query.")
@click.option("-k", "--top-k", type=int, default=5, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="CSV output (default stdout).")
@guarded
def cmd_retrieve(gallery, query_file, query_row, top_k, out):
    """Top-k cosine retrieval; emits (rank, index, score) rows."""
    gallery_features = cosine_features(load_matrix(gallery))
    if (query_file is None) == (query_row is None):
        raise ValidationError("provide exactly one of --query-file / --query-row")
    if query_file is not None:
        q = load_matrix(query_file)
        if q.shape[0] != 1:
            raise ValidationError(f"query file must have one row, got {q.shape[0]}")
        query = q[0]
    else:
        if not 0 <= query_row < gallery_features.n:
            raise ValidationError(f"query row {query_row} out of bounds")
        query = gallery_features.entries[query_row]
    hits = retrieve_topk(query, gallery_features, top_k)
    lines = [["rank", "index", "score"]]
    lines += [[str(r), str(i), repr(s)] for r, (i, s) in enumerate(hits)]
    text = "\n".join(",".join(row) for row in lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command("cluster")
@click.option("--images", required=True, type=click.Path())
@click.option("--texts", type=click.Path(), default=None,
              help="With --texts, cluster a Schur part instead of the plain kernel.")
@click.option("--manifest", type=click.Path(), default=None)
@click.option("-m", "--clusters", "m", type=int, required=True, help="Cluster count.")
@click.option("--which", type=click.Choice(["model", "text"]), default="model",
              show_default=True, help="Which Schur part to cluster (needs --texts).")
@click.option("--center", is_flag=True, help="Double-center the kernel matrix first.")
@click.option("--out", required=True, type=click.Path(), help="Assignment JSON path.")
@kernel_options
@guarded
def cmd_cluster(images, texts, manifest, m, which, center, out,
                kernel, sigma, rff_dim, seed, rel_cutoff, l2_normalize):
    """Kernel-PCA clustering, optionally on the prompt-removed part."""
    cfg = _make_config(kernel, sigma, rff_dim, seed, l2_normalize)
    if texts is None:
        e_i = load_matrix(images)
        phi_i, _, cfg = _featurize(e_i, e_i, cfg)
        assignment = kpca_clusters(phi_i, m, center=center)
    else:
        e_i, e_t, _ = _load_pair(images, texts, manifest)
        phi_i, phi_t, cfg = _featurize(e_i, e_t, cfg)
        assignment = schur_clusters(phi_i, phi_t, m, which=which, rel_cutoff=rel_cutoff)
    Path(out).write_text(json.dumps(assignment.to_dict(), indent=2) + "\n")
    click.echo(json.dumps({"clusters": int(assignment.m), "samples": int(assignment.n)}))


@main.command("sweep")
@click.option("--images", required=True, type=click.Path())
@click.option("--texts", required=True, type=click.Path())
@click.option("--manifest", required=True, type=click.Path(),
              help="Manifest with a group label on every record.")
@click.option("--cumulative/--per-group", default=True, show_default=True,
              help="Score the union of the first k groups, or each group alone.")
@click.option("--out", required=True, type=click.Path(), help="CSV output path.")
@kernel_options
@guarded
def cmd_sweep(images, texts, manifest, cumulative, out,
              kernel, sigma, rff_dim, seed, rel_cutoff, l2_normalize):
    """Score growing unions of groups; emits a plot-ready CSV table."""
    cfg = _make_config(kernel, sigma, rff_dim, seed, l2_normalize)
    e_i_full = load_matrix(images)
    e_t_full = load_matrix(texts)
    man = load_manifest(manifest)
    man.check_bounds(e_i_full.shape[0], e_t_full.shape[0])
    ungrouped = [r for r in man.records if r.group is None]
    if ungrouped:
        raise ValidationError(
            f"sweep requires a group on every record; "
            f"record with image_row {ungrouped[0].image_row} has none"
        )
    order = man.groups()

    # sigma resolved once, on the full image corpus, so every sweep
    # point shares one feature space
    cfg = resolve_sigma(cfg, e_i_full)

    selections = []
    if cumulative:
        for k in range(1, len(order) + 1):
            selections.append((k, set(order[:k]), ";".join(order[:k])))
    else:
        for name in order:
            selections.append((1, {name}, name))

    rows = []
    for count, included, label in selections:
        recs = [r for r in man.records if r.group in included]
        e_i = e_i_full[[r.image_row for r in recs]]
        e_t = e_t_full[[r.text_row for r in recs]]
        report = evaluate(features_for(e_i, cfg), features_for(e_t, cfg), rel_cutoff)
        rows.append([count, report.vendi, report.rke, report.scendi_i,
                     report.scendi_t, report.trace_i, label])

    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group_count", "vendi", "rke", "scendi_i", "scendi_t",
                         "trace_i", "groups"])
        for row in rows:
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:6]] + [row[6]])
    click.echo(json.dumps({"points": len(rows), "out": str(out)}))


@main.command("synth")
@click.option("--out-prefix", required=True, type=click.Path(),
              help="Writes <prefix>.img.npy, <prefix>.txt.npy, <prefix>.manifest.json.")
@click.option("--clusters", type=int, default=3, show_default=True)
@click.option("--modes", type=int, default=4, show_default=True,
              help="Model-driven modes per cluster.")
@click.option("--per-cluster", type=int, default=50, show_default=True)
@click.option("--d-raw", type=int, default=64, show_default=True)
@click.option("--noise", type=float, default=0.05, show_default=True)
@click.option("--mode-decay", type=float, default=1.0, show_default=True,
              help="Per-cluster multiplier on mode weight; <1 weakens later clusters.")
@click.option("--prompt-mode", type=click.Choice(["cluster", "generic"]),
              default="cluster", show_default=True)
@click.option("--shared-modes/--disjoint-modes", default=True, show_default=True,
              help="Reuse one mode bank across clusters or give each its own.")
@click.option("--preset", type=click.Choice(["deterministic"]), default=None,
              help="deterministic: images are exact functions of their prompts.")
@click.option("--seed", type=int, default=0, show_default=True)
@guarded
def cmd_synth(out_prefix, clusters, modes, per_cluster, d_raw, noise, mode_decay,
              prompt_mode, shared_modes, preset, seed):
    """Generate a seeded synthetic paired corpus (see recipe in docs)."""
    if preset == "deterministic":
        spec = deterministic_spec(
            n_clusters=clusters, n_per_cluster=per_cluster, d_raw=d_raw, seed=seed,
        )
    else:
        spec = SynthSpec(
            n_clusters=clusters, modes_per_cluster=modes, n_per_cluster=per_cluster,
            d_raw=d_raw, noise=noise, mode_decay=mode_decay, prompt_mode=prompt_mode,
            shared_modes=shared_modes, seed=seed,
        )
    images, texts, manifest = generate(spec)
    prefix = Path(out_prefix)
    img_path = prefix.with_name(prefix.name + ".img.npy")
    txt_path = prefix.with_name(prefix.name + ".txt.npy")
    man_path = prefix.with_name(prefix.name + ".manifest.json")
    save_matrix(images, img_path)
    save_matrix(texts, txt_path)
    manifest = PairManifest(
        records=manifest.records,
        image_matrix=img_path.name,
        text_matrix=txt_path.name,
    )
    save_manifest(manifest, man_path)
    click.echo(json.dumps({
        "rows": images.shape[0],
        "d_raw": images.shape[1],
        "images": str(img_path),
        "texts": str(txt_path),
        "manifest": str(man_path),
    }))


@main.command("synth-factorial")
@click.option("--out-prefix", required=True, type=click.Path())
@click.option("--factor-a", type=int, default=3, show_default=True,
              help="Levels of the factor absent from prompts.")
@click.option("--factor-b", type=int, default=3, show_default=True,
              help="Levels of the prompted factor.")
@click.option("--per-cell", type=int, default=20, show_default=True)
@click.option("--d-raw", type=int, default=64, show_default=True)
@click.option("--noise", type=float, default=0.02, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@guarded
def cmd_synth_factorial(out_prefix, factor_a, factor_b, per_cell, d_raw, noise, seed):
    """Two crossed factors; prompts name only factor B."""
    spec = FactorialSpec(
        n_factor_a=factor_a, n_factor_b=factor_b, n_per_cell=per_cell,
        d_raw=d_raw, noise=noise, seed=seed,
    )
    images, texts, manifest, labels = generate_factorial(spec)
    prefix = Path(out_prefix)
    img_path = prefix.with_name(prefix.name + ".img.npy")
    txt_path = prefix.with_name(prefix.name + ".txt.npy")
    man_path = prefix.with_name(prefix.name + ".manifest.json")
    labels_path = prefix.with_name(prefix.name + ".labels.json")
    save_matrix(images, img_path)
    save_matrix(texts, txt_path)
    save_manifest(
        PairManifest(records=manifest.records, image_matrix=img_path.name,
                     text_matrix=txt_path.name),
        man_path,
    )
    labels_path.write_text(json.dumps([int(v) for v in labels]) + "\n")
    click.echo(json.dumps({"rows": images.shape[0], "manifest": str(man_path)}))


if __name__ == "__main__":
    main()
