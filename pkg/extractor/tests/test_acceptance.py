"""Secondary acceptance: extractor output feeds the scorer end to end."""

import json
import subprocess
import sys

import numpy as np
from click.testing import CliRunner

from scendi_extractor.cli import main


def test_extract_to_score_end_to_end(image_dir, tmp_path):
    img_dir, prompts, _ = image_dir
    runner = CliRunner()
    result = runner.invoke(main, [
        "--images", str(img_dir), "--prompts", str(prompts),
        "--encoder", "toy:48", "--out", str(tmp_path / "toyset"),
    ])
    assert result.exit_code == 0, result.output

    # outputs validate under the scorer's loaders unchanged
    from scendi.io import load_manifest, load_matrix

    images = load_matrix(tmp_path / "toyset.img.npy")
    texts = load_matrix(tmp_path / "toyset.txt.npy")
    manifest = load_manifest(tmp_path / "toyset.manifest.json")
    assert images.shape == (10, 48)
    assert texts.shape == (10, 48)
    assert len(manifest) == 10
    manifest.check_bounds(10, 10)
    assert [r.image_row for r in manifest.records] == list(range(10))
    assert [r.text_row for r in manifest.records] == list(range(10))

    # the scorer CLI consumes them without validation errors
    report_path = tmp_path / "report.json"
    proc = subprocess.run(
        [sys.executable, "-m", "scendi.cli", "score",
         "--images", str(tmp_path / "toyset.img.npy"),
         "--texts", str(tmp_path / "toyset.txt.npy"),
         "--manifest", str(tmp_path / "toyset.manifest.json"),
         "--out", str(report_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    assert report["schema"] == "scendi-report/1"
    scores = report["scores"]
    assert scores["vendi"] >= 1.0
    assert scores["scendi_i"] >= 1.0
    assert abs(report["traces"]["trace_i"] + report["traces"]["trace_t"] - 1.0) <= 1e-8
    print("[PASS] extractor output scored end-to-end on a 10-image toy set")


def test_row_alignment_survives_shuffle(image_dir, tmp_path):
    img_dir, prompts, names = image_dir
    prompt_list = prompts.read_text().splitlines()
    order = [7, 2, 9, 0, 5, 4, 8, 1, 6, 3]

    listing = tmp_path / "shuffled.txt"
    listing.write_text("\n".join(str(img_dir / names[i]) for i in order) + "\n")
    shuffled_prompts = tmp_path / "shuffled_prompts.txt"
    shuffled_prompts.write_text("\n".join(prompt_list[i] for i in order) + "\n")

    runner = CliRunner()
    for tag, imgs, pr in (
        ("fwd", str(img_dir), str(prompts)),
        ("shuf", str(listing), str(shuffled_prompts)),
    ):
        result = runner.invoke(main, [
            "--images", imgs, "--prompts", pr,
            "--encoder", "toy:48", "--out", str(tmp_path / tag),
        ])
        assert result.exit_code == 0, result.output

    fwd = np.load(tmp_path / "fwd.img.npy")
    shuf = np.load(tmp_path / "shuf.img.npy")
    assert np.array_equal(shuf, fwd[order])
    fwd_t = np.load(tmp_path / "fwd.txt.npy")
    shuf_t = np.load(tmp_path / "shuf.txt.npy")
    assert np.array_equal(shuf_t, fwd_t[order])
