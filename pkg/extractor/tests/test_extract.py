import json

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from scendi_extractor.cli import main
from scendi_extractor.encoders import EncoderLoadError, load_encoder
from scendi_extractor.extract import ExtractJob, UndecodableImageError, extract


def make_images(tmp_path, count, side=20):
    rng = np.random.default_rng(7)
    paths = []
    for i in range(count):
        pixels = rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8)
        path = tmp_path / f"im{i}.png"
        Image.fromarray(pixels).save(path)
        paths.append(str(path))
    return paths


class TestEncoders:
    def test_toy_dims(self):
        enc = load_encoder("toy:32")
        assert enc.dim == 32
        texts = enc.encode_texts(["a cat", "a dog"])
        assert texts.shape == (2, 32)
        assert texts.dtype == np.float32

    def test_toy_text_determinism(self):
        a = load_encoder("toy:16").encode_texts(["same prompt"])
        b = load_encoder("toy:16").encode_texts(["same prompt"])
        assert np.array_equal(a, b)

    def test_toy_distinct_prompts_differ(self):
        enc = load_encoder("toy:64")
        out = enc.encode_texts(["a red apple", "an old locomotive"])
        assert not np.allclose(out[0], out[1])

    def test_unknown_scheme_aborts(self):
        with pytest.raises(EncoderLoadError, match="unknown encoder scheme"):
            load_encoder("resnet:50")

    def test_clip_without_weights_aborts(self):
        with pytest.raises(EncoderLoadError):
            load_encoder("clip:no-such-org/no-such-model")


class TestExtract:
    def test_two_pairs_shapes_and_manifest(self, tmp_path):
        paths = make_images(tmp_path, 2)
        job = ExtractJob(
            image_paths=paths,
            prompts=["first", "second"],
            encoder="toy:24",
            out_prefix=str(tmp_path / "out"),
        )
        img_path, txt_path, man_path = extract(job)
        images = np.load(img_path)
        texts = np.load(txt_path)
        assert images.shape == (2, 24)
        assert texts.shape == (2, 24)
        assert images.dtype == np.float32
        manifest = json.loads(man_path.read_text())
        assert [r["image_row"] for r in manifest["records"]] == [0, 1]
        assert manifest["records"][0]["prompt_text"] == "first"

    def test_duplicated_image_identical_rows(self, tmp_path):
        paths = make_images(tmp_path, 1)
        job = ExtractJob(
            image_paths=paths * 2,
            prompts=["one", "two"],
            encoder="toy:24",
            out_prefix=str(tmp_path / "dup"),
        )
        img_path, _, _ = extract(job)
        images = np.load(img_path)
        assert np.array_equal(images[0], images[1])

    def test_row_alignment_under_shuffle(self, tmp_path):
        paths = make_images(tmp_path, 5)
        prompts = [f"p{i}" for i in range(5)]
        a = extract(ExtractJob(paths, prompts, encoder="toy:24",
                               out_prefix=str(tmp_path / "fwd")))
        order = [3, 0, 4, 1, 2]
        b = extract(ExtractJob([paths[i] for i in order],
                               [prompts[i] for i in order], encoder="toy:24",
                               out_prefix=str(tmp_path / "shuf")))
        fwd_img, shuf_img = np.load(a[0]), np.load(b[0])
        fwd_txt, shuf_txt = np.load(a[1]), np.load(b[1])
        assert np.array_equal(shuf_img, fwd_img[order])
        assert np.array_equal(shuf_txt, fwd_txt[order])
        man = json.loads(b[2].read_text())
        assert [r["prompt_text"] for r in man["records"]] == [prompts[i] for i in order]

    def test_undecodable_abort(self, tmp_path):
        paths = make_images(tmp_path, 1)
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"this is not an image")
        with pytest.raises(UndecodableImageError, match="bad.png"):
            extract(ExtractJob(paths + [str(bad)], ["a", "b"], encoder="toy:24",
                               out_prefix=str(tmp_path / "abort")))

    def test_undecodable_skip_keeps_alignment(self, tmp_path, capsys):
        paths = make_images(tmp_path, 2)
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"junk")
        job = ExtractJob(
            [paths[0], str(bad), paths[1]], ["a", "b", "c"],
            encoder="toy:24", out_prefix=str(tmp_path / "skip"), on_error="skip",
        )
        img_path, _, man_path = extract(job)
        assert np.load(img_path).shape[0] == 2
        records = json.loads(man_path.read_text())["records"]
        assert [r["prompt_text"] for r in records] == ["a", "c"]
        assert "skipping undecodable image" in capsys.readouterr().err
        config = json.loads((tmp_path / "skip.config.json").read_text())
        assert config["skipped_images"] == [str(bad)]

    def test_misaligned_lists_rejected(self, tmp_path):
        paths = make_images(tmp_path, 2)
        with pytest.raises(ValueError, match="aligned"):
            ExtractJob(paths, ["only one"], out_prefix=str(tmp_path / "x"))

    def test_config_sidecar(self, tmp_path):
        paths = make_images(tmp_path, 2)
        extract(ExtractJob(paths, ["a", "b"], encoder="toy:24",
                           out_prefix=str(tmp_path / "cfg")))
        config = json.loads((tmp_path / "cfg.config.json").read_text())
        assert config["encoder"] == "toy:24"
        assert config["embedding_dim"] == 24
        assert "preprocessing" in config

    def test_batching_matches_single_batch(self, tmp_path):
        paths = make_images(tmp_path, 5)
        prompts = [f"p{i}" for i in range(5)]
        big = extract(ExtractJob(paths, prompts, encoder="toy:24", batch_size=16,
                                 out_prefix=str(tmp_path / "big")))
        small = extract(ExtractJob(paths, prompts, encoder="toy:24", batch_size=2,
                                   out_prefix=str(tmp_path / "small")))
        assert np.array_equal(np.load(big[0]), np.load(small[0]))
        assert np.array_equal(np.load(big[1]), np.load(small[1]))


class TestCli:
    def test_directory_input(self, image_dir, tmp_path):
        img_dir, prompts, _ = image_dir
        runner = CliRunner()
        result = runner.invoke(main, [
            "--images", str(img_dir), "--prompts", str(prompts),
            "--encoder", "toy:32", "--out", str(tmp_path / "run"),
        ])
        assert result.exit_code == 0, result.output
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert summary["rows"] == 10
        assert np.load(tmp_path / "run.img.npy").shape == (10, 32)

    def test_list_file_input(self, tmp_path):
        paths = make_images(tmp_path, 3)
        listing = tmp_path / "list.txt"
        listing.write_text("\n".join(paths) + "\n")
        prompts = tmp_path / "p.txt"
        prompts.write_text("a\nb\nc\n")
        runner = CliRunner()
        result = runner.invoke(main, [
            "--images", str(listing), "--prompts", str(prompts),
            "--encoder", "toy:16", "--out", str(tmp_path / "listed"),
        ])
        assert result.exit_code == 0, result.output

    def test_bad_encoder_exits_3(self, image_dir, tmp_path):
        img_dir, prompts, _ = image_dir
        runner = CliRunner()
        result = runner.invoke(main, [
            "--images", str(img_dir), "--prompts", str(prompts),
            "--encoder", "bogus:1", "--out", str(tmp_path / "x"),
        ])
        assert result.exit_code == 3

    def test_count_mismatch_exits_2(self, image_dir, tmp_path):
        img_dir, _, _ = image_dir
        short = tmp_path / "short.txt"
        short.write_text("only one prompt\n")
        runner = CliRunner()
        result = runner.invoke(main, [
            "--images", str(img_dir), "--prompts", str(short),
            "--out", str(tmp_path / "x"),
        ])
        assert result.exit_code == 2
