import json

import numpy as np
import pytest
from PIL import Image

from divsum.fileio import load_embeddings
from divsum.similarity import cosine_distance
from featex import ExtractionError, extract
from featex.cli import main


def write_image(path, seed):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)


@pytest.fixture(scope="module")
def images(tmp_path_factory):
    """Ten images; 'dup_a.png' and 'sub/dup_b.png' are pixel-identical."""
    root = tmp_path_factory.mktemp("imgs")
    for k in range(8):
        write_image(root / f"img_{k}.png", seed=k)
    write_image(root / "dup_a.png", seed=100)
    write_image(root / "sub" / "dup_b.png", seed=100)
    return root


@pytest.fixture(scope="module")
def extracted(images, tmp_path_factory):
    out = tmp_path_factory.mktemp("out") / "emb.csv"
    extract(images, out, pca_dim=8)
    return out


class TestRoundTrip:
    def test_loads_cleanly(self, extracted):
        ds = load_embeddings(extracted)
        assert len(ds) == 10
        assert ds.dim == 8

    def test_ids_are_sorted_relative_paths(self, images, extracted):
        ds = load_embeddings(extracted)
        expected = sorted(
            ["dup_a.png", "sub/dup_b.png"] + [f"img_{k}.png" for k in range(8)]
        )
        assert ds.ids == expected

    def test_rows_unit_norm(self, extracted):
        norms = np.linalg.norm(load_embeddings(extracted).matrix(), axis=1)
        assert np.allclose(norms, 1.0, atol=1e-9)

    def test_provenance_header(self, extracted):
        head = extracted.read_text().splitlines()[:3]
        assert all(line.startswith("#") for line in head)
        assert any("backbone:" in line for line in head)
        assert any("weights_sha256:" in line for line in head)


class TestDuplicates:
    def test_identical_images_identical_vectors(self, extracted):
        ds = load_embeddings(extracted)
        a = ds.get("dup_a.png").vec
        b = ds.get("sub/dup_b.png").vec
        assert cosine_distance(a, b) < 1e-6


class TestPcaDim:
    def test_dim_respected_exactly(self, images, tmp_path):
        out = tmp_path / "emb64.csv"
        extract(images, out, pca_dim=64)
        assert load_embeddings(out).dim == 64

    def test_components_persisted(self, images, extracted):
        pca = np.load(str(extracted) + ".pca.npz")
        assert pca["components"].shape == (8, 4096)
        assert pca["mean"].shape == (4096,)

    def test_bad_dim_rejected(self, images, tmp_path):
        with pytest.raises(ExtractionError):
            extract(images, tmp_path / "e.csv", pca_dim=0)


class TestErrors:
    def test_empty_dir(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(ExtractionError):
            extract(tmp_path / "empty", tmp_path / "e.csv")

    def test_missing_dir(self, tmp_path):
        with pytest.raises(ExtractionError):
            extract(tmp_path / "nope", tmp_path / "e.csv")

    def test_unreadable_image_skipped_with_manifest(self, tmp_path):
        root = tmp_path / "imgs"
        for k in range(3):
            write_image(root / f"ok_{k}.png", seed=k)
        (root / "broken.png").write_bytes(b"not a png")
        out = tmp_path / "emb.csv"
        with pytest.warns(UserWarning, match="broken.png"):
            extract(root, out, pca_dim=2)
        assert load_embeddings(out).ids == [f"ok_{k}.png" for k in range(3)]
        manifest = json.loads((tmp_path / "emb.csv.skipped.json").read_text())
        assert manifest[0]["id"] == "broken.png"


class TestDeterminism:
    def test_repeat_runs_byte_identical(self, images, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        extract(images, a, pca_dim=8)
        extract(images, b, pca_dim=8)
        assert a.read_bytes() == b.read_bytes()


class TestCli:
    def test_success(self, images, tmp_path, capsys):
        out = tmp_path / "cli.csv"
        assert main([str(images), str(out), "--pca-dim", "8"]) == 0
        assert out.exists()

    def test_empty_dir_exit_code(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        assert main([str(tmp_path / "empty"), str(tmp_path / "e.csv")]) == 2
