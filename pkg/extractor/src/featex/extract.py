"""Turn a directory of images into a divsum embedding file.

Pipeline: CNN penultimate-layer features (VGG-16 fc7, 4096-d), PCA fitted on
the extraction batch, unit-norm rows. Ids are paths relative to the input
directory; output row order is sorted id. The backbone name and a sha256 over
its weights go into the CSV comment header so runs are attributable to exact
weights.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from divsum.core import FeatureVector
from divsum.fileio import write_embeddings_csv

# Seeded initialization used when no pretrained checkpoint is cached locally;
# features from a fixed random CNN are still a deterministic embedding.
FEATEX_SEED = 20260823

IMAGE_SIZE = 224
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp", ".tiff"}

# ImageNet channel statistics expected by the torchvision VGG family.
_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


class ExtractionError(ValueError):
    """Raised when the input directory yields no usable images."""


@dataclass(frozen=True)
class Backbone:
    """A feature model plus the provenance recorded in output headers."""

    name: str
    weights_sha256: str
    model: torch.nn.Module


def _weights_hash(model: torch.nn.Module) -> str:
    h = hashlib.sha256()
    state = model.state_dict()
    for key in sorted(state):
        h.update(key.encode("utf-8"))
        h.update(state[key].detach().cpu().numpy().tobytes())
    return h.hexdigest()


def load_backbone() -> Backbone:
    """VGG-16 truncated after fc7 (4096-d penultimate layer).

    Uses the pretrained ImageNet checkpoint when it is already in the local
    torch hub cache; otherwise falls back to a deterministically seeded
    initialization. No network access is attempted either way.
    """
    from torchvision.models import VGG16_Weights, vgg16

    weights = VGG16_Weights.IMAGENET1K_V1
    cached = Path(torch.hub.get_dir()) / "checkpoints" / Path(weights.url).name
    if cached.is_file():
        model = vgg16(weights=weights)
        name = "vgg16-imagenet1k-v1"
    else:
        torch.manual_seed(FEATEX_SEED)
        model = vgg16(weights=None)
        name = f"vgg16-seeded-{FEATEX_SEED}"
    # drop dropout + final classification layer: keep through fc7 ReLU
    model.classifier = torch.nn.Sequential(*list(model.classifier)[:5])
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return Backbone(name=name, weights_sha256=_weights_hash(model), model=model)


def list_images(images_dir: Path) -> list[str]:
    """Relative paths of candidate image files, sorted."""
    return sorted(
        str(p.relative_to(images_dir)).replace("\\", "/")
        for p in images_dir.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def _load_image(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        rgb = im.convert("RGB").resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - _MEAN) / _STD
    return arr.transpose(2, 0, 1)


def raw_features(
    backbone: Backbone, images_dir: Path, ids: list[str], batch_size: int = 16
) -> tuple[np.ndarray, list[str], list[dict]]:
    """CNN features for every readable image, plus the skip manifest."""
    kept_ids: list[str] = []
    skipped: list[dict] = []
    tensors: list[np.ndarray] = []
    for rel in ids:
        try:
            tensors.append(_load_image(images_dir / rel))
            kept_ids.append(rel)
        except (OSError, UnidentifiedImageError, ValueError) as exc:
            warnings.warn(f"skipping unreadable image {rel!r}: {exc}", stacklevel=2)
            skipped.append({"id": rel, "reason": str(exc)})
    if not kept_ids:
        raise ExtractionError(f"no readable images under {images_dir}")
    chunks = []
    with torch.no_grad():
        for start in range(0, len(tensors), batch_size):
            batch = torch.from_numpy(np.stack(tensors[start : start + batch_size]))
            chunks.append(backbone.model(batch).numpy().astype(np.float64))
    return np.concatenate(chunks), kept_ids, skipped


def fit_pca(feats: np.ndarray, pca_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and (pca_dim, d) component matrix fitted on the batch.

    When pca_dim exceeds the batch rank, the basis is completed with a seeded
    orthonormal complement; coordinates there are 0 after centering, so the
    output dimension is still exactly pca_dim.
    """
    n, d = feats.shape
    if not 0 < pca_dim < d:
        raise ExtractionError(f"pca_dim must be in (0, {d}), got {pca_dim}")
    mean = feats.mean(axis=0)
    _, _, vt = np.linalg.svd(feats - mean, full_matrices=False)
    # fix component signs so the fit does not depend on LAPACK conventions
    signs = np.sign(vt[np.arange(len(vt)), np.argmax(np.abs(vt), axis=1)])
    comps = vt * signs[:, None]
    if pca_dim > len(comps):
        rng = np.random.default_rng(FEATEX_SEED)
        extra = rng.standard_normal((d, pca_dim - len(comps)))
        extra -= comps.T @ (comps @ extra)
        comps = np.concatenate([comps, np.linalg.qr(extra)[0].T])
    return mean, comps[:pca_dim]


def extract(images_dir, out_path, pca_dim: int = 256) -> Path:
    """Embed every image under ``images_dir`` and write a divsum CSV.

    Writes the embedding file to ``out_path``, the fitted PCA mean/components
    to ``<out_path>.pca.npz``, and, when any image is skipped, a JSON manifest
    to ``<out_path>.skipped.json``. Returns ``out_path``.
    """
    images_dir = Path(images_dir)
    out_path = Path(out_path)
    if not images_dir.is_dir():
        raise ExtractionError(f"not a directory: {images_dir}")
    ids = list_images(images_dir)
    if not ids:
        raise ExtractionError(f"no images found under {images_dir}")

    backbone = load_backbone()
    feats, kept_ids, skipped = raw_features(backbone, images_dir, ids)
    mean, comps = fit_pca(feats, pca_dim)
    coords = (feats - mean) @ comps.T
    norms = np.linalg.norm(coords, axis=1, keepdims=True)
    coords = coords / np.where(norms > 0, norms, 1.0)

    items = [FeatureVector(id=i, vec=v) for i, v in zip(kept_ids, coords)]
    header = (
        f"backbone: {backbone.name}\n"
        f"weights_sha256: {backbone.weights_sha256}\n"
        f"pca_dim: {pca_dim}"
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_embeddings_csv(out_path, items, header_comment=header)
    np.savez(
        out_path.with_suffix(out_path.suffix + ".pca.npz"),
        mean=mean,
        components=comps,
    )
    if skipped:
        manifest = out_path.with_suffix(out_path.suffix + ".skipped.json")
        manifest.write_text(json.dumps(skipped, indent=2) + "\n", encoding="utf-8")
    return out_path
