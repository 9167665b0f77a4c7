"""Export pooled backbone features for an image folder to an OTS1 file.

Images are labeled by their subdirectory (torchvision ImageFolder layout),
resized to 224x224 with bilinear interpolation, normalized with the
checkpoint's published statistics, and forwarded exactly once in inference
mode. Records land in dataset order with sequential example ids.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import torch
from torch.utils.data import DataLoader
from torchvision import transforms
from torchvision.datasets import ImageFolder

from .hub import Backbone, resolve_backbone
from .writer import EmbeddingWriter

INPUT_SIZE = 224


class ExportError(RuntimeError):
    """Export job aborted (unknown backbone, unreadable data, dim mismatch)."""


@dataclass
class ExportJob:
    model: str
    data_dir: str
    out_path: str
    split: str = "train"
    batch_size: int = 64
    device: str = "cpu"
    pretrained: bool = True
    num_workers: int = 0


def _preprocessing(backbone: Backbone) -> transforms.Compose:
    return transforms.Compose(
        [
            transforms.Resize(
                (INPUT_SIZE, INPUT_SIZE),
                interpolation=transforms.InterpolationMode.BILINEAR,
            ),
            transforms.ToTensor(),
            transforms.Normalize(mean=backbone.mean, std=backbone.std),
        ]
    )


def export(job: ExportJob) -> dict:
    """Run an export job; returns a small summary dict (count, dim, classes)."""
    try:
        backbone = resolve_backbone(job.model, pretrained=job.pretrained, device=job.device)
    except (ValueError, RuntimeError) as exc:
        raise ExportError(f"cannot resolve backbone {job.model!r}: {exc}") from exc

    data_dir = Path(job.data_dir)
    if not data_dir.is_dir():
        raise ExportError(f"dataset directory {job.data_dir!r} does not exist")
    try:
        dataset = ImageFolder(str(data_dir), transform=_preprocessing(backbone))
    except (FileNotFoundError, RuntimeError) as exc:
        raise ExportError(f"cannot read image folder {job.data_dir!r}: {exc}") from exc
    if len(dataset) == 0:
        raise ExportError(f"image folder {job.data_dir!r} holds no images")

    loader = DataLoader(
        dataset,
        batch_size=job.batch_size,
        shuffle=False,  # file order must be dataset order
        num_workers=job.num_workers,
    )
    device = next(backbone.model.parameters()).device

    writer: EmbeddingWriter | None = None
    next_id = 0
    try:
        with torch.inference_mode():
            for images, labels in loader:
                feats = backbone.model(images.to(device))
                if feats.ndim != 2:
                    feats = torch.flatten(feats, start_dim=1)
                dim = feats.shape[1]
                if backbone.feature_dim is not None and dim != backbone.feature_dim:
                    raise ExportError(
                        f"{job.model!r} produced dim {dim}, expected {backbone.feature_dim}"
                    )
                if writer is None:
                    writer = EmbeddingWriter(
                        job.out_path,
                        dim=dim,
                        count=len(dataset),
                        backbone_tag=backbone.tag,
                        split_tag=job.split,
                    )
                elif dim != writer.dim:
                    raise ExportError(f"feature dim changed mid-export: {dim} vs {writer.dim}")
                ids = range(next_id, next_id + feats.shape[0])
                writer.write_batch(ids, labels.tolist(), feats.cpu().numpy())
                next_id += feats.shape[0]
        assert writer is not None
        writer.close()
    except Exception:
        if writer is not None:
            writer._fh.close()
        Path(job.out_path).unlink(missing_ok=True)  # never leave a half-written file
        raise

    return {
        "records": next_id,
        "dim": writer.dim,
        "classes": dataset.classes,
        "backbone_tag": backbone.tag,
        "out": job.out_path,
    }
