"""Backbone resolution: build a headless feature extractor for a model name.

torchvision is the primary hub; timm is used as a fallback when installed
(it covers the DeiT and tiny-ViT variants torchvision lacks). The feature
tap is always the hub's canonical "no classification head" output: the
pooled (CNN) or class-token (ViT) representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn
import torchvision.models as tvm

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

# feature dims of the commonly published rows, keyed by torchvision name
KNOWN_FEATURE_DIMS = {
    "resnet18": 512,
    "resnet34": 512,
    "resnet50": 2048,
    "resnet101": 2048,
    "resnet152": 2048,
    "vit_b_16": 768,
    "vit_b_32": 768,
    "vit_l_16": 1024,
}

# names only resolvable through timm
TIMM_ONLY_HINTS = ("deit_", "vit_tiny", "vit_small")


class UnknownBackboneError(ValueError):
    """Model name resolves through no available hub."""


@dataclass
class Backbone:
    """A ready-to-run extractor plus the metadata recorded in the file header."""

    name: str
    model: nn.Module
    feature_dim: int | None  # None until the first forward pins it
    mean: tuple[float, float, float]
    std: tuple[float, float, float]
    tag: str  # backbone_tag written to the header


def _strip_classifier(model: nn.Module, name: str) -> nn.Module:
    for attr in ("fc", "heads", "head", "classifier"):
        if hasattr(model, attr) and isinstance(getattr(model, attr), nn.Module):
            setattr(model, attr, nn.Identity())
            return model
    raise UnknownBackboneError(
        f"cannot find a classification head to remove on {name!r}"
    )


def _torchvision_backbone(name: str, pretrained: bool) -> Backbone:
    try:
        weights_enum = tvm.get_model_weights(name)
    except ValueError as exc:
        raise UnknownBackboneError(f"{name!r} is not a torchvision model") from exc

    weights = weights_enum.IMAGENET1K_V1 if pretrained else None
    mean, std = IMAGENET_MEAN, IMAGENET_STD
    if weights is not None:
        preset = weights.transforms()
        mean, std = tuple(preset.mean), tuple(preset.std)
    model = _strip_classifier(tvm.get_model(name, weights=weights), name)
    tag = f"torchvision/{name}" + ("" if pretrained else " (random init)")
    return Backbone(
        name=name,
        model=model,
        feature_dim=KNOWN_FEATURE_DIMS.get(name),
        mean=mean,
        std=std,
        tag=tag,
    )


def _timm_backbone(name: str, pretrained: bool) -> Backbone:
    try:
        import timm
    except ImportError as exc:
        raise UnknownBackboneError(
            f"{name!r} needs the timm hub, which is not installed"
        ) from exc
    try:
        model = timm.create_model(name, pretrained=pretrained, num_classes=0)
    except Exception as exc:
        raise UnknownBackboneError(f"timm cannot build {name!r}: {exc}") from exc
    cfg = model.default_cfg if hasattr(model, "default_cfg") else {}
    return Backbone(
        name=name,
        model=model,
        feature_dim=getattr(model, "num_features", None),
        mean=tuple(cfg.get("mean", IMAGENET_MEAN)),
        std=tuple(cfg.get("std", IMAGENET_STD)),
        tag=f"timm/{name}" + ("" if pretrained else " (random init)"),
    )


def resolve_backbone(name: str, pretrained: bool = True, device: str = "cpu") -> Backbone:
    """Build an eval-mode, headless feature extractor on the requested device."""
    if any(name.startswith(hint) for hint in TIMM_ONLY_HINTS):
        backbone = _timm_backbone(name, pretrained)
    else:
        try:
            backbone = _torchvision_backbone(name, pretrained)
        except UnknownBackboneError:
            backbone = _timm_backbone(name, pretrained)
    dev = torch.device(device if torch.cuda.is_available() or device == "cpu" else "cpu")
    backbone.model.eval().to(dev)
    return backbone
