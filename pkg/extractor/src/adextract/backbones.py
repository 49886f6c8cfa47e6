"""Backbone registry: block-level stages of torchvision classifiers.

Each backbone is exposed as an ordered list of stages; the feature level
named ``level_NN`` is the activation at the end of stage NN, average-pooled
over its spatial dimensions. The EfficientNet family contributes one level
per child of the ``features`` trunk (nine for B0, channel widths
32/16/24/40/80/112/192/320/1280); ResNets contribute five: the stem and
the four residual layers.
"""

from __future__ import annotations

import torch
from torch import nn
from torchvision import models

from .errors import ExtractError

_EFFICIENTNETS = {f"efficientnet-b{i}": f"efficientnet_b{i}" for i in range(8)}
_RESNETS = {"resnet-18": "resnet18", "resnet-34": "resnet34", "resnet-50": "resnet50"}

BACKBONES = tuple(sorted(_EFFICIENTNETS)) + tuple(sorted(_RESNETS))


def _build(name: str, weights: str) -> nn.Module:
    attr = _EFFICIENTNETS.get(name) or _RESNETS.get(name)
    if attr is None:
        raise ExtractError(f"unknown backbone '{name}' (expected one of {BACKBONES})")
    factory = getattr(models, attr)
    if weights == "random":
        return factory(weights=None)
    if weights != "pretrained":
        raise ExtractError(f"weights must be 'pretrained' or 'random', got '{weights}'")
    try:
        return factory(weights="DEFAULT")
    except Exception as exc:  # weight download needs network access
        raise ExtractError(
            f"cannot obtain pretrained weights for {name} ({exc}); "
            "pass --weights random for an untrained backbone"
        ) from exc


def _stages(name: str, model: nn.Module) -> list[nn.Module]:
    if name in _EFFICIENTNETS:
        return list(model.features)
    stem = nn.Sequential(model.conv1, model.bn1, model.relu, model.maxpool)
    return [stem, model.layer1, model.layer2, model.layer3, model.layer4]


class Backbone:
    """A frozen feature trunk evaluated stage by stage."""

    def __init__(self, name: str, weights: str = "pretrained"):
        model = _build(name, weights)
        model.eval()
        for p in model.parameters():
            p.requires_grad_(False)
        self.name = name
        self.stages = _stages(name, model)
        self.level_names = [f"level_{i:02d}" for i in range(len(self.stages))]

    @torch.no_grad()
    def pooled_levels(self, batch: torch.Tensor) -> dict[str, torch.Tensor]:
        """Average-pooled activation after every stage, keyed by level name."""
        if batch.ndim != 4 or batch.shape[1] != 3:
            raise ExtractError(f"expected an N x 3 x H x W batch, got {tuple(batch.shape)}")
        out = {}
        x = batch
        for level, stage in zip(self.level_names, self.stages):
            x = stage(x)
            out[level] = x.mean(dim=(2, 3))
        return out

    def level_dims(self, resolution: int) -> dict[str, int]:
        """Channel count per level, measured with a dry forward pass."""
        probe = torch.zeros(1, 3, resolution, resolution)
        return {name: int(v.shape[1]) for name, v in self.pooled_levels(probe).items()}
