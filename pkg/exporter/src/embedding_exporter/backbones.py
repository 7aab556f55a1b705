"""Backbone registry: fixed feature extractors tapping the penultimate
pooled layer of a convolutional network.

Built-ins (torchvision, loaded lazily):

    resnet50             pretrained, 2048-dim features (the default)
    resnet18             pretrained, 512-dim features
    resnet50-untrained   seeded random weights, for offline plumbing checks
    resnet18-untrained   seeded random weights, for offline plumbing checks

Pretrained weights must be present in the local torch hub cache; the
first use on a connected machine fetches them once, after which exports
run fully offline. Every backbone runs in eval mode with gradients off,
so repeated passes over the same image are bit-identical.

``register_backbone`` adds custom extractors (any callable mapping a
preprocessed batch to a ``(batch, dim)`` float32 array).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BackboneError


@dataclass(frozen=True)
class Backbone:
    """A fixed image-to-vector feature map.

    ``preprocess`` turns one PIL image into a model input; ``embed_batch``
    turns a list of those inputs into a ``(batch, dim)`` float32 array.
    """

    name: str
    dim: int
    preprocess: Callable
    embed_batch: Callable


_REGISTRY: dict[str, Callable[[], Backbone]] = {}


def register_backbone(name: str, factory: Callable[[], Backbone],
                      *, overwrite: bool = False) -> None:
    if not overwrite and name in _REGISTRY:
        raise BackboneError(f"backbone {name!r} is already registered")
    _REGISTRY[name] = factory


def available_backbones() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def resolve_backbone(name: str) -> Backbone:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        known = ", ".join(available_backbones())
        raise BackboneError(f"unknown backbone {name!r} (available: {known})") from None
    return factory()


def _resnet_backbone(arch: str, dim: int, pretrained: bool) -> Backbone:
    import torch
    from torchvision import models

    weight_enums = {
        "resnet18": models.ResNet18_Weights.IMAGENET1K_V1,
        "resnet50": models.ResNet50_Weights.IMAGENET1K_V2,
    }
    builders = {"resnet18": models.resnet18, "resnet50": models.resnet50}
    weights = weight_enums[arch]
    # the preprocessing recipe lives on the weight enum and needs no download
    preprocess = weights.transforms()
    if pretrained:
        try:
            net = builders[arch](weights=weights)
        except Exception as exc:
            raise BackboneError(
                f"pretrained {arch} weights unavailable locally; fetch them "
                f"once on a connected machine (torch hub cache): {exc}"
            ) from exc
        name = arch
    else:
        with torch.random.fork_rng():
            torch.manual_seed(0)
            net = builders[arch](weights=None)
        name = f"{arch}-untrained"
    net.fc = torch.nn.Identity()  # tap the pooled penultimate features
    net.eval()

    def embed_batch(inputs) -> np.ndarray:
        batch = torch.stack(list(inputs))
        with torch.inference_mode():
            features = net(batch)
        return features.numpy().astype(np.float32, copy=False)

    return Backbone(name=name, dim=dim, preprocess=preprocess,
                    embed_batch=embed_batch)


register_backbone("resnet50", lambda: _resnet_backbone("resnet50", 2048, True))
register_backbone("resnet18", lambda: _resnet_backbone("resnet18", 512, True))
register_backbone("resnet50-untrained",
                  lambda: _resnet_backbone("resnet50", 2048, False))
register_backbone("resnet18-untrained",
                  lambda: _resnet_backbone("resnet18", 512, False))
