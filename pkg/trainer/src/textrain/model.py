"""The classifier network and its fixed layer stack.

The architecture string and hash must match the inference engine's TEXW1
contract exactly; export refuses anything else.
"""

from __future__ import annotations

import hashlib

import torch
from torch import nn

ARCHITECTURE = (
    "conv3x3:3:32,relu,conv3x3:32:32,relu,maxpool2,"
    "conv3x3:32:64,relu,conv3x3:64:64,relu,maxpool2,"
    "flatten,fc:4096:256,relu,fc:256:1,sigmoid"
)

PATCH = 32


def architecture_hash() -> str:
    return hashlib.sha256(ARCHITECTURE.encode("ascii")).hexdigest()


class TextureNet(nn.Module):
    """VGG-style stack on a 32x32 RGB block; emits one texture logit."""

    def __init__(self):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 32, 3, padding=1), nn.ReLU(),
            nn.Conv2d(32, 32, 3, padding=1), nn.ReLU(),
            nn.MaxPool2d(2),
            nn.Conv2d(32, 64, 3, padding=1), nn.ReLU(),
            nn.Conv2d(64, 64, 3, padding=1), nn.ReLU(),
            nn.MaxPool2d(2),
        )
        self.head = nn.Sequential(
            nn.Flatten(),
            nn.Linear(64 * 8 * 8, 256), nn.ReLU(),
            nn.Linear(256, 1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x)).squeeze(-1)


def export_layers(model: TextureNet) -> list[dict]:
    """Ordered layer descriptors + tensors in the TEXW1 declaration order."""
    convs = [m for m in model.features if isinstance(m, nn.Conv2d)]
    fcs = [m for m in model.head if isinstance(m, nn.Linear)]
    if len(convs) != 4 or len(fcs) != 2:
        raise ValueError(f"unexpected layer stack: {len(convs)} convs, {len(fcs)} fcs")
    layers = []
    for i, conv in enumerate(convs):
        layers.append({"kind": "conv3x3", "module": conv})
        layers.append({"kind": "relu"})
        if i in (1, 3):
            layers.append({"kind": "maxpool2"})
    layers.append({"kind": "flatten"})
    layers.append({"kind": "fc", "module": fcs[0]})
    layers.append({"kind": "relu"})
    layers.append({"kind": "fc", "module": fcs[1]})
    layers.append({"kind": "sigmoid"})
    return layers
