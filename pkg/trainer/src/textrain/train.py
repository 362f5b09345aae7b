"""Training loop: SGD with momentum, class-weighted binary cross entropy."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .datasets import PatchDataset, TEXTURE
from .model import TextureNet


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.00005
    epochs: int = 100
    batch: int = 512
    seed: int = 0

    def __post_init__(self):
        if min(self.lr, self.momentum, self.batch) < 0 or self.epochs < 0:
            raise ValueError("hyperparameters must be non-negative")
        if self.lr == 0 or self.batch == 0:
            raise ValueError("lr and batch must be positive")


@dataclass
class TrainResult:
    model: TextureNet
    channel_means: np.ndarray
    log: list[dict] = field(default_factory=list)
    config: TrainConfig = field(default_factory=TrainConfig)
    class_counts: tuple[int, int] = (0, 0)

    @property
    def final_val_accuracy(self) -> float:
        return self.log[-1]["val_accuracy"] if self.log else 0.0

    def best_val_accuracy(self) -> float:
        return max((e["val_accuracy"] for e in self.log), default=0.0)

    def write_log(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for entry in self.log:
                fh.write(json.dumps(entry) + "\n")


def class_weight_ratio(dataset: PatchDataset) -> float:
    """w_texture / w_nontexture = count_nontexture / count_texture, exactly."""
    n_non, n_tex = dataset.class_counts
    if n_tex == 0 or n_non == 0:
        raise ValueError("both classes must be present")
    return n_non / n_tex


def _tensors(dataset: PatchDataset, idx: np.ndarray, means: np.ndarray):
    x = dataset.patches[idx].astype(np.float32) - means.astype(np.float32)
    x = torch.from_numpy(np.ascontiguousarray(x.transpose(0, 3, 1, 2)))
    y = torch.from_numpy((dataset.labels[idx] == TEXTURE).astype(np.float32))
    return x, y


def train(dataset: PatchDataset, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Deterministic training run; logs weighted loss and validation accuracy."""
    n_non, n_tex = dataset.class_counts
    if n_tex == 0 or n_non == 0:
        raise ValueError("single-class dataset: need texture and non-texture examples")
    if dataset.train_idx is None:
        dataset.split(seed=config.seed)

    torch.manual_seed(config.seed)
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)

    means = dataset.channel_means()
    model = TextureNet()
    optimizer = torch.optim.SGD(model.parameters(), lr=config.lr,
                                momentum=config.momentum,
                                weight_decay=config.weight_decay)
    pos_weight = torch.tensor([class_weight_ratio(dataset)], dtype=torch.float32)
    loss_fn = torch.nn.BCEWithLogitsLoss(pos_weight=pos_weight)

    x_train, y_train = _tensors(dataset, dataset.train_idx, means)
    x_val, y_val = _tensors(dataset, dataset.val_idx, means)
    rng = np.random.default_rng(config.seed)

    result = TrainResult(model=model, channel_means=means, config=config,
                         class_counts=(n_non, n_tex))
    for epoch in range(config.epochs):
        model.train()
        order = rng.permutation(len(x_train))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch):
            sel = torch.from_numpy(order[start:start + config.batch])
            optimizer.zero_grad()
            logits = model(x_train[sel])
            loss = loss_fn(logits, y_train[sel])
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(sel)
        model.eval()
        with torch.no_grad():
            val_acc = float(((model(x_val) >= 0).float() == y_val).float().mean())
        result.log.append({"epoch": epoch, "weighted_loss": epoch_loss / len(order),
                           "val_accuracy": val_acc})
    return result


def predict_probabilities(model: TextureNet, patches: np.ndarray,
                          means: np.ndarray, double: bool = True) -> np.ndarray:
    """Texture probabilities for Nx32x32x3 patches in [0, 1].

    Evaluates in float64 by default so comparisons against other engines
    are not limited by float32 accumulation order.
    """
    x = patches.astype(np.float64) - means.astype(np.float64)
    t = torch.from_numpy(np.ascontiguousarray(x.transpose(0, 3, 1, 2)))
    net = model.double() if double else model
    net.eval()
    with torch.no_grad():
        logits = net(t if double else t.float())
    probs = torch.sigmoid(logits).cpu().numpy()
    if double:
        model.float()
    return probs
