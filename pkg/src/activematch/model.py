"""Encoder with a projection head (contrastive representation) and a class head."""

from __future__ import annotations

import csv

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

CHECKPOINT_VERSION = 1


class NonFiniteLossError(RuntimeError):
    pass


class EncoderNet(nn.Module):
    """Small configurable backbone with two heads.

    ``arch`` selects the backbone: "conv4" (conv-bn-relu-pool x4) for image
    work, "conv2" / "mlp" for fast desk-scale experiments.  The projection
    head output is L2-normalized so cosine similarity is a plain dot product.
    """

    def __init__(
        self,
        image_shape: tuple[int, int, int],
        num_classes: int,
        arch: str = "conv4",
        proj_dim: int = 128,
        hidden_dim: int = 128,
    ):
        super().__init__()
        h, w, c = image_shape
        self.image_shape = tuple(image_shape)
        self.num_classes = num_classes
        self.arch = arch
        self.proj_dim = proj_dim
        self.hidden_dim = hidden_dim

        if arch in ("conv4", "conv2"):
            channels = [32, 64, 128, 128] if arch == "conv4" else [32, 64]
            blocks = []
            in_ch = c
            for out_ch in channels:
                blocks += [
                    nn.Conv2d(in_ch, out_ch, 3, padding=1),
                    nn.BatchNorm2d(out_ch),
                    nn.ReLU(inplace=True),
                    nn.MaxPool2d(2),
                ]
                in_ch = out_ch
            self.backbone = nn.Sequential(*blocks, nn.AdaptiveAvgPool2d(1), nn.Flatten())
            feat_dim = channels[-1]
        elif arch == "mlp":
            feat_dim = hidden_dim
            self.backbone = nn.Sequential(
                nn.Flatten(),
                nn.Linear(h * w * c, 256),
                nn.ReLU(inplace=True),
                nn.Linear(256, feat_dim),
                nn.ReLU(inplace=True),
            )
        else:
            raise ValueError(f"unknown arch {arch!r}")

        self.projection = nn.Sequential(
            nn.Linear(feat_dim, hidden_dim),
            nn.ReLU(inplace=True),
            nn.Linear(hidden_dim, proj_dim),
        )
        self.classifier = nn.Linear(feat_dim, num_classes)
        self._momentum_buffers: dict[str, torch.Tensor] = {}

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Returns (L2-normalized representations, class logits)."""
        feats = self.backbone(x)
        reps = F.normalize(self.projection(feats), dim=1, eps=1e-12)
        logits = self.classifier(feats)
        return reps, logits

    def arch_descriptor(self) -> dict:
        return {
            "image_shape": list(self.image_shape),
            "num_classes": self.num_classes,
            "arch": self.arch,
            "proj_dim": self.proj_dim,
            "hidden_dim": self.hidden_dim,
        }


def images_to_tensor(images: np.ndarray, device: str = "cpu") -> torch.Tensor:
    """(N, H, W, C) float array -> (N, C, H, W) float32 tensor."""
    arr = np.ascontiguousarray(np.asarray(images, dtype=np.float32).transpose(0, 3, 1, 2))
    return torch.from_numpy(arr).to(device)


@torch.no_grad()
def forward(
    net: EncoderNet, batch: np.ndarray, mode: str = "eval"
) -> tuple[np.ndarray, np.ndarray]:
    """Inference pass returning (representations, softmax probabilities)."""
    if tuple(batch.shape[1:]) != net.image_shape:
        raise ValueError(f"batch shape {batch.shape[1:]} != expected {net.image_shape}")
    was_training = net.training
    net.train(mode == "train")
    reps, logits = net(images_to_tensor(batch))
    net.train(was_training)
    return reps.numpy(), torch.softmax(logits, dim=1).numpy()


def backward_and_step(
    net: EncoderNet,
    loss: torch.Tensor,
    lr: float,
    momentum: float = 0.9,
    weight_decay: float = 5e-4,
) -> None:
    """One SGD step with momentum and decoupled weight decay.

    Aborts with NonFiniteLossError if the loss or any gradient is non-finite.
    """
    if not torch.isfinite(loss):
        raise NonFiniteLossError(f"non-finite loss {loss.item()}")
    net.zero_grad(set_to_none=True)
    loss.backward()
    with torch.no_grad():
        for name, p in net.named_parameters():
            if p.grad is None:
                continue
            if not torch.isfinite(p.grad).all():
                raise NonFiniteLossError(f"non-finite gradient in parameter {name}")
            buf = net._momentum_buffers.get(name)
            if buf is None:
                buf = torch.zeros_like(p)
                net._momentum_buffers[name] = buf
            buf.mul_(momentum).add_(p.grad)
            p.add_(buf, alpha=-lr)
            if weight_decay:
                p.add_(p, alpha=-lr * weight_decay)


def export_embeddings(net: EncoderNet, ds, out_path: str, batch_size: int = 512) -> None:
    """Write one CSV row per image: index, hidden label, projection vector."""
    try:
        with open(out_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["index", "label"] + [f"e{i}" for i in range(net.proj_dim)])
            for start in range(0, len(ds), batch_size):
                batch = ds.images[start : start + batch_size]
                reps, _ = forward(net, batch, mode="eval")
                for offset, rep in enumerate(reps):
                    idx = start + offset
                    writer.writerow([idx, int(ds.labels[idx])] + [f"{v:.8g}" for v in rep])
    except OSError as e:
        raise RuntimeError(f"embedding export to {out_path} failed: {e}") from e


def save_checkpoint(net: EncoderNet, path: str, step: int = 0, extra: dict | None = None) -> None:
    torch.save(
        {
            "version": CHECKPOINT_VERSION,
            "arch": net.arch_descriptor(),
            "state_dict": net.state_dict(),
            "momentum_buffers": net._momentum_buffers,
            "step": step,
            "extra": extra or {},
        },
        path,
    )


def load_checkpoint(path: str) -> tuple[EncoderNet, dict]:
    blob = torch.load(path, weights_only=False)
    if blob.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {blob.get('version')}")
    arch = blob["arch"]
    net = EncoderNet(
        tuple(arch["image_shape"]),
        arch["num_classes"],
        arch=arch["arch"],
        proj_dim=arch["proj_dim"],
        hidden_dim=arch["hidden_dim"],
    )
    net.load_state_dict(blob["state_dict"])
    net._momentum_buffers = blob.get("momentum_buffers", {})
    return net, blob
