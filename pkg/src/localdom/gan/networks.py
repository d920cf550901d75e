"""Small convolutional backbones for patch translation.

Two generator families are built in: a residual encoder-decoder (default)
and a gated-convolution variant suited to fill-in style edits. Both are
fully convolutional, output clamp(x + residual, 0, 1), and start as the
identity because the final convolution is zero-initialized.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

BACKBONES = ("residual", "gated")


class GatedConv2d(nn.Module):
    """Convolution whose features are modulated by a learned sigmoid gate."""

    def __init__(self, cin, cout, stride=1):
        super().__init__()
        self.conv = nn.Conv2d(cin, cout * 2, 3, stride=stride, padding=1)
        self.cout = cout

    def forward(self, x):
        feat, gate = torch.split(self.conv(x), self.cout, dim=1)
        return feat * torch.sigmoid(gate)


class ResidualBlock(nn.Module):
    def __init__(self, ch):
        super().__init__()
        self.c1 = nn.Conv2d(ch, ch, 3, padding=1)
        self.c2 = nn.Conv2d(ch, ch, 3, padding=1)

    def forward(self, x):
        h = F.leaky_relu(self.c1(x), 0.2)
        return x + self.c2(h)


class Translator(nn.Module):
    """Encoder-decoder that predicts a bounded residual on top of the input.

    backbone "residual" uses plain convolutions; "gated" swaps in gated
    convolutions. The decoder upsamples back to the exact input size so odd
    image dimensions survive the round trip.
    """

    def __init__(self, channels: int = 3, base: int = 8, backbone: str = "residual"):
        super().__init__()
        if backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {backbone!r}")
        self.backbone = backbone
        self.channels = channels
        self.base = base
        conv = GatedConv2d if backbone == "gated" else self._plain
        self.enc1 = conv(channels, base)
        self.enc2 = conv(base, base * 2, stride=2)
        self.mid = ResidualBlock(base * 2)
        self.dec1 = conv(base * 2, base)
        self.out = nn.Conv2d(base, channels, 3, padding=1)
        # identity at initialization: zero residual
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    @staticmethod
    def _plain(cin, cout, stride=1):
        return nn.Conv2d(cin, cout, 3, stride=stride, padding=1)

    def forward(self, x):
        act = (lambda t: t) if self.backbone == "gated" else (
            lambda t: F.leaky_relu(t, 0.2)
        )
        h = act(self.enc1(x))
        h = act(self.enc2(h))
        h = self.mid(h)
        h = F.interpolate(h, size=x.shape[-2:], mode="nearest")
        h = act(self.dec1(h))
        return torch.clamp(x + self.out(h), 0.0, 1.0)


class PatchCritic(nn.Module):
    """Convolutional critic producing a score map over patch regions."""

    def __init__(self, channels: int = 3, base: int = 8):
        super().__init__()
        self.c1 = nn.Conv2d(channels, base, 3, stride=2, padding=1)
        self.c2 = nn.Conv2d(base, base * 2, 3, stride=2, padding=1)
        self.c3 = nn.Conv2d(base * 2, 1, 3, padding=1)

    def forward(self, x):
        h = F.leaky_relu(self.c1(x), 0.2)
        h = F.leaky_relu(self.c2(h), 0.2)
        return self.c3(h)


def build_generator(channels: int, backbone: str, base: int = 8) -> Translator:
    return Translator(channels=channels, base=base, backbone=backbone)


def parameter_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
