"""A small residual CNN with named feature taps.

Stand-in for a large residual network at desk scale: stem (conv + maxpool,
overall stride 4) followed by residual stages at strides 8 / 16, with the
last stage keeping stride 16 so the final pre-pooling map stays 4x4 on a
64-pixel input (a 2x2 map leaves mask pooling almost no spatial support).
Tap names follow the maxpool/block1..3 scheme; "maxpool" is accepted as an
alias for the stem tap so large-network configs read identically.
"""

from __future__ import annotations

import torch
from torch import nn

TAP_ALIASES = {"maxpool": "stem"}


def _group_norm(channels: int, max_groups: int = 8) -> nn.GroupNorm:
    groups = min(max_groups, channels)
    while channels % groups:
        groups -= 1
    return nn.GroupNorm(groups, channels)


class ResidualBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1, bias=False)
        self.norm1 = _group_norm(out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1, bias=False)
        self.norm2 = _group_norm(out_ch)
        self.act = nn.ReLU(inplace=True)
        if stride != 1 or in_ch != out_ch:
            self.skip = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False),
                _group_norm(out_ch),
            )
        else:
            self.skip = nn.Identity()

    def forward(self, x):
        out = self.act(self.norm1(self.conv1(x)))
        out = self.norm2(self.conv2(out))
        return self.act(out + self.skip(x))


class TinyCNN(nn.Module):
    """4-stage CNN: taps ``stem`` (stride 4) and ``block1..3`` (8/16/16)."""

    TAP_NAMES = ("stem", "block1", "block2", "block3")
    TAP_ALIASES = TAP_ALIASES

    def __init__(self, widths=(16, 32, 64, 128), blocks_per_stage: int = 1):
        super().__init__()
        if len(widths) != 4:
            raise ValueError(f"expected 4 stage widths, got {widths}")
        self.widths = tuple(int(w) for w in widths)
        self.stem = nn.Sequential(
            nn.Conv2d(3, self.widths[0], 3, stride=2, padding=1, bias=False),
            _group_norm(self.widths[0]),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(3, stride=2, padding=1),
        )
        stages = []
        in_ch = self.widths[0]
        for w, stride in zip(self.widths[1:], (2, 2, 1)):
            blocks = [ResidualBlock(in_ch, w, stride=stride)]
            blocks += [ResidualBlock(w, w) for _ in range(blocks_per_stage - 1)]
            stages.append(nn.Sequential(*blocks))
            in_ch = w
        self.stage1, self.stage2, self.stage3 = stages

    TAP_STRIDES = {"stem": 4, "block1": 8, "block2": 16, "block3": 16, "final": 16}

    @property
    def feature_dim(self) -> int:
        return self.widths[-1]

    @property
    def stride(self) -> int:
        return 16

    def feature_grid(self, side: int) -> int:
        return max(1, side // self.stride)

    def tap_dim(self, tap: str = "final") -> int:
        tap = TAP_ALIASES.get(tap, tap)
        if tap in ("final", "block3"):
            return self.widths[-1]
        return dict(zip(self.TAP_NAMES, self.widths))[tap]

    def tap_grid(self, tap: str, side: int) -> int:
        tap = TAP_ALIASES.get(tap, tap)
        return max(1, side // self.TAP_STRIDES[tap])

    def forward_taps(self, x: torch.Tensor):
        """Returns (final map [B,C,h,w], all taps, cls_token=None)."""
        taps = {}
        out = self.stem(x)
        taps["stem"] = out
        out = self.stage1(out)
        taps["block1"] = out
        out = self.stage2(out)
        taps["block2"] = out
        out = self.stage3(out)
        taps["block3"] = out
        return out, taps, None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        final, _, _ = self.forward_taps(x)
        return final

    def global_features(self, x: torch.Tensor) -> torch.Tensor:
        """Spatially averaged pre-pooling features, one vector per image."""
        return self.forward(x).mean(dim=(2, 3))
