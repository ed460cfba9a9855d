"""Projector/predictor heads and the online/momentum parameter pairing."""

from __future__ import annotations

import copy

import torch
from torch import nn

from ..backbones.ema import ema_update_module


class ProjectionHead(nn.Module):
    """2-layer MLP: Linear -> LayerNorm -> ReLU -> Linear."""

    def __init__(self, in_dim: int, out_dim: int = 128, hidden_mult: int = 4):
        super().__init__()
        hidden = in_dim * hidden_mult
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden),
            nn.LayerNorm(hidden),
            nn.ReLU(inplace=True),
            nn.Linear(hidden, out_dim),
        )
        self.out_dim = out_dim

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class ContrastState(nn.Module):
    """Online encoder/projector/predictor plus momentum encoder/projector.

    The momentum branch mirrors the online branch's shapes, starts as an
    exact copy, never receives gradients, and is advanced by EMA.
    """

    def __init__(self, encoder: nn.Module, feature_dim: int,
                 proj_dim: int = 128, hidden_mult: int = 4,
                 decay: float = 0.996, temperature: float = 0.1):
        super().__init__()
        if not temperature > 0:
            raise ValueError(f"temperature must be positive, got {temperature}")
        if not 0.0 <= decay <= 1.0:
            raise ValueError(f"ema decay must lie in [0, 1], got {decay}")
        self.online_encoder = encoder
        self.online_projector = ProjectionHead(feature_dim, proj_dim, hidden_mult)
        self.online_predictor = ProjectionHead(proj_dim, proj_dim, hidden_mult)
        self.momentum_encoder = copy.deepcopy(encoder)
        self.momentum_projector = copy.deepcopy(self.online_projector)
        for p in self.momentum_encoder.parameters():
            p.requires_grad_(False)
        for p in self.momentum_projector.parameters():
            p.requires_grad_(False)
        self.decay = decay
        self.temperature = temperature

    @torch.no_grad()
    def momentum_update(self, decay: float = None) -> None:
        d = self.decay if decay is None else decay
        ema_update_module(self.online_encoder, self.momentum_encoder, d)
        ema_update_module(self.online_projector, self.momentum_projector, d)

    def trainable_parameters(self):
        yield from self.online_encoder.parameters()
        yield from self.online_projector.parameters()
        yield from self.online_predictor.parameters()
