"""Class-token distillation used alongside the mask-contrast loss in
transformer mode: cross-entropy between the student's sharpened class-token
distribution and a centered, sharper momentum-teacher distribution."""

from __future__ import annotations

import copy

import torch
import torch.nn.functional as F
from torch import nn

from ..backbones.ema import ema_update_module


class DistillHead(nn.Module):
    def __init__(self, in_dim: int, out_dim: int = 64, hidden_mult: int = 4):
        super().__init__()
        hidden = in_dim * hidden_mult
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden),
            nn.GELU(),
            nn.Linear(hidden, out_dim),
        )
        self.out_dim = out_dim

    def forward(self, x):
        return self.net(x)


class TokenDistiller(nn.Module):
    """Student/teacher heads over class tokens with a running center."""

    def __init__(self, token_dim: int, out_dim: int = 64,
                 student_temp: float = 0.1, teacher_temp: float = 0.04,
                 center_momentum: float = 0.9):
        super().__init__()
        self.student_head = DistillHead(token_dim, out_dim)
        self.teacher_head = copy.deepcopy(self.student_head)
        for p in self.teacher_head.parameters():
            p.requires_grad_(False)
        self.student_temp = student_temp
        self.teacher_temp = teacher_temp
        self.center_momentum = center_momentum
        self.register_buffer("center", torch.zeros(out_dim))

    def loss(self, student_tokens: torch.Tensor,
             teacher_tokens: torch.Tensor) -> torch.Tensor:
        """student_tokens from the online encoder, teacher_tokens from the
        momentum encoder (already detached upstream)."""
        s_logits = self.student_head(student_tokens) / self.student_temp
        with torch.no_grad():
            t_logits = self.teacher_head(teacher_tokens)
            t_probs = F.softmax((t_logits - self.center) / self.teacher_temp, dim=-1)
            self.center.mul_(self.center_momentum).add_(
                t_logits.mean(dim=0), alpha=1.0 - self.center_momentum
            )
        return -(t_probs * F.log_softmax(s_logits, dim=-1)).sum(dim=-1).mean()

    @torch.no_grad()
    def momentum_update(self, decay: float) -> None:
        ema_update_module(self.student_head, self.teacher_head, decay)
