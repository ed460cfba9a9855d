"""A small vision transformer whose attention layers expose their key
projections, for key-feature part discovery."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn


class Attention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        if dim % heads:
            raise ValueError(f"dim {dim} not divisible by heads {heads}")
        self.heads = heads
        self.scale = (dim // heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x):
        """Returns (output tokens, per-token key projections [B, N, dim])."""
        b, n, d = x.shape
        qkv = self.qkv(x).reshape(b, n, 3, self.heads, d // self.heads)
        q, k, v = qkv.permute(2, 0, 3, 1, 4)
        attn = (q @ k.transpose(-2, -1)) * self.scale
        attn = attn.softmax(dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, n, d)
        keys = k.transpose(1, 2).reshape(b, n, d)
        return self.proj(out), keys


class Block(nn.Module):
    def __init__(self, dim: int, heads: int, mlp_ratio: int = 4):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = Attention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, dim * mlp_ratio),
            nn.GELU(),
            nn.Linear(dim * mlp_ratio, dim),
        )

    def forward(self, x):
        attn_out, keys = self.attn(self.norm1(x))
        x = x + attn_out
        x = x + self.mlp(self.norm2(x))
        return x, keys


class TinyViT(nn.Module):
    """Patch-embedding transformer; final map = last-layer patch tokens."""

    def __init__(
        self,
        image_side: int = 64,
        patch_size: int = 8,
        dim: int = 64,
        depth: int = 3,
        heads: int = 4,
        mlp_ratio: int = 4,
        use_pos_embed: bool = True,
    ):
        super().__init__()
        if image_side % patch_size:
            raise ValueError(f"image side {image_side} not divisible by patch {patch_size}")
        self.patch_size = patch_size
        self.dim = dim
        self.depth = depth
        self.grid_side = image_side // patch_size
        self.patch_embed = nn.Conv2d(3, dim, patch_size, stride=patch_size)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, dim))
        self.use_pos_embed = use_pos_embed
        n_tokens = 1 + self.grid_side * self.grid_side
        self.pos_embed = nn.Parameter(torch.zeros(1, n_tokens, dim))
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        self.blocks = nn.ModuleList(Block(dim, heads, mlp_ratio) for _ in range(depth))
        self.norm = nn.LayerNorm(dim)

    TAP_NAMES = property(lambda self: tuple(f"block{i}" for i in range(self.depth)))

    @property
    def feature_dim(self) -> int:
        return self.dim

    @property
    def stride(self) -> int:
        return self.patch_size

    def feature_grid(self, side: int) -> int:
        return side // self.patch_size

    def tap_dim(self, tap: str = "final") -> int:
        return self.dim

    def tap_grid(self, tap: str, side: int) -> int:
        return side // self.patch_size

    def _pos_embed_for(self, grid: int) -> torch.Tensor:
        if grid == self.grid_side:
            return self.pos_embed
        # Bilinear interpolation of the patch position grid for off-size inputs.
        cls_pe = self.pos_embed[:, :1]
        patch_pe = self.pos_embed[:, 1:].reshape(1, self.grid_side, self.grid_side, self.dim)
        patch_pe = patch_pe.permute(0, 3, 1, 2)
        patch_pe = F.interpolate(patch_pe, size=(grid, grid), mode="bilinear", align_corners=False)
        patch_pe = patch_pe.permute(0, 2, 3, 1).reshape(1, grid * grid, self.dim)
        return torch.cat([cls_pe, patch_pe], dim=1)

    def forward_tokens(self, x: torch.Tensor):
        """Returns (tokens [B, 1+P, D] after the final norm, keys per block)."""
        b = x.shape[0]
        if x.shape[-1] % self.patch_size or x.shape[-2] % self.patch_size:
            raise ValueError(
                f"input side {tuple(x.shape[-2:])} not divisible by patch {self.patch_size}"
            )
        grid = x.shape[-1] // self.patch_size
        patches = self.patch_embed(x).flatten(2).transpose(1, 2)
        tokens = torch.cat([self.cls_token.expand(b, -1, -1), patches], dim=1)
        if self.use_pos_embed:
            tokens = tokens + self._pos_embed_for(grid)
        keys_per_block = []
        for block in self.blocks:
            tokens, keys = block(tokens)
            keys_per_block.append(keys)
        return self.norm(tokens), keys_per_block

    def forward_taps(self, x: torch.Tensor):
        """Returns (final map [B,D,p,p], per-block patch-token maps, cls token)."""
        b = x.shape[0]
        grid = x.shape[-1] // self.patch_size
        patches = self.patch_embed(x).flatten(2).transpose(1, 2)
        tokens = torch.cat([self.cls_token.expand(b, -1, -1), patches], dim=1)
        if self.use_pos_embed:
            tokens = tokens + self._pos_embed_for(grid)
        taps = {}
        for i, block in enumerate(self.blocks):
            tokens, _ = block(tokens)
            taps[f"block{i}"] = self._to_map(tokens[:, 1:], grid)
        tokens = self.norm(tokens)
        final = self._to_map(tokens[:, 1:], grid)
        return final, taps, tokens[:, 0]

    @staticmethod
    def _to_map(patch_tokens: torch.Tensor, grid: int) -> torch.Tensor:
        b, n, d = patch_tokens.shape
        return patch_tokens.transpose(1, 2).reshape(b, d, grid, grid)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        final, _, _ = self.forward_taps(x)
        return final

    def global_features(self, x: torch.Tensor) -> torch.Tensor:
        """Mean over the class token and all patch tokens."""
        tokens, _ = self.forward_tokens(x)
        return tokens.mean(dim=1)

    def key_maps(self, x: torch.Tensor, layer: int = -1) -> torch.Tensor:
        """Per-patch key projections of one attention layer as [B, D, p, p],
        L2-normalized per patch."""
        if not -self.depth <= layer < self.depth:
            raise ValueError(f"layer {layer} out of range for depth {self.depth}")
        grid = x.shape[-1] // self.patch_size
        _, keys_per_block = self.forward_tokens(x)
        keys = keys_per_block[layer][:, 1:]
        keys = F.normalize(keys, dim=-1, eps=0.0)
        return self._to_map(keys, grid)


def math_isqrt_grid(n_patches: int) -> int:
    side = math.isqrt(n_patches)
    if side * side != n_patches:
        raise ValueError(f"{n_patches} patch tokens do not form a square grid")
    return side
