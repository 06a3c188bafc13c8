"""Motion-shape fusion: self-attention over the (T+1)-token sequence."""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn as nn

from ..errors import ContractViolationError


class SelfAttentionBlock(nn.Module):
    """Pre-LN multi-head self-attention + feed-forward, exposing the maps."""

    def __init__(self, d_model: int, n_heads: int, d_ff: int):
        super().__init__()
        if d_model % n_heads != 0:
            raise ContractViolationError("d_model must divide by n_heads")
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.norm1 = nn.LayerNorm(d_model)
        self.qkv = nn.Linear(d_model, 3 * d_model)
        self.out = nn.Linear(d_model, d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.ff = nn.Sequential(nn.Linear(d_model, d_ff), nn.ReLU(),
                                nn.Linear(d_ff, d_model))

    def forward(self, x, return_attn: bool = False):
        b, n, d = x.shape
        h = self.norm1(x)
        q, k, v = self.qkv(h).chunk(3, dim=-1)
        shape = (b, n, self.n_heads, self.d_head)
        q = q.reshape(shape).transpose(1, 2)
        k = k.reshape(shape).transpose(1, 2)
        v = v.reshape(shape).transpose(1, 2)
        attn = torch.softmax(q @ k.transpose(-2, -1) / math.sqrt(self.d_head), dim=-1)
        mixed = (attn @ v).transpose(1, 2).reshape(b, n, d)
        x = x + self.out(mixed)
        x = x + self.ff(self.norm2(x))
        if return_attn:
            return x, attn
        return x


class MotionShapeAttention(nn.Module):
    """Two-layer, four-head self-attention with learned position embeddings.

    The fused representation is read at position 0 (the motion token slot).
    """

    def __init__(self, d_model: int = 256, n_frames: int = 4, n_heads: int = 4,
                 n_layers: int = 2, d_ff: int | None = None):
        super().__init__()
        d_ff = d_ff if d_ff is not None else 4 * d_model
        self.pos_embed = nn.Parameter(torch.zeros(n_frames + 1, d_model))
        nn.init.normal_(self.pos_embed, std=0.02)
        self.blocks = nn.ModuleList(
            SelfAttentionBlock(d_model, n_heads, d_ff) for _ in range(n_layers))
        self.norm = nn.LayerNorm(d_model)
        self.d_model = d_model
        self.n_frames = n_frames

    def forward(self, tokens: torch.Tensor, pos_embed: torch.Tensor | None = None):
        """(B, T+1, d) -> fused (B, d)."""
        if tokens.shape[-1] != self.d_model:
            raise ContractViolationError(
                f"token width {tokens.shape[-1]} != attention width {self.d_model}")
        if tokens.shape[1] != self.n_frames + 1:
            raise ContractViolationError(
                f"expected {self.n_frames + 1} tokens, got {tokens.shape[1]}")
        pe = self.pos_embed if pos_embed is None else pos_embed
        x = tokens + pe[None]
        for block in self.blocks:
            x = block(x)
        return self.norm(x)[:, 0]

    def attention_maps(self, tokens: torch.Tensor):
        """Per-layer attention tensors (B, heads, T+1, T+1) for inspection."""
        x = tokens + self.pos_embed[None]
        maps = []
        for block in self.blocks:
            x, attn = block(x, return_attn=True)
            maps.append(attn)
        return maps


def fuse(z_m, tokens, attention: MotionShapeAttention):
    """Fuse one motion token with T shape tokens; returns the fused vector."""
    vecs = [np.asarray(z_m.vector if hasattr(z_m, "vector") else z_m)]
    for t in tokens:
        vecs.append(np.asarray(t.vector if hasattr(t, "vector") else t))
    widths = {v.shape[-1] for v in vecs}
    if len(widths) != 1:
        raise ContractViolationError(f"token widths differ: {sorted(widths)}")
    seq = torch.as_tensor(np.stack(vecs), dtype=torch.float32)[None]
    attention.eval()
    with torch.no_grad():
        fused = attention(seq)[0]
    return fused.numpy()
