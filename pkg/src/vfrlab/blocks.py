"""Reusable spatio-temporal network blocks.

Feature volumes are laid out channel-last, ``(T, H, W, C)`` or batched
``(B, T, H, W, C)``. Convolutions run per frame; temporal interaction
happens exclusively inside windowed attention, which restricts self-attention
to local ``(wt, wh, ww)`` windows over (time, height, width), alternating a
regular and a half-window-shifted grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange

from .errors import ConfigError, ShapeError
from .utils import ensure_batched, frames_to_channels_first, frames_to_channels_last


@dataclass(frozen=True)
class WindowSpec:
    """Geometry of an attention window: frames x height x width, plus grid shift."""

    wt: int = 2
    wh: int = 4
    ww: int = 4
    shifted: bool = False

    def __post_init__(self):
        if min(self.wt, self.wh, self.ww) < 1:
            raise ConfigError(f"window extents must be >= 1, got {self}")

    @property
    def shifts(self) -> tuple[int, int, int]:
        if not self.shifted:
            return (0, 0, 0)
        return (self.wt // 2, self.wh // 2, self.ww // 2)


def _axis_region_ids(size: int, window: int, shift: int, device) -> torch.Tensor:
    """Region labels along one axis, in shift-aligned coordinates.

    With a cyclic shift, the last window mixes tokens from the two sides of
    the wrap boundary; the three-slice labelling separates them so attention
    across the boundary can be masked out.
    """
    ids = torch.zeros(size, dtype=torch.long, device=device)
    if shift > 0:
        ids[size - window:] = 1
        ids[size - shift:] = 2
    return ids


class WindowAttention3D(nn.Module):
    """Multi-head self-attention restricted to (wt, wh, ww) windows.

    Tokens attend only within their own window; no positional terms. With a
    shifted spec the volume is cyclically shifted by half a window per axis
    and attention across wrap boundaries is masked to exactly zero. Extents
    that do not divide the window are zero-padded internally; padded tokens
    are invisible to real ones.
    """

    def __init__(self, channels: int, heads: int | None = None):
        super().__init__()
        if heads is None:
            heads = max(1, channels // 16)
        if channels % heads != 0:
            raise ConfigError(f"channels {channels} not divisible by heads {heads}")
        self.channels = channels
        self.heads = heads
        self.qkv = nn.Linear(channels, channels * 3)
        self.proj = nn.Linear(channels, channels)

    def forward(self, x: torch.Tensor, spec: WindowSpec,
                return_weights: bool = False):
        x, unbatched = ensure_batched(x, 4)
        b, t, h, w, c = x.shape
        if c != self.channels:
            raise ShapeError(f"expected {self.channels} channels, got {c}")

        wt, wh, ww = spec.wt, spec.wh, spec.ww
        pt = (wt - t % wt) % wt
        ph = (wh - h % wh) % wh
        pw = (ww - w % ww) % ww
        # pad channel-last volume on the far side of each extent
        x_p = F.pad(x, (0, 0, 0, pw, 0, ph, 0, pt))
        tp, hp, wp = t + pt, h + ph, w + pw

        st, sh, sw = spec.shifts
        if st or sh or sw:
            x_p = torch.roll(x_p, shifts=(-st, -sh, -sw), dims=(1, 2, 3))

        region = (
            _axis_region_ids(tp, wt, st, x.device)[:, None, None] * 9
            + _axis_region_ids(hp, wh, sh, x.device)[None, :, None] * 3
            + _axis_region_ids(wp, ww, sw, x.device)[None, None, :]
        )
        if pt or ph or pw:
            valid = torch.zeros(tp, hp, wp, dtype=torch.bool, device=x.device)
            valid[:t, :h, :w] = True
            if st or sh or sw:
                valid = torch.roll(valid, shifts=(-st, -sh, -sw), dims=(0, 1, 2))
            # padded tokens form their own region so no real token sees them
            region = region.masked_fill(~valid, -1)

        windows = rearrange(
            x_p, "b (nt wt) (nh wh) (nw ww) c -> b (nt nh nw) (wt wh ww) c",
            wt=wt, wh=wh, ww=ww)
        region_w = rearrange(
            region, "(nt wt) (nh wh) (nw ww) -> (nt nh nw) (wt wh ww)",
            wt=wt, wh=wh, ww=ww)

        qkv = self.qkv(windows)  # (b, nwin, tokens, 3c)
        q, k, v = rearrange(
            qkv, "b n l (three heads d) -> three b n heads l d",
            three=3, heads=self.heads)
        attn = torch.einsum("bnhid,bnhjd->bnhij", q, k) / (c // self.heads) ** 0.5
        mask = region_w[:, None, :] != region_w[:, :, None]  # (nwin, l, l)
        attn = attn.masked_fill(mask[None, :, None, :, :], float("-inf"))
        weights = attn.softmax(dim=-1)
        out = torch.einsum("bnhij,bnhjd->bnhid", weights, v)
        out = rearrange(out, "b n heads l d -> b n l (heads d)")
        out = self.proj(out)

        out = rearrange(
            out, "b (nt nh nw) (wt wh ww) c -> b (nt wt) (nh wh) (nw ww) c",
            nt=tp // wt, nh=hp // wh, nw=wp // ww, wt=wt, wh=wh, ww=ww)
        if st or sh or sw:
            out = torch.roll(out, shifts=(st, sh, sw), dims=(1, 2, 3))
        out = out[:, :t, :h, :w, :]
        if unbatched:
            out = out.squeeze(0)
        if return_weights:
            return out, weights
        return out


class SwinBlock3D(nn.Module):
    """Pre-norm transformer block: windowed attention + 4x MLP."""

    def __init__(self, channels: int, spec: WindowSpec, heads: int | None = None,
                 mlp_ratio: int = 4):
        super().__init__()
        self.spec = spec
        self.norm1 = nn.LayerNorm(channels)
        self.attn = WindowAttention3D(channels, heads)
        self.norm2 = nn.LayerNorm(channels)
        self.mlp = nn.Sequential(
            nn.Linear(channels, mlp_ratio * channels),
            nn.GELU(),
            nn.Linear(mlp_ratio * channels, channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.norm1(x), self.spec)
        x = x + self.mlp(self.norm2(x))
        return x


class SwinStage3D(nn.Module):
    """A regular-grid block followed by a shifted-grid block."""

    def __init__(self, channels: int, window: tuple[int, int, int] = (2, 4, 4),
                 heads: int | None = None):
        super().__init__()
        wt, wh, ww = window
        self.blocks = nn.ModuleList([
            SwinBlock3D(channels, WindowSpec(wt, wh, ww, shifted=False), heads),
            SwinBlock3D(channels, WindowSpec(wt, wh, ww, shifted=True), heads),
        ])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for block in self.blocks:
            x = block(x)
        return x


class ResidualBlock(nn.Module):
    """Per-frame residual block: x + conv(act(norm(conv(act(norm(x)))))).

    Channels are preserved. The final convolution is zero-initialized by
    default so a fresh block is an exact identity.
    """

    def __init__(self, channels: int, groups: int = 8, zero_init: bool = True):
        super().__init__()
        g = groups
        while channels % g:
            g -= 1
        self.norm1 = nn.GroupNorm(g, channels)
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.norm2 = nn.GroupNorm(g, channels)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        if zero_init:
            nn.init.zeros_(self.conv2.weight)
            nn.init.zeros_(self.conv2.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x, unbatched = ensure_batched(x, 4)
        b = x.shape[0]
        frames = frames_to_channels_first(x)
        h = self.conv1(F.silu(self.norm1(frames)))
        h = self.conv2(F.silu(self.norm2(h)))
        out = frames_to_channels_last(frames + h, b)
        return out.squeeze(0) if unbatched else out


class Downsample(nn.Module):
    """Strided-convolution spatial downsample; frame count is preserved."""

    def __init__(self, in_channels: int, out_channels: int | None = None):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels or in_channels,
                              3, stride=2, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x, unbatched = ensure_batched(x, 4)
        if x.shape[2] % 2 or x.shape[3] % 2:
            raise ShapeError(f"downsample needs even spatial dims, got {tuple(x.shape[2:4])}")
        out = frames_to_channels_last(self.conv(frames_to_channels_first(x)), x.shape[0])
        return out.squeeze(0) if unbatched else out


class Upsample(nn.Module):
    """Nearest-neighbor 2x upsample followed by a 3x3 convolution."""

    def __init__(self, in_channels: int, out_channels: int | None = None):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels or in_channels,
                              3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x, unbatched = ensure_batched(x, 4)
        frames = frames_to_channels_first(x)
        frames = F.interpolate(frames, scale_factor=2, mode="nearest")
        out = frames_to_channels_last(self.conv(frames), x.shape[0])
        return out.squeeze(0) if unbatched else out
