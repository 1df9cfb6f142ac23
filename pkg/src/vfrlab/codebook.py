"""Learnable discrete codebook with nearest-neighbor quantization.

The codebook is trained by gradient on the standard codebook + commitment
objective (no EMA updates; an ``ema`` flag exists as a stub and is rejected
if enabled). There is no dead-code resurrection: at desk scale the codebook
is small enough that collapse is rare, and reviving codes would break
determinism guarantees.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from .errors import ConfigError, InputError, ShapeError

_CHUNK = 4096  # tokens per distance-matrix block, bounds peak memory


class Codebook(nn.Module):
    """N learnable d-dimensional code vectors.

    Entries are initialized uniformly in [-1/N, 1/N].
    """

    def __init__(self, size: int = 64, dim: int = 32, ema: bool = False):
        super().__init__()
        if size < 2:
            raise ConfigError(f"codebook size must be >= 2, got {size}")
        if dim < 1:
            raise ConfigError(f"code dimension must be >= 1, got {dim}")
        if ema:
            raise ConfigError("EMA codebook updates are not implemented")
        self.embedding = nn.Parameter(
            torch.empty(size, dim).uniform_(-1.0 / size, 1.0 / size))

    @property
    def size(self) -> int:
        return self.embedding.shape[0]

    @property
    def dim(self) -> int:
        return self.embedding.shape[1]


def quantize(z: torch.Tensor, codebook: Codebook) -> tuple[torch.Tensor, torch.Tensor]:
    """Assign every latent vector to its nearest code.

    ``z`` has shape ``(..., d)``. Returns ``(indices, z_q)`` where indices
    minimize squared euclidean distance (ties broken toward the lowest
    index) and ``z_q`` is the corresponding code lookup, differentiable
    with respect to the codebook entries only.
    """
    if z.shape[-1] != codebook.dim:
        raise ConfigError(
            f"latent dim {z.shape[-1]} != codebook dim {codebook.dim}")
    flat = z.reshape(-1, codebook.dim)
    idx_parts = []
    with torch.no_grad():
        entries = codebook.embedding
        for chunk in flat.split(_CHUNK):
            # exact per-pair squared distances so ties are bit-reproducible
            d2 = (chunk[:, None, :] - entries[None, :, :]).square().sum(-1)
            idx_parts.append(d2.argmin(dim=1))
    indices = torch.cat(idx_parts).reshape(z.shape[:-1])
    return indices, lookup(indices, codebook)


def lookup(indices: torch.Tensor, codebook: Codebook) -> torch.Tensor:
    """Gather code vectors for an index grid: out[...] = entries[indices[...]]."""
    if indices.numel() and int(indices.max()) >= codebook.size:
        raise InputError(
            f"index {int(indices.max())} out of range for codebook of {codebook.size}")
    if indices.numel() and int(indices.min()) < 0:
        raise InputError("negative code index")
    return codebook.embedding[indices]


def straight_through(z: torch.Tensor, z_q: torch.Tensor) -> torch.Tensor:
    """Quantized values forward, identity gradient backward.

    The returned tensor equals ``z_q`` numerically; its gradient w.r.t.
    ``z`` is the identity and the codebook receives no gradient through
    this path.
    """
    if z.shape != z_q.shape:
        raise ShapeError(f"shape mismatch {tuple(z.shape)} vs {tuple(z_q.shape)}")
    return z + (z_q - z).detach()


def vq_aux_losses(z: torch.Tensor, z_q: torch.Tensor,
                  beta_commit: float = 0.25) -> torch.Tensor:
    """Codebook + commitment objective.

    Per token: ||sg(z) - z_q||^2 + beta * ||z - sg(z_q)||^2 (squared norm
    over the code dimension), averaged over tokens.
    """
    if z.shape != z_q.shape:
        raise ShapeError(f"shape mismatch {tuple(z.shape)} vs {tuple(z_q.shape)}")
    codebook_term = (z.detach() - z_q).square().sum(-1).mean()
    commit_term = (z - z_q.detach()).square().sum(-1).mean()
    return codebook_term + beta_commit * commit_term
