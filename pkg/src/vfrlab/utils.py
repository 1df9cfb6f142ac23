"""Small shared helpers: seeding, checksums, tensor layout guards."""

from __future__ import annotations

import hashlib
import random
from typing import Iterable

import numpy as np
import torch


def seed_all(seed: int) -> None:
    """Seed python, numpy and torch global RNGs."""
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    torch.manual_seed(seed)


def stable_seed(*parts: int) -> int:
    """Deterministic 64-bit seed derived from integer parts.

    Independent of python hash randomization; used to key per-clip and
    per-step RNG streams off a single run seed.
    """
    h = hashlib.sha256(np.asarray(parts, dtype=np.int64).tobytes()).digest()
    return int.from_bytes(h[:8], "little")


def rng_for(*parts: int) -> np.random.Generator:
    """Fresh numpy generator keyed by ``parts`` (stateless across calls)."""
    return np.random.Generator(np.random.PCG64(stable_seed(*parts)))


def param_checksum(params: torch.nn.Module | Iterable[torch.Tensor]) -> str:
    """SHA-256 over the raw bytes of all parameters, in definition order.

    Used to verify freeze contracts: a frozen module must checksum
    identically before and after a training stage.
    """
    if isinstance(params, torch.nn.Module):
        tensors = [p for _, p in sorted(params.state_dict().items())]
    else:
        tensors = list(params)
    h = hashlib.sha256()
    for t in tensors:
        h.update(t.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def ensure_batched(x: torch.Tensor, dims: int) -> tuple[torch.Tensor, bool]:
    """Add a leading batch axis if ``x`` has ``dims`` dims; report if added."""
    if x.dim() == dims:
        return x.unsqueeze(0), True
    if x.dim() == dims + 1:
        return x, False
    raise ValueError(f"expected {dims} or {dims + 1} dims, got {x.dim()}")


def frames_to_channels_first(x: torch.Tensor) -> torch.Tensor:
    """(B, T, H, W, C) -> (B*T, C, H, W) for per-frame convolutions."""
    b, t, h, w, c = x.shape
    return x.permute(0, 1, 4, 2, 3).reshape(b * t, c, h, w)


def frames_to_channels_last(x: torch.Tensor, batch: int) -> torch.Tensor:
    """(B*T, C, H, W) -> (B, T, H, W, C)."""
    bt, c, h, w = x.shape
    return x.reshape(batch, bt // batch, c, h, w).permute(0, 1, 3, 4, 2)
