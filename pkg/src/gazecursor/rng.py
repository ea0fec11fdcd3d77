"""Seeded noise streams for the synthetic renderer.

The generator is a splitmix-style 64-bit mixer: starting from the seed,
the state advances by the odd constant 0x9E3779B97F4A7C15 per draw and
each output is the state scrambled by two xor-shift-multiply rounds
(0xBF58476D1CE4E5B9, 0x94D049BB133111EB) and a final 31-bit xor-shift.
Gaussians come from the Box-Muller transform over pairs of draws. The
stream depends on nothing but the seed, so renders are reproducible
without touching process-global RNG state.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def raw_stream(seed: int, count: int) -> np.ndarray:
    """First `count` 64-bit outputs for `seed`, as uint64."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        z = base + _GOLDEN * np.arange(1, count + 1, dtype=np.uint64)
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def uniform01(seed: int, count: int) -> np.ndarray:
    """Doubles in (0, 1], from the top 53 bits of each draw."""
    bits = raw_stream(seed, count) >> np.uint64(11)
    return (bits.astype(np.float64) + 1.0) * (2.0**-53)


def gaussian_field(seed: int, shape: tuple[int, ...], sigma: float) -> np.ndarray:
    """Standard-normal field scaled by sigma, shaped `shape`."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    n = int(np.prod(shape, dtype=np.int64)) if shape else 1
    if sigma == 0 or n == 0:
        return np.zeros(shape, dtype=np.float64)
    pairs = (n + 1) // 2
    u = uniform01(seed, 2 * pairs)
    u1, u2 = u[:pairs], u[pairs:]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
    return (sigma * z).reshape(shape)
