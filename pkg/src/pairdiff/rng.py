"""Keyed counter-based random streams.

Every random draw in the package comes from a Philox generator whose 128-bit
key is derived from ``(master_seed, *path)``.  The path names the purpose and
the index of the consumer (trial, edge block, sweep value), so a stream never
depends on execution order or on how work is split across workers.
"""

from __future__ import annotations

import zlib

import numpy as np

_DOUBLES_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter step


def _tag(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)


def stream_key(master_seed: int, *path) -> np.ndarray:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(_tag(p) for p in path))
    return ss.generate_state(2, np.uint64)


def generator(master_seed: int, *path) -> np.random.Generator:
    """Independent generator for the substream named by ``path``."""
    return np.random.Generator(np.random.Philox(key=stream_key(master_seed, *path)))


def uniforms(master_seed: int, path: tuple, start: int, stop: int) -> np.ndarray:
    """Draws ``start..stop-1`` of the uniform stream named by ``path``.

    Draw ``k`` is a pure function of the key and ``k``: any slicing of the
    index range gives the same values as one long draw.
    """
    if stop <= start:
        return np.empty(0)
    bg = np.random.Philox(key=stream_key(master_seed, *path))
    block, offset = divmod(start, _DOUBLES_PER_BLOCK)
    bg.advance(block)
    out = np.random.Generator(bg).random(offset + stop - start)
    return out[offset:]
