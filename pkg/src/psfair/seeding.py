"""Deterministic derivation of independent random substreams from one master seed.

Substreams are keyed by string tokens (model id, finding, group, purpose) so
that the same (seed, tokens) always yields the same stream, regardless of how
many other streams were drawn in between. This is what makes generation and
bootstrapping reproducible and safely parallelizable.
"""

from __future__ import annotations

import zlib

import numpy as np


def _token_words(tokens: tuple[str, ...]) -> list[int]:
    return [zlib.crc32(t.encode("utf-8")) for t in tokens]


def substream(seed: int, *tokens: str) -> np.random.Generator:
    """Return a generator for the substream identified by (seed, tokens)."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *_token_words(tokens)])
    return np.random.Generator(np.random.Philox(ss))
