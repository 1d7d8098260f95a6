"""Reproducible per-purpose random streams from one master seed."""
from __future__ import annotations

import zlib

import numpy as np


def stream(seed, name):
    """Generator for (seed, name); distinct names give independent streams."""
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(key,)))
