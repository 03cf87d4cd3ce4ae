"""Named, independent random substreams derived from one master seed.

Every consumer (network init, environment resets, action noise, batch
sampling, ...) gets its own generator keyed by a name, so adding or removing
a consumer never perturbs the draws any other consumer sees.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(master_seed: int, *names: str) -> np.random.Generator:
    """Return a Generator keyed by ``(master_seed, names...)``.

    The name tuple is hashed with sha256 (stable across processes and
    platforms, unlike Python's built-in ``hash``) and mixed into the seed
    entropy.
    """
    digest = hashlib.sha256("/".join(names).encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    seq = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, *words])
    return np.random.default_rng(seq)
