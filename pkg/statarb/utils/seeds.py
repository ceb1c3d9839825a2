import zlib
from typing import Union

import numpy as np

TKey = Union[int, str]


def _as_word(key: TKey) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    return zlib.crc32(str(key).encode('utf-8'))


def derive_seed(seed: int, *keys: TKey) -> int:
    """Stable child seed of (seed, keys); independent of call order and worker count."""
    sequence = np.random.SeedSequence([_as_word(seed), *[_as_word(key) for key in keys]])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
