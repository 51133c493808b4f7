"""Seeded, labelled random streams.

Every stream is a ``random.Random`` (MT19937) seeded with the string
``"<seed>/<label>/<label>..."``. String seeds are hashed with SHA-512 by the
standard library, so streams are platform independent and two labels never
share a stream.
"""

from __future__ import annotations

import random

ALGORITHM = "python-random-mt19937/sha512-string-seed"


def stream(seed: int, *labels) -> random.Random:
    return random.Random("/".join([str(seed), *map(str, labels)]))
