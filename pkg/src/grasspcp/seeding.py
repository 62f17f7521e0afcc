"""Deterministic seed derivation.

Every randomized routine takes ``rng`` which may be ``None``, an int seed or a
:class:`random.Random`.  Child streams are derived with :func:`child_seed`, a
stable hash of the parent seed and a text label, so results never depend on
the order in which sub-experiments are run.
"""

import hashlib
import random

_MASK64 = (1 << 64) - 1


def child_seed(parent, label):
    """Mix a 64-bit parent seed with a label into a new 64-bit seed.

    The mixing function is BLAKE2b-64 over ``"<parent>:<label>"``.
    """
    data = f"{int(parent) & _MASK64}:{label}".encode()
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def check_random_state(rng):
    if rng is None:
        return random.Random()
    if isinstance(rng, random.Random):
        return rng
    if isinstance(rng, int):
        return random.Random(rng)
    raise TypeError(f"cannot build a random state from {rng!r}")


def spawn(rng, label):
    """Return an independent :class:`random.Random` derived from ``rng``."""
    if isinstance(rng, int):
        return random.Random(child_seed(rng, label))
    rng = check_random_state(rng)
    return random.Random(child_seed(rng.getrandbits(64), label))
