"""
Counter-based random streams for reproducible simulation.

A RandomStreams object maps (run seed, branch, step, purpose) to an
independent numpy Generator backed by the Philox counter-based bit
generator. Streams never depend on the order in which they are requested,
so chains can be evaluated in any order (or in parallel) without changing
results.
"""

import zlib
from typing import Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ParameterError

# Stable branch identifiers; new names are hashed below the reserved range.
BRANCH_IDS = {
    'x': 0,
    'k': 1,
    'phi': 2,
    'data': 3,
    'measurement': 4,
    'training': 5,
    'heldout': 6,
    'mc': 7,
    'instance': 8,
    'generator': 9,
}

PURPOSE_INIT = 0
PURPOSE_STEP = 1


def branch_id(branch: str) -> int:
    """Return the integer identifier of a named branch."""
    if branch in BRANCH_IDS:
        return BRANCH_IDS[branch]
    return 1024 + zlib.crc32(branch.encode('utf-8'))


class RandomStreams:
    """Splittable family of Philox streams rooted at one run seed."""

    def __init__(self, seed: int, prefix: Sequence[int] = ()):
        if int(seed) < 0:
            raise ParameterError(f"Seeds must be non-negative, got {seed}")
        self.seed = int(seed)
        self.prefix: Tuple[int, ...] = tuple(int(p) for p in prefix)

    def _key(self, branch: str, step: int, purpose: int) -> Tuple[int, ...]:
        return self.prefix + (branch_id(branch), int(step), int(purpose))

    def generator(self, branch: str, step: int = 0, purpose: int = PURPOSE_STEP) -> np.random.Generator:
        """Independent generator for one (branch, step, purpose) cell."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=self._key(branch, step, purpose))
        return np.random.Generator(np.random.Philox(sequence))

    def normal(self, branch: str, step: int, shape: Tuple[int, ...],
               purpose: int = PURPOSE_STEP) -> np.ndarray:
        """Standard normal draw of the given shape from one stream cell."""
        return self.generator(branch, step, purpose).standard_normal(shape)

    def child(self, branch: str, index: int = 0) -> 'RandomStreams':
        """Derived family, e.g. one per dataset item or per Monte-Carlo instance."""
        return RandomStreams(self.seed, self.prefix + (branch_id(branch), int(index)))

    def __repr__(self) -> str:
        return f"RandomStreams(seed={self.seed}, prefix={self.prefix})"


def as_generator(rng, branch: str = 'generator', step: int = 0) -> np.random.Generator:
    """
    Accept either a numpy Generator, a RandomStreams family or an integer seed.

    Args:
        rng: Random source supplied by the caller
        branch: Branch used when a RandomStreams family or seed is given
        step: Step index used when a RandomStreams family or seed is given

    Returns:
        A numpy Generator
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomStreams):
        return rng.generator(branch, step)
    if isinstance(rng, (int, np.integer)):
        return RandomStreams(int(rng)).generator(branch, step)
    raise TypeError(f"Unsupported random source: {type(rng).__name__}")


def as_streams(rng: Optional[object], default_seed: int = 0) -> RandomStreams:
    """Normalize a seed or RandomStreams argument to a RandomStreams family."""
    if rng is None:
        return RandomStreams(default_seed)
    if isinstance(rng, RandomStreams):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RandomStreams(int(rng))
    raise TypeError(f"Expected a seed or RandomStreams, got {type(rng).__name__}")
