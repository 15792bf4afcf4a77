"""Reproducible random-number substreams.

Every stochastic object in the package is drawn from an :class:`RngStream`,
a value type identifying one substream of a master seed.  The same
``(master_seed, stream_index)`` pair always produces the identical
realization, and distinct indices give statistically independent streams,
so ensembles are reproducible independent of scheduling or worker count.

The construction is counter-based: the stream index is fed to
``numpy.random.SeedSequence`` as a spawn key and the derived state seeds a
Philox bit generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream"]


def _normalize_index(index) -> tuple[int, ...]:
    if isinstance(index, (int, np.integer)):
        return (int(index),)
    return tuple(int(i) for i in index)


@dataclass(frozen=True)
class RngStream:
    """One reproducible substream of a master seed.

    Parameters
    ----------
    master_seed : int
        64-bit master seed shared by a whole run.
    stream_index : int or tuple of int
        Substream selector.  Tuples address nested substreams
        (e.g. ``(cell, trajectory)`` in a parameter sweep).
    """

    master_seed: int
    stream_index: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "stream_index", _normalize_index(self.stream_index))
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 bits")

    def child(self, *indices: int) -> "RngStream":
        """Return the substream addressed by appending ``indices``."""
        return RngStream(self.master_seed, self.stream_index + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        """Fresh Generator positioned at the start of this substream."""
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.stream_index)
        return np.random.Generator(np.random.Philox(seq))
