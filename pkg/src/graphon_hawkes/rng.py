"""Counter-based, splittable random streams.

All randomness flows through `SplitStream`, a thin wrapper around a Philox
counter-based bit generator keyed by (master seed, path of integers).  A
stream can be split into independent child streams by extending the path,
so replication r / cluster c always sees the same bits no matter how work
is scheduled across threads.
"""

from __future__ import annotations

import numpy as np


class SplitStream:
    """A reproducible random stream addressed by (seed, path)."""

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self._gen = None

    def child(self, *indices: int) -> "SplitStream":
        return SplitStream(self.seed, self.path + tuple(indices))

    def generator(self) -> np.random.Generator:
        """The numpy Generator for this stream (created once, cached)."""
        if self._gen is None:
            seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.Philox(seq))
        return self._gen

    # Cheap per-cluster substreams: jumping the Philox counter by i * 2^128
    # avoids rebuilding a SeedSequence for every cluster in hot loops.
    def jumped_generator(self, i: int) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq).jumped(i + 1))

    def describe(self) -> dict:
        return {"seed": self.seed, "path": list(self.path)}

    def __repr__(self):
        return f"SplitStream(seed={self.seed}, path={self.path})"
