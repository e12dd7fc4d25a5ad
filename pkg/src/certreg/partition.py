"""Seeded training-set partitioning and block-to-submodel mappings.

Randomness comes from a SplitMix64 stream so that assignments are
bit-identical across platforms and numpy versions.  Blocks and submodels
are indexed from 0.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_MASK = (1 << 64) - 1


class SplitMix64:
    """Minimal SplitMix64 generator (Steele, Lea & Flood 2014)."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def permutation(self, n: int) -> np.ndarray:
        perm = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def sample(self, population: int, k: int) -> list:
        return self.permutation(population)[:k].tolist()


def substream(seed: int, name: str) -> SplitMix64:
    """Independent named stream derived from a master seed."""
    mixer = SplitMix64((int(seed) & _MASK) ^ (zlib.crc32(name.encode()) << 32))
    return SplitMix64(mixer.next_u64())


@dataclass(frozen=True)
class PartitionAssignment:
    m: int
    seed: int
    block_of: np.ndarray

    @property
    def n(self) -> int:
        return int(self.block_of.size)

    def block(self, j: int) -> np.ndarray:
        return np.nonzero(self.block_of == j)[0]

    def blocks(self) -> list:
        return [self.block(j) for j in range(self.m)]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.block_of, minlength=self.m)


def partition_train(n: int, m: int, seed: int) -> PartitionAssignment:
    """Assign ``n`` instances to ``m`` blocks of near-equal size.

    Indices are shuffled with the seeded stream and dealt round-robin, so
    block sizes differ by at most one.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    perm = substream(seed, "partition").permutation(n)
    block_of = np.empty(n, dtype=np.int64)
    block_of[perm] = np.arange(n) % m
    block_of.setflags(write=False)
    return PartitionAssignment(m, int(seed), block_of)


@dataclass(frozen=True)
class BlockMapping:
    """Which blocks each submodel trains on.

    ``model_blocks[t]`` is the sorted tuple of block indices composing
    submodel ``t``'s training set.
    """

    m: int
    model_blocks: tuple

    def __post_init__(self):
        for t, blocks in enumerate(self.model_blocks):
            if not blocks:
                raise ValueError(f"submodel {t} has no blocks")
            if any(not 0 <= j < self.m for j in blocks):
                raise ValueError(f"submodel {t} references a block outside [0, {self.m})")

    @classmethod
    def from_lists(cls, m: int, model_blocks: Iterable[Iterable[int]]) -> "BlockMapping":
        return cls(m, tuple(tuple(sorted(set(int(j) for j in b))) for b in model_blocks))

    @classmethod
    def disjoint(cls, m: int) -> "BlockMapping":
        return cls(m, tuple((j,) for j in range(m)))

    @property
    def T(self) -> int:
        return len(self.model_blocks)

    @property
    def spread_degrees(self) -> np.ndarray:
        deg = np.zeros(self.m, dtype=np.int64)
        for blocks in self.model_blocks:
            deg[list(blocks)] += 1
        return deg

    @property
    def d_max(self) -> int:
        return int(self.spread_degrees.max())

    @property
    def is_disjoint(self) -> bool:
        seen = set()
        for blocks in self.model_blocks:
            if seen.intersection(blocks):
                return False
            seen.update(blocks)
        return True

    def models_of(self, j: int) -> list:
        return [t for t, blocks in enumerate(self.model_blocks) if j in blocks]


def build_block_mapping(m: int, T: int, d: int, seed: int) -> BlockMapping:
    """Random mapping where every block feeds exactly ``d`` distinct submodels.

    With ``d == 1`` and ``T == m`` this is the identity (disjoint) mapping.
    When ``m == T`` the block ids are shuffled and block ``j`` feeds
    submodels ``(j + s) mod T`` for ``d`` random distinct shifts ``s``, so
    every submodel receives exactly ``d`` blocks.  Otherwise blocks are dealt
    cyclically, giving submodel loads that differ by at most one.
    """
    if d < 1 or T < 1 or m < 1:
        raise ValueError("m, T and d must be positive")
    if d > T:
        raise ValueError(f"spread degree d={d} exceeds submodel count T={T}")
    if m * d < T:
        raise ValueError(f"m*d={m * d} block slots cannot give each of T={T} submodels a block")
    if d == 1 and m == T:
        return BlockMapping.disjoint(m)
    rng = substream(seed, "mapping")
    model_blocks = [set() for _ in range(T)]
    if m == T:
        shifts = rng.sample(T, d)
        relabel = rng.permutation(m)
        for j in range(m):
            for s in shifts:
                model_blocks[(j + s) % T].add(int(relabel[j]))
    else:
        relabel = rng.permutation(m)
        slot = 0
        for j in range(m):
            for _ in range(d):
                model_blocks[slot % T].add(int(relabel[j]))
                slot += 1
    return BlockMapping.from_lists(m, model_blocks)


def model_indices(partition: PartitionAssignment, mapping: BlockMapping) -> list:
    """Training-row indices of every submodel."""
    if partition.m != mapping.m:
        raise ValueError("partition and mapping disagree on the block count")
    blocks = partition.blocks()
    return [np.sort(np.concatenate([blocks[j] for j in mb])) for mb in mapping.model_blocks]


SHARED_BLOCKS_EXAMPLE: Sequence[Sequence[int]] = ((1, 3), (2, 5), (3, 4), (0, 6), (4, 5))
"""Seven blocks feeding five submodels; a small shared-block example used in tests and demos."""
