# LPCR Shield - Splittable Random Streams
"""
Named, splittable random streams.

A stream is identified by a 64-bit root seed and a path of names. The path
components are hashed with BLAKE2b into 64-bit words, and the words seed
numpy's counter-based Philox generator through a SeedSequence. Any two
processes that agree on (seed, path) draw identical numbers, and sibling
paths are statistically independent.
"""

import hashlib
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

PathPart = Union[str, int]

_MASK64 = (1 << 64) - 1


def _path_word(part: PathPart) -> int:
    tag = "i" if isinstance(part, int) else "s"
    digest = hashlib.blake2b(f"{tag}:{part}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _entropy(seed: int, path: Tuple[PathPart, ...]) -> list:
    seed &= _MASK64
    words = [seed & 0xFFFFFFFF, seed >> 32]
    for part in path:
        word = _path_word(part)
        words.extend([word & 0xFFFFFFFF, word >> 32])
    return words


@dataclass(frozen=True)
class RngStream:
    """A (seed, path) pair naming one reproducible random stream"""

    seed: int
    path: Tuple[PathPart, ...] = ()

    def child(self, *parts: PathPart) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(parts))

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(_entropy(self.seed, self.path))
        return np.random.Generator(np.random.Philox(sequence))

    def derive_seed(self) -> int:
        """A 63-bit integer seed drawn from this stream"""
        return int(self.generator().integers(0, 2**63 - 1, dtype=np.int64))

    @property
    def label(self) -> str:
        return "/".join(str(part) for part in self.path)


def derive_rng(seed: int, *path: PathPart) -> np.random.Generator:
    return RngStream(seed, tuple(path)).generator()


def derive_seed(seed: int, *path: PathPart) -> int:
    return RngStream(seed, tuple(path)).derive_seed()
