"""Counter-based random streams.

Every random draw in drtubes comes from a Philox generator keyed by the
master seed plus a tuple of stream indices::

    stream(seed, PURPOSE, chunk)

Work is cut into chunks of fixed size and chunk ``c`` always uses the stream
``(seed, purpose, c)``, so results do not depend on how many threads
process the chunks or in which order.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

CHUNK_SIZE = 4096

# Stream purposes; a tuple key (purpose, index, ...) is never reused across
# purposes.
TUBE_SAMPLE = 1
BISECTION = 2
REPLICATE = 3
NULL_SIMULATION = 4
ALTERNATIVE_SIMULATION = 5
SAMPLE_SIZE = 6
BENCHMARK = 7
PVALUE = 8


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for stream ``keys`` under master ``seed``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))


def sub_seed(seed: int, *keys: int) -> int:
    """Derive a 64-bit seed for a nested computation."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def chunk_sizes(total: int, chunk_size: int = CHUNK_SIZE) -> List[int]:
    full, rest = divmod(int(total), chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(
    func: Callable[[int], T], count: int, threads: int = 1
) -> List[T]:
    """Evaluate ``func(0), ..., func(count - 1)`` and keep the result order."""
    if threads <= 1 or count <= 1:
        return [func(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, range(count)))


def concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts, axis=0) if parts else np.empty((0,))
