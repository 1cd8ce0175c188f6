"""Set-partition and dissection combinatorics for cluster expansions.

The cumulant expansions sum over partitions of small label sets (at most 8
elements — Bell(8) = 4140 terms) and the kinetic generating operators
additionally sum over "dissections": splittings of a label block into
disjoint nonempty subsets, each attached to a distinct host particle.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from math import comb, factorial

MAX_PARTITION_ELEMENTS = 8


@lru_cache(maxsize=None)
def bell_number(n: int) -> int:
    """Number of partitions of an n-element set (recurrence over the last block)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1
    return sum(comb(n - 1, k) * bell_number(k) for k in range(n))


def set_partitions(elements):
    """All partitions of ``elements`` into unordered nonempty blocks.

    Yields lists of tuples; blocks preserve the input element order, and the
    block containing the first element comes first.  Standard recursive
    construction: insert each element into an existing block or open a new one.
    """
    elements = list(elements)
    if len(elements) > MAX_PARTITION_ELEMENTS:
        raise ValueError(
            f"partition enumeration capped at {MAX_PARTITION_ELEMENTS} elements, "
            f"got {len(elements)}"
        )
    if not elements:
        yield []
        return

    def extend(blocks, rest):
        if not rest:
            yield [tuple(b) for b in blocks]
            return
        head, tail = rest[0], rest[1:]
        for i in range(len(blocks)):
            blocks[i].append(head)
            yield from extend(blocks, tail)
            blocks[i].pop()
        blocks.append([head])
        yield from extend(blocks, tail)
        blocks.pop()

    yield from extend([[elements[0]]], elements[1:])


def partition_weight(block_count: int) -> float:
    """Moebius weight (-1)^(|P|-1) (|P|-1)! of a partition with |P| blocks."""
    return float((-1) ** (block_count - 1) * factorial(block_count - 1))


def dissections(block, hosts):
    """Splittings of ``block`` with an injective host attached to each part.

    A dissection splits the linearly ordered label block into unordered
    nonempty subsets (they need not be consecutive) and attaches to each
    subset a distinct host particle drawn from ``hosts``.  Partitions with
    more parts than available hosts cannot be attached and are skipped.

    Yields lists of (host, part) pairs.
    """
    hosts = list(hosts)
    for parts in set_partitions(block):
        if len(parts) > len(hosts):
            continue
        for assigned in permutations(hosts, len(parts)):
            yield list(zip(assigned, parts))


def compositions(total: int, parts: int):
    """Ordered tuples of ``parts`` positive integers summing to <= total."""
    if parts == 0:
        yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest
