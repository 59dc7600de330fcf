"""Operation counters for the cost model used in the efficiency comparison.

Counter names:

* ``EG``  -- exponentiation in the source group
* ``EGT`` -- exponentiation in the target group
* ``MG``  -- multiplication (or division) in the source group
* ``MGT`` -- multiplication (or division) in the target group
* ``P``   -- pairing evaluation
* ``RG``  -- drawing a uniformly random source-group element
* ``HG``  -- hashing into the source group (``H`` and ``F``)

Counting is logical: a cached hash still counts, and a fixed-base table
lookup still counts as one exponentiation.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import asdict, dataclass
from typing import Iterator

COUNTER_NAMES = ("EG", "EGT", "MG", "MGT", "P", "RG", "HG")


@dataclass
class OpCounts:
    EG: int = 0
    EGT: int = 0
    MG: int = 0
    MGT: int = 0
    P: int = 0
    RG: int = 0
    HG: int = 0

    def as_dict(self) -> dict:
        return asdict(self)

    def __add__(self, other: "OpCounts") -> "OpCounts":
        return OpCounts(*(getattr(self, k) + getattr(other, k) for k in COUNTER_NAMES))


_active: contextvars.ContextVar[tuple] = contextvars.ContextVar("huap_counters", default=())


def record(name: str, amount: int = 1) -> None:
    for counts in _active.get():
        setattr(counts, name, getattr(counts, name) + amount)


@contextlib.contextmanager
def count_ops() -> Iterator[OpCounts]:
    """Collect operation counts for the enclosed block.

    Blocks nest; an inner block's operations also count toward the outer.
    """
    counts = OpCounts()
    token = _active.set(_active.get() + (counts,))
    try:
        yield counts
    finally:
        _active.reset(token)
