import hashlib
import json
from typing import Any, List

import numpy as np
from numpy.typing import NDArray


def calculate_checksum(contents: str) -> str:
    """
    Returns a checksum of the provided contents
    """
    return hashlib.sha256(contents.encode("utf-8")).hexdigest()


def canonical_json(payload: Any) -> str:
    """Serializes a JSON-compatible payload with sorted keys and no whitespace."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def parse_seed_list(raw: str) -> List[int]:
    """Parses `a,b,c` into a list of ints, ignoring empty entries."""
    seeds: List[int] = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        seeds.append(int(token))
    return seeds


def zigzag(n: int) -> int:
    """Maps ℤ onto ℕ bijectively: 0, -1, 1, -2, ... ↦ 0, 1, 2, 3, ..."""
    return 2 * n if n >= 0 else -2 * n - 1


def tail_half(values: NDArray) -> NDArray:
    """Last half of a one-sided sequence, the finite stand-in for a limsup."""
    n = len(values)
    if n == 0:
        return values
    return values[n // 2:]


def tail_quartile(values: NDArray) -> NDArray:
    n = len(values)
    if n == 0:
        return values
    return values[(3 * n) // 4:]


def tail_max(values: NDArray) -> float:
    tail = tail_half(values)
    if len(tail) == 0:
        return 0.0
    return float(np.max(tail))


def is_tail_decreasing(values: NDArray) -> bool:
    """
    Compares the maximum over the last quartile with the maximum over the
    second quartile. Sequences that are identically zero count as decreasing.
    """
    n = len(values)
    if n < 4:
        return False
    second = values[n // 4: n // 2]
    last = values[(3 * n) // 4:]
    if len(second) == 0 or len(last) == 0:
        return False
    late, early = float(np.max(last)), float(np.max(second))
    if late == 0.0:
        return True
    return late < early


def is_tail_bounded(values: NDArray) -> bool:
    """The last half stays within the range seen on the first half."""
    n = len(values)
    if n < 2:
        return False
    return float(np.max(values[n // 2:])) <= float(np.max(values[: n // 2]))


def ceil_half(n: NDArray | int) -> NDArray | int:
    """Site of a CMV index: ⌈n/2⌉."""
    return -((-n) // 2)
