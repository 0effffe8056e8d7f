"""Seeded stratified train/validation/test splits.

Randomness throughout the toolkit comes from a fixed, documented generator so
that datasets are byte-identical across runs, platforms and releases:

* ``splitmix64`` expands a 64-bit seed into generator state and derives
  substream seeds.
* ``xoshiro256**`` produces the random stream used for shuffles.

The split shuffle consumes the root stream (``rng_from_seed(seed)``).
Missing-data simulation uses per-sequence substreams derived with
``substream_seed(seed, index)`` so transforms can run in any order or in
parallel without perturbing each other's draws.
"""

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from tsprep.util import round_half_up

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 output scramble (Steele, Lea & Flood 2014)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def _splitmix64_next(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & _MASK64
    return _mix64(state), state


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** generator with splitmix64 seed expansion.

    Pure-integer implementation: identical output on every platform and
    Python version. Fast enough for the shuffles this toolkit performs.
    """

    def __init__(self, seed: int) -> None:
        state = seed & _MASK64
        s = []
        for _ in range(4):
            z, state = _splitmix64_next(state)
            s.append(z)
        self._s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via unbiased rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, iterating from the last index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def choose(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), via partial Fisher-Yates."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot choose {k} from {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def rng_from_seed(seed: Optional[int]) -> Xoshiro256StarStar:
    """Root random stream for a seed; OS entropy when seed is None."""
    if seed is None:
        seed = int.from_bytes(os.urandom(8), "little")
    return Xoshiro256StarStar(seed)


def substream_seed(seed: int, index: int) -> int:
    """Derive a 64-bit substream seed from (seed, index).

    Two rounds of the splitmix64 scramble bind the pair into one word; the
    derivation is positional, so substreams are independent of how many other
    substreams were used.
    """
    z = _mix64(seed & _MASK64)
    return _mix64((z + ((index + 1) * _GOLDEN)) & _MASK64)


@dataclass(frozen=True)
class SplitSpec:
    """Requested split proportions and seed.

    Without ``val_prop`` the remainder after training is the validation set.
    With ``val_prop`` the remainder after training + validation is the test
    set.
    """

    train_prop: float
    val_prop: Optional[float] = None
    seed: Optional[int] = None

    def validate(self) -> None:
        if self.val_prop is None:
            if not 0.0 < self.train_prop < 1.0:
                raise ValueError("train_prop must be in (0, 1)")
        else:
            if self.train_prop <= 0.0 or self.val_prop <= 0.0:
                raise ValueError("train_prop and val_prop must be positive")
            if self.train_prop + self.val_prop >= 1.0:
                raise ValueError("train_prop + val_prop must be < 1 when val_prop is given")

    @property
    def has_test(self) -> bool:
        return self.val_prop is not None


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint index arrays covering every sequence exactly once."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def split_of_index(self, n: int) -> np.ndarray:
        """Per-sequence codes: 0 train, 1 val, 2 test."""
        out = np.full(n, -1, dtype=np.int8)
        out[self.train] = 0
        out[self.val] = 1
        out[self.test] = 2
        if (out < 0).any():
            raise ValueError("assignment does not cover all indices")
        return out


def _largest_remainder(ideals: list[float], total: int, caps: list[int]) -> list[int]:
    """Integer allocation: floor the ideals, then hand out the shortfall by
    largest fractional remainder. ``caps`` bounds each cell from above."""
    alloc = [min(int(np.floor(q)), cap) for q, cap in zip(ideals, caps)]
    shortfall = total - sum(alloc)
    if shortfall < 0:
        raise ValueError("allocation exceeds total")
    # stable order: biggest remainder first, ties broken by stratum position
    order = sorted(range(len(ideals)), key=lambda k: (-(ideals[k] - np.floor(ideals[k])), k))
    i = 0
    while shortfall > 0:
        k = order[i % len(order)]
        if alloc[k] < caps[k]:
            alloc[k] += 1
            shortfall -= 1
        i += 1
        if i > 4 * len(order) + total:
            raise ValueError("cannot satisfy allocation under caps")
    return alloc


def stratified_split(labels: Sequence, spec: SplitSpec) -> SplitAssignment:
    """Partition indices into train/val/test by stratified sampling.

    Within each stratum the indices are shuffled with the seeded root stream
    and dealt to splits. Global split sizes equal ``round(prop * n)`` (half
    up), reconciled across strata by largest remainder; per-stratum
    proportions deviate from the request by at most one sequence.

    Strata are processed in sorted label order, one shuffle per stratum, so
    the stream consumption is deterministic.
    """
    spec.validate()
    labels = np.asarray(labels)
    n = len(labels)
    if n == 0:
        raise ValueError("cannot split an empty dataset")

    n_train = round_half_up(spec.train_prop * n)
    if spec.val_prop is None:
        n_val = n - n_train
        n_test = 0
    else:
        n_val = round_half_up(spec.val_prop * n)
        n_test = n - n_train - n_val
    if min(n_train, n_val) < 0 or n_test < 0:
        raise ValueError("split proportions produce a negative split size")

    strata = np.unique(labels)
    groups = [np.flatnonzero(labels == s) for s in strata]
    sizes = [len(g) for g in groups]

    train_alloc = _largest_remainder(
        [spec.train_prop * m for m in sizes], n_train, caps=sizes
    )
    remaining = [m - t for m, t in zip(sizes, train_alloc)]
    if spec.val_prop is None:
        val_alloc = remaining
    else:
        val_alloc = _largest_remainder(
            [spec.val_prop * m for m in sizes], n_val, caps=remaining
        )

    rng = rng_from_seed(spec.seed)
    train_idx: list[int] = []
    val_idx: list[int] = []
    test_idx: list[int] = []
    for group, t_k, v_k in zip(groups, train_alloc, val_alloc):
        members = [int(i) for i in group]
        rng.shuffle(members)
        train_idx.extend(members[:t_k])
        val_idx.extend(members[t_k : t_k + v_k])
        test_idx.extend(members[t_k + v_k :])

    return SplitAssignment(
        train=np.array(sorted(train_idx), dtype=np.int64),
        val=np.array(sorted(val_idx), dtype=np.int64),
        test=np.array(sorted(test_idx), dtype=np.int64),
    )
