"""Causal orderings and the conditioning sets they induce."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from src.errors import ConfigurationError


@dataclass(frozen=True)
class CausalOrdering:
    """A permutation of the variables.

    ``ranks[j]`` is the 1-based rank of variable ``j`` (0-based column
    index): rank 1 is a root, every variable is placed after its causes.
    """

    ranks: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.ranks) != list(range(1, len(self.ranks) + 1)):
            raise ConfigurationError(f"ranks must be a permutation of 1..d, got {self.ranks}")

    @classmethod
    def identity(cls, d: int) -> CausalOrdering:
        return cls(tuple(range(1, d + 1)))

    @classmethod
    def from_order(cls, order: Sequence[int]) -> CausalOrdering:
        """Build from 0-based column indices listed cause-first."""
        order = [int(j) for j in order]
        if sorted(order) != list(range(len(order))):
            raise ConfigurationError(f"order must list every column exactly once, got {order}")
        ranks = [0] * len(order)
        for rank, j in enumerate(order, start=1):
            ranks[j] = rank
        return cls(tuple(ranks))

    @classmethod
    def parse(cls, text: str) -> CausalOrdering:
        """Parse ``"2,1,3"`` (1-based labels, cause first) or ``"x2,x1,x3"``."""
        labels = [part.strip().lstrip("xX") for part in text.split(",") if part.strip()]
        try:
            return cls.from_order([int(label) - 1 for label in labels])
        except ValueError:
            raise ConfigurationError(f"cannot parse ordering {text!r}") from None

    @property
    def d(self) -> int:
        return len(self.ranks)

    @property
    def order(self) -> tuple[int, ...]:
        """0-based column indices in increasing rank."""
        return tuple(sorted(range(self.d), key=self.ranks.__getitem__))

    def predecessors(self, j: int) -> tuple[int, ...]:
        """Variables of strictly smaller rank than ``j``, in increasing rank."""
        return tuple(i for i in self.order if self.ranks[i] < self.ranks[j])

    def conditioning_sets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(self.predecessors(j) for j in range(self.d))

    def labels(self) -> list[str]:
        return [f"x{j + 1}" for j in self.order]

    def __str__(self) -> str:
        return " -> ".join(self.labels())


def block_conditioning_sets(
    blocks: Sequence[Iterable[int]],
) -> tuple[CausalOrdering, tuple[tuple[int, ...], ...]]:
    """Ordering and conditioning sets for a chain of variable blocks.

    Every variable of a block is conditioned on all variables of the
    earlier blocks and on none of its own block.
    """
    blocks = [tuple(int(j) for j in block) for block in blocks]
    order = [j for block in blocks for j in block]
    ordering = CausalOrdering.from_order(order)
    parents: list[tuple[int, ...]] = [()] * len(order)
    seen: list[int] = []
    for block in blocks:
        for j in block:
            parents[j] = tuple(seen)
        seen.extend(block)
    return ordering, tuple(parents)
