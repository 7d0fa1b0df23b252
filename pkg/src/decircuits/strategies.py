"""Mixed-radix numbering of strategies.

A strategy picks one alternative per decision per instantiation of that
decision's informational parents.  Its digits are listed decision by decision
in temporal order, and within a decision by parent row in canonical CPT order;
the first digit is the most significant.  Strategy 0 picks alternative 0
everywhere, and counting upward matches ``itertools.product`` over the digits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .model import InfluenceDiagram, row_count


@dataclass(frozen=True)
class Strategy:
    id: int
    choices: Mapping[int, tuple[int, ...]]   # decision id -> alternative per parent row


@dataclass(frozen=True)
class StrategySpace:
    decisions: tuple[int, ...]          # temporal order
    rows: tuple[int, ...]               # parent instantiations per decision
    alternatives: tuple[int, ...]       # alternatives per decision

    @classmethod
    def of(cls, diagram: InfluenceDiagram) -> "StrategySpace":
        order = tuple(diagram.temporal_order) if diagram.decisions else ()
        rows = tuple(row_count(diagram.cards(diagram.parents_of(d))) for d in order)
        alts = tuple(diagram.var(d).cardinality for d in order)
        return cls(order, rows, alts)

    @property
    def size(self) -> int:
        return math.prod(a ** r for a, r in zip(self.alternatives, self.rows))

    def local_count(self, k: int) -> int:
        return self.alternatives[k] ** self.rows[k]

    def radices(self) -> list[int]:
        return [a for a, r in zip(self.alternatives, self.rows) for _ in range(r)]

    def decode(self, sid: int) -> Strategy:
        if not 0 <= sid < self.size:
            raise ValueError(f"strategy id {sid} outside [0, {self.size})")
        digits = []
        for radix in reversed(self.radices()):
            sid, digit = divmod(sid, radix)
            digits.append(digit)
        digits.reverse()
        return Strategy(self.encode_digits(digits), self._split(digits))

    def encode(self, choices: Mapping[int, Sequence[int]]) -> int:
        digits = []
        for d, rows, alts in zip(self.decisions, self.rows, self.alternatives):
            table = tuple(choices[d])
            if len(table) != rows or any(not 0 <= a < alts for a in table):
                raise ValueError(f"bad policy table for decision {d}: {table}")
            digits.extend(table)
        return self.encode_digits(digits)

    def encode_digits(self, digits: Sequence[int]) -> int:
        sid = 0
        for digit, radix in zip(digits, self.radices()):
            sid = sid * radix + digit
        return sid

    def _split(self, digits: Sequence[int]) -> dict[int, tuple[int, ...]]:
        out = {}
        pos = 0
        for d, rows in zip(self.decisions, self.rows):
            out[d] = tuple(digits[pos:pos + rows])
            pos += rows
        return out

    def local_policies(self, k: int) -> Iterator[tuple[int, ...]]:
        """Policy tables of the k-th decision, in digit order."""
        return itertools.product(range(self.alternatives[k]), repeat=self.rows[k])

    def __iter__(self) -> Iterator[Strategy]:
        for sid, digits in enumerate(itertools.product(*(range(r) for r in self.radices()))):
            yield Strategy(sid, self._split(digits))
