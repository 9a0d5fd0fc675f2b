"""IRMA codes, hierarchical retrieval error and the error x length suitability score.

An IRMA code has four axes (technical, directional, anatomical,
biological) of 4, 3, 3 and 3 characters, written ``TTTT-DDD-AAA-BBB``.
The error of retrieving code ``r`` for query ``q`` is::

    sum over axes j, positions i:  (1 / b[j][i]) * (1 / i) * delta(j, i)

where ``delta(j, i)`` is 1 when any position ``h <= i`` on axis ``j``
differs, and ``b[j][i]`` is the number of possible characters at that
position.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

AXIS_LENGTHS = (4, 3, 3, 3)
AXIS_NAMES = ("T", "D", "A", "B")

_CODE = re.compile(r"^([0-9A-Za-z]{4})--?([0-9A-Za-z]{3})--?([0-9A-Za-z]{3})--?([0-9A-Za-z]{3})$")


class IrmaCodeError(ValueError):
    pass


@dataclass(frozen=True)
class IrmaCode:
    axes: tuple[str, str, str, str]

    def __post_init__(self):
        if tuple(len(a) for a in self.axes) != AXIS_LENGTHS:
            raise IrmaCodeError(f"axis lengths must be {AXIS_LENGTHS}, got {self.axes}")

    def char(self, axis: int, position: int) -> str:
        """1-based access: ``char(2, 2)`` of ``1121-4a0-914-700`` is ``'a'``."""
        return self.axes[axis - 1][position - 1]

    def __str__(self):
        return "-".join(self.axes)


def parse_irma(code: str) -> IrmaCode:
    m = _CODE.match(code.strip())
    if m is None:
        raise IrmaCodeError(f"not an IRMA code of the form TTTT-DDD-AAA-BBB: {code!r}")
    return IrmaCode(m.groups())


@dataclass(frozen=True)
class BranchTable:
    """Branching factor ``b[j][i]`` for every axis/position (stored 0-based)."""

    b: tuple[tuple[int, ...], ...]
    source: str = "user"

    def __post_init__(self):
        if tuple(len(row) for row in self.b) != AXIS_LENGTHS:
            raise ValueError(f"branch table rows must have lengths {AXIS_LENGTHS}")
        if any(int(x) != x or x < 1 for row in self.b for x in row):
            raise ValueError("branch factors must be integers >= 1")

    def at(self, axis: int, position: int) -> int:
        return self.b[axis - 1][position - 1]

    @classmethod
    def uniform(cls, value: int) -> "BranchTable":
        return cls(tuple((value,) * n for n in AXIS_LENGTHS), source=f"uniform({value})")


def build_branch_table(codes: Iterable[IrmaCode]) -> BranchTable:
    """Count the distinct characters seen at each position of a corpus."""
    seen = [[set() for _ in range(n)] for n in AXIS_LENGTHS]
    count = 0
    for code in codes:
        count += 1
        for j, axis in enumerate(code.axes):
            for i, ch in enumerate(axis):
                seen[j][i].add(ch)
    if count == 0:
        raise ValueError("cannot derive a branch table from an empty corpus")
    return BranchTable(tuple(tuple(max(1, len(s)) for s in row) for row in seen),
                       source=f"corpus({count} codes)")


def load_branch_table(path: str | os.PathLike) -> BranchTable:
    """Read a text table: one line per axis, whitespace-separated integers."""
    with open(path, encoding="utf-8") as fh:
        rows = [line.split() for line in fh if line.strip() and not line.lstrip().startswith("#")]
    try:
        table = tuple(tuple(int(x) for x in row) for row in rows)
    except ValueError as exc:
        raise ValueError(f"{path}: branch factors must be integers") from exc
    return BranchTable(table, source=os.fspath(path))


def save_branch_table(table: BranchTable, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in table.b:
            fh.write(" ".join(str(x) for x in row) + "\n")


def delta(query: IrmaCode, retrieved: IrmaCode, axis: int, position: int) -> int:
    if not 1 <= axis <= 4 or not 1 <= position <= AXIS_LENGTHS[axis - 1]:
        raise IndexError(f"no position {position} on axis {axis}")
    q, r = query.axes[axis - 1], retrieved.axes[axis - 1]
    return int(q[:position] != r[:position])


def axis_errors(query: IrmaCode, retrieved: IrmaCode, table: BranchTable) -> tuple[float, ...]:
    """Per-axis contributions to :func:`pair_error`."""
    out = []
    for j, n in enumerate(AXIS_LENGTHS, start=1):
        out.append(math.fsum(delta(query, retrieved, j, i) / (table.at(j, i) * i)
                             for i in range(1, n + 1)))
    return tuple(out)


def pair_error(query: IrmaCode, retrieved: IrmaCode, table: BranchTable) -> float:
    return math.fsum(axis_errors(query, retrieved, table))


def total_error(pairs: Sequence[tuple[IrmaCode, IrmaCode]], table: BranchTable) -> float:
    if not pairs:
        raise ValueError("total_error needs at least one (query, retrieved) pair")
    return math.fsum(pair_error(q, r, table) for q, r in pairs)


# ---------------------------------------------------------------- suitability

@dataclass(frozen=True)
class EvalRecord:
    method_name: str
    e_total: float
    l_code: int
    eta_suitability: float | None = None

    def __post_init__(self):
        if self.e_total < 0:
            raise ValueError(f"E_total must be >= 0, got {self.e_total}")
        if self.l_code < 1:
            raise ValueError(f"L_code must be >= 1, got {self.l_code}")


def eta_suitability(record: EvalRecord, e_max: float, l_max: int) -> float:
    """``(E_max * L_max) / (E_total * L_code)``; larger means lower error and shorter code."""
    denom = record.e_total * record.l_code
    if denom == 0:
        raise ZeroDivisionError(f"{record.method_name}: E_total * L_code is zero")
    return (e_max * l_max) / denom


def rank_by_suitability(records: Sequence[EvalRecord], e_max: float | None = None,
                        l_max: int | None = None) -> list[EvalRecord]:
    """Fill in eta for every record and sort descending.

    Maxima default to the largest E_total and L_code among ``records``.
    """
    if not records:
        return []
    e_max = max(r.e_total for r in records) if e_max is None else e_max
    l_max = max(r.l_code for r in records) if l_max is None else l_max
    scored = [EvalRecord(r.method_name, r.e_total, r.l_code, eta_suitability(r, e_max, l_max))
              for r in records]
    return sorted(scored, key=lambda r: -r.eta_suitability)
