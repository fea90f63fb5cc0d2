"""Shared domain types for cross-math puzzles.

A puzzle lives on a rectangular grid of cells. Horizontal and vertical
5-cell runs of the form ``a op b = c`` are the equations; blanked operands
(targets) are what a solver or model must fill in. Everything downstream
(generation, solving, rendering, evaluation) works on these types.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover - type-only import, avoids a cycle
    from .generator import GenParams


class MathGridError(Exception):
    """Base class for all package errors."""


class Coord(NamedTuple):
    """Grid position: row 0 is the top row, col 0 the leftmost column."""

    row: int
    col: int


class Operator(enum.Enum):
    ADD = "+"
    SUB = "-"
    MUL = "×"
    DIV = "÷"

    def apply(self, a: int, b: int) -> int:
        """Apply the operator; DIV truncates (callers check exactness)."""
        if self is Operator.ADD:
            return a + b
        if self is Operator.SUB:
            return a - b
        if self is Operator.MUL:
            return a * b
        return a // b

    def holds(self, a: int, b: int, c: int) -> bool:
        """True when ``a op b = c`` is exact over the integers."""
        if self is Operator.DIV:
            return b != 0 and a == b * c
        return self.apply(a, b) == c


class CellKind(enum.Enum):
    EMPTY = "empty"
    NUMBER = "number"
    OPERATOR = "operator"
    EQUALS = "equals"
    TARGET = "target"


@dataclass(frozen=True)
class Cell:
    """One grid cell. ``value`` is set for NUMBER, ``op`` for OPERATOR."""

    kind: CellKind
    value: int | None = None
    op: Operator | None = None

    def __post_init__(self) -> None:
        if self.kind is CellKind.NUMBER:
            if self.value is None or self.value < 1:
                raise ValueError(f"number cells need a value >= 1, got {self.value}")
        elif self.value is not None:
            raise ValueError(f"{self.kind.value} cells carry no value")
        if (self.kind is CellKind.OPERATOR) != (self.op is not None):
            raise ValueError("op is set exactly for operator cells")

    @staticmethod
    def number(value: int) -> Cell:
        return Cell(CellKind.NUMBER, value=value)

    @staticmethod
    def operator(op: Operator) -> Cell:
        return Cell(CellKind.OPERATOR, op=op)

    @property
    def is_operand(self) -> bool:
        """Numbers and targets are the operand-capable cells."""
        return self.kind in (CellKind.NUMBER, CellKind.TARGET)


EMPTY = Cell(CellKind.EMPTY)
EQUALS = Cell(CellKind.EQUALS)
TARGET = Cell(CellKind.TARGET)


@dataclass(frozen=True)
class Grid:
    """Immutable rectangular cell array, row-major."""

    rows: int
    cols: int
    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be >= 1")
        if len(self.cells) != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows * self.cols} cells, got {len(self.cells)}"
            )

    @staticmethod
    def from_rows(rows: list[list[Cell]]) -> Grid:
        if not rows or not rows[0]:
            raise ValueError("need at least one row and one column")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged rows")
        return Grid(len(rows), width, tuple(c for r in rows for c in r))

    def at(self, coord: Coord | tuple[int, int]) -> Cell:
        r, c = coord
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError(f"({r}, {c}) outside {self.rows}x{self.cols} grid")
        return self.cells[r * self.cols + c]

    def __getitem__(self, coord: tuple[int, int]) -> Cell:
        return self.at(coord)

    def coords(self) -> Iterator[Coord]:
        """All coordinates in row-major order."""
        for r in range(self.rows):
            for c in range(self.cols):
                yield Coord(r, c)

    def with_answers(self, answers: list[int] | tuple[int, ...]) -> Grid:
        """Substitute answers into the target cells in target order."""
        targets = target_order(self)
        if len(answers) != len(targets):
            raise ValueError(
                f"{len(targets)} targets but {len(answers)} answers supplied"
            )
        replacements = dict(zip(targets, answers))
        new_cells = list(self.cells)
        for coord, value in replacements.items():
            new_cells[coord.row * self.cols + coord.col] = Cell.number(value)
        return Grid(self.rows, self.cols, tuple(new_cells))


class Orientation(enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


@dataclass(frozen=True)
class Equation:
    """One 5-cell arithmetic constraint ``a op b = c`` on the grid.

    The five cells (a, op_cell, b, eq_cell, c) are consecutive along the
    orientation axis; ids follow detection scan order.
    """

    id: int
    orientation: Orientation
    a: Coord
    b: Coord
    c: Coord
    op: Operator
    op_cell: Coord
    eq_cell: Coord

    @property
    def operands(self) -> tuple[Coord, Coord, Coord]:
        return (self.a, self.b, self.c)

    @property
    def start(self) -> Coord:
        return self.a


class Resolution(NamedTuple):
    """One deduced value: which equation fixed which coordinate."""

    eq_id: int
    coord: Coord
    value: int


@dataclass(frozen=True)
class SolutionTrace:
    """Deduction steps grouped by iteration, plus the completed grid.

    ``steps[i]`` holds every resolution made in iteration i+1; a coordinate
    appears at most once across all steps.
    """

    steps: tuple[tuple[Resolution, ...], ...]
    answer_grid: Grid

    def to_json(self) -> dict:
        return {
            "steps": [
                [
                    {"eq": r.eq_id, "row": r.coord.row, "col": r.coord.col, "value": r.value}
                    for r in step
                ]
                for step in self.steps
            ]
        }

    @staticmethod
    def from_json(data: dict, answer_grid: Grid) -> SolutionTrace:
        steps = tuple(
            tuple(
                Resolution(int(r["eq"]), Coord(int(r["row"]), int(r["col"])), int(r["value"]))
                for r in step
            )
            for step in data["steps"]
        )
        return SolutionTrace(steps, answer_grid)


class Difficulty(enum.Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


@dataclass(frozen=True)
class DatasetExample:
    """One benchmark instance: query grid, gold answers, and artifacts.

    ``gold_answers`` and ``hop_depths`` are aligned and ordered by
    :func:`target_order`. ``images`` maps style id to the query-image path
    (relative to the manifest that references it).
    """

    id: str
    difficulty: Difficulty
    grid: Grid
    answer_grid: Grid
    gold_answers: tuple[int, ...]
    hop_depths: tuple[int, ...]
    markdown: str
    images: dict[str, str]
    seed: int
    gen_params: "GenParams"
    trace: SolutionTrace | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        n_targets = len(target_order(self.grid))
        if len(self.gold_answers) != n_targets or len(self.hop_depths) != n_targets:
            raise ValueError("gold_answers/hop_depths must align with target cells")


def target_order(grid: Grid) -> list[Coord]:
    """Target coordinates in reading order: top to bottom, left to right.

    This single row-major scan is also what "left-to-right, top-to-bottom"
    means for a grid: rows outer, columns inner. Answers are always listed
    in this order.
    """
    return [coord for coord in grid.coords() if grid.at(coord).kind is CellKind.TARGET]
