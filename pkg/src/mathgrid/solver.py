"""Equation topology detection and iterative deduction.

``detect_equations`` finds every horizontal/vertical 5-cell pattern
``operand op operand = operand``. ``deduce`` then solves all target cells
by repeated 2-of-3 inference with synchronized per-iteration commits, so
each step depends only on earlier iterations. ``brute_force_oracle`` is an
independent exhaustive check used to confirm uniqueness and correctness.
"""

from __future__ import annotations

import enum

from .core import (
    Cell,
    CellKind,
    Coord,
    Equation,
    Grid,
    MathGridError,
    Operator,
    Orientation,
    Resolution,
    SolutionTrace,
    target_order,
)

HopMap = dict[Coord, int]


class MalformedGrid(MathGridError):
    """An operator or equals cell is not part of any 5-cell equation."""


class NoIntegerSolution(MathGridError):
    """No positive integer completes the equation."""


class Unsolvable(MathGridError):
    """Deduction reached a fixpoint with unresolved targets."""


class Contradiction(MathGridError):
    """Two deductions disagree, or a fully known equation is false."""


class ArityMismatch(MathGridError):
    """Answer list length differs from the number of targets."""


class CapExceeded(MathGridError):
    """Brute-force request outside the configured enumeration caps."""


class Slot(enum.Enum):
    """Position of an operand within ``a op b = c``."""

    A = "a"
    B = "b"
    C = "c"


_PATTERN_OFFSETS = (0, 1, 2, 3, 4)  # operand, op, operand, equals, operand


def _window_matches(cells: list[Cell]) -> bool:
    return (
        cells[0].is_operand
        and cells[1].kind is CellKind.OPERATOR
        and cells[2].is_operand
        and cells[3].kind is CellKind.EQUALS
        and cells[4].is_operand
    )


def _is_clear(grid: Grid, r: int, c: int) -> bool:
    """Out-of-bounds or empty; anything else would extend the run."""
    if not (0 <= r < grid.rows and 0 <= c < grid.cols):
        return True
    return grid.at((r, c)).kind is CellKind.EMPTY


def detect_equations(grid: Grid) -> list[Equation]:
    """Find all equations; horizontal ones first, each set in scan order.

    Raises MalformedGrid when an operator or equals cell is left over, which
    happens for runs longer or shorter than the exact 5-cell pattern.
    """
    found: list[tuple[Orientation, Coord, Operator]] = []
    for r in range(grid.rows):
        for c in range(grid.cols - 4):
            window = [grid.at((r, c + i)) for i in _PATTERN_OFFSETS]
            if _window_matches(window) and _is_clear(grid, r, c - 1) and _is_clear(grid, r, c + 5):
                found.append((Orientation.HORIZONTAL, Coord(r, c), window[1].op))
    for r in range(grid.rows - 4):
        for c in range(grid.cols):
            window = [grid.at((r + i, c)) for i in _PATTERN_OFFSETS]
            if _window_matches(window) and _is_clear(grid, r - 1, c) and _is_clear(grid, r + 5, c):
                found.append((Orientation.VERTICAL, Coord(r, c), window[1].op))

    equations = []
    for eq_id, (orientation, start, op) in enumerate(found):
        dr, dc = (0, 1) if orientation is Orientation.HORIZONTAL else (1, 0)
        cells = [Coord(start.row + i * dr, start.col + i * dc) for i in _PATTERN_OFFSETS]
        equations.append(
            Equation(
                id=eq_id,
                orientation=orientation,
                a=cells[0],
                b=cells[2],
                c=cells[4],
                op=op,
                op_cell=cells[1],
                eq_cell=cells[3],
            )
        )

    op_cells = {eq.op_cell for eq in equations}
    eq_cells = {eq.eq_cell for eq in equations}
    for coord in grid.coords():
        kind = grid.at(coord).kind
        if kind is CellKind.OPERATOR and coord not in op_cells:
            raise MalformedGrid(f"operator at {tuple(coord)} belongs to no equation")
        if kind is CellKind.EQUALS and coord not in eq_cells:
            raise MalformedGrid(f"equals sign at {tuple(coord)} belongs to no equation")
    return equations


def solve_missing(op: Operator, unknown: Slot, known1: int, known2: int) -> int:
    """Solve ``a op b = c`` for the one unknown slot.

    ``known1``/``known2`` are the two known values in slot order. The result
    must be a positive integer; range limits are the generator's concern.
    """
    if unknown is Slot.A:
        b, c = known1, known2
        if op is Operator.ADD:
            result = c - b
        elif op is Operator.SUB:
            result = b + c
        elif op is Operator.MUL:
            if b == 0 or c % b != 0:
                raise NoIntegerSolution(f"? × {b} = {c} has no integer solution")
            result = c // b
        else:
            result = b * c
    elif unknown is Slot.B:
        a, c = known1, known2
        if op is Operator.ADD:
            result = c - a
        elif op is Operator.SUB:
            result = a - c
        elif op is Operator.MUL:
            if a == 0 or c % a != 0:
                raise NoIntegerSolution(f"{a} × ? = {c} has no integer solution")
            result = c // a
        else:
            if c == 0 or a % c != 0:
                raise NoIntegerSolution(f"{a} ÷ ? = {c} has no integer solution")
            result = a // c
    else:
        a, b = known1, known2
        if op is Operator.DIV:
            if b == 0 or a % b != 0:
                raise NoIntegerSolution(f"{a} ÷ {b} is not an integer")
            result = a // b
        else:
            result = op.apply(a, b)
    if result < 1:
        raise NoIntegerSolution(
            f"slot {unknown.value} of {op.value} with knowns {known1}, {known2} "
            f"would be {result}, below 1"
        )
    return result


def _initial_knowns(grid: Grid) -> dict[Coord, int]:
    return {
        coord: grid.at(coord).value
        for coord in grid.coords()
        if grid.at(coord).kind is CellKind.NUMBER
    }


def deduce(grid: Grid) -> tuple[SolutionTrace, HopMap]:
    """Resolve every target by iterated 2-of-3 deduction.

    Each iteration scans all unresolved equations; any with at least two
    known operands resolves (or, fully known, is consistency-checked). New
    values are committed only after the iteration finishes, so a step never
    depends on values found within the same step.
    """
    equations = detect_equations(grid)
    known = _initial_knowns(grid)
    targets = set(target_order(grid))
    open_eqs = {eq.id: eq for eq in equations}
    steps: list[tuple[Resolution, ...]] = []

    while True:
        pending: dict[Coord, Resolution] = {}
        closed: list[int] = []
        for eq in sorted(open_eqs.values(), key=lambda e: e.id):
            values = [known.get(coord) for coord in eq.operands]
            missing = [i for i, v in enumerate(values) if v is None]
            if len(missing) > 1:
                continue
            if not missing:
                a, b, c = values
                if not eq.op.holds(a, b, c):
                    raise Contradiction(
                        f"equation {eq.id}: {a} {eq.op.value} {b} != {c}"
                    )
                closed.append(eq.id)
                continue
            slot = (Slot.A, Slot.B, Slot.C)[missing[0]]
            knowns = [v for v in values if v is not None]
            try:
                value = solve_missing(eq.op, slot, knowns[0], knowns[1])
            except NoIntegerSolution as exc:
                raise Contradiction(f"equation {eq.id}: {exc}") from exc
            coord = eq.operands[missing[0]]
            earlier = pending.get(coord)
            if earlier is not None:
                if earlier.value != value:
                    raise Contradiction(
                        f"cell {tuple(coord)} deduced as both {earlier.value} "
                        f"(eq {earlier.eq_id}) and {value} (eq {eq.id})"
                    )
                # same value from a higher-id equation: keep the first
            else:
                pending[coord] = Resolution(eq.id, coord, value)
            closed.append(eq.id)

        for eq_id in closed:
            del open_eqs[eq_id]
        if not pending:
            break
        step = tuple(sorted(pending.values(), key=lambda r: r.eq_id))
        steps.append(step)
        for res in step:
            known[res.coord] = res.value

    unresolved = targets - set(known)
    if unresolved:
        where = sorted(tuple(c) for c in unresolved)
        raise Unsolvable(f"targets {where} cannot be deduced")

    answers = [known[coord] for coord in target_order(grid)]
    answer_grid = grid.with_answers(answers)
    hops: HopMap = {}
    for i, step in enumerate(steps):
        for res in step:
            hops[res.coord] = i + 1
    return SolutionTrace(tuple(steps), answer_grid), hops


def verify_solution(grid: Grid, answers: list[int] | tuple[int, ...]) -> bool:
    """Substitute answers in target order and check every equation exactly."""
    targets = target_order(grid)
    if len(answers) != len(targets):
        raise ArityMismatch(f"{len(targets)} targets, {len(answers)} answers")
    equations = detect_equations(grid)
    values = _initial_knowns(grid)
    values.update(zip(targets, answers))
    return all(
        eq.op.holds(values[eq.a], values[eq.b], values[eq.c]) for eq in equations
    )


def brute_force_oracle(
    grid: Grid,
    value_range: tuple[int, int],
    *,
    max_targets: int = 6,
    max_span: int = 300,
) -> list[list[int]]:
    """Every assignment of targets to [lo, hi] that satisfies all equations.

    Exhaustive backtracking over target values; branches are cut only when a
    fully assigned equation is already false, so the result set is exactly
    what plain enumeration would return. Targets tied into nearly complete
    equations are assigned first to keep the search shallow.
    """
    lo, hi = value_range
    targets = target_order(grid)
    if len(targets) > max_targets:
        raise CapExceeded(f"{len(targets)} targets exceeds cap {max_targets}")
    if hi - lo > max_span:
        raise CapExceeded(f"range span {hi - lo} exceeds cap {max_span}")

    equations = detect_equations(grid)
    fixed = _initial_knowns(grid)
    target_set = set(targets)
    eqs_by_target: dict[Coord, list[Equation]] = {t: [] for t in targets}
    for eq in equations:
        unknowns = [c for c in eq.operands if c in target_set]
        if not unknowns:
            a, b, c = (fixed[x] for x in eq.operands)
            if not eq.op.holds(a, b, c):
                return []
        for coord in unknowns:
            eqs_by_target[coord].append(eq)

    assignment: dict[Coord, int] = {}
    results: list[list[int]] = []

    def lookup(coord: Coord) -> int | None:
        v = fixed.get(coord)
        return v if v is not None else assignment.get(coord)

    def consistent(coord: Coord) -> bool:
        for eq in eqs_by_target[coord]:
            vals = [lookup(x) for x in eq.operands]
            if None not in vals and not eq.op.holds(*vals):
                return False
        return True

    def next_target(open_targets: list[Coord]) -> Coord:
        def open_count(t: Coord) -> tuple[int, Coord]:
            counts = [
                sum(1 for x in eq.operands if x in target_set and x not in assignment)
                for eq in eqs_by_target[t]
            ]
            return (min(counts) if counts else 4, t)

        return min(open_targets, key=open_count)

    def search(open_targets: list[Coord]) -> None:
        if not open_targets:
            results.append([assignment[t] for t in targets])
            return
        t = next_target(open_targets)
        rest = [x for x in open_targets if x != t]
        for v in range(lo, hi + 1):
            assignment[t] = v
            if consistent(t):
                search(rest)
            del assignment[t]

    search(list(targets))
    return results
