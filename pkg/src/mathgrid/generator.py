"""Procedural construction of cross-math puzzles with unique solutions.

Layout building places intersecting 5-cell equations crossword-style on an
unbounded plane, then crops. Blank punching turns number cells into targets
so that iterated 2-of-3 deduction recovers all of them; deduction chains of
controlled length realize the difficulty's hop-depth profile. Because every
blank is forced by deduction, solutions are unique by construction (and the
brute-force oracle re-checks that in tests).
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field, replace
from math import isqrt
from pathlib import Path

from .core import (
    Cell,
    Coord,
    DatasetExample,
    Difficulty,
    EMPTY,
    EQUALS,
    Equation,
    Grid,
    MathGridError,
    Operator,
    Orientation,
    TARGET,
    target_order,
)
from .render.markdown import to_markdown
from .render.svg import STYLE_IDS, RenderView, StyleSpec, render_image, texture_seed_for
from .solver import Contradiction, Slot, Unsolvable, deduce, detect_equations

_M64 = (1 << 64) - 1


def mix_seed(seed: int, k: int) -> int:
    """Derive an independent 64-bit stream seed (splitmix64 step)."""
    z = (seed + k * 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return (z ^ (z >> 31)) & _M64


class RangeInfeasible(MathGridError):
    """The value range admits no valid triple for the requested operator."""


class LayoutFailure(MathGridError):
    """Could not place the requested equations within the retry budget."""


class ProfileInfeasible(MathGridError):
    """Could not punch a blank set matching the difficulty profile."""


_DEFAULT_MAX_HOP = {Difficulty.EASY: 1, Difficulty.MEDIUM: 4, Difficulty.HARD: 6}


@dataclass(frozen=True)
class GenParams:
    """Generation knobs: difficulty, operators, ranges, counts, seed."""

    difficulty: Difficulty
    operators: tuple[Operator, ...] = (
        Operator.ADD,
        Operator.SUB,
        Operator.MUL,
        Operator.DIV,
    )
    value_range: tuple[int, int] = (50, 250)
    equation_count: tuple[int, int] = (5, 15)
    max_hop: int = 0  # 0 means "difficulty default"
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.operators:
            raise ValueError("need at least one operator")
        lo, hi = self.value_range
        if lo < 1 or lo > hi:
            raise ValueError(f"bad value range [{lo}, {hi}]")
        n_min, n_max = self.equation_count
        if n_min < 1 or n_min > n_max:
            raise ValueError(f"bad equation count range [{n_min}, {n_max}]")
        if self.max_hop == 0:
            object.__setattr__(self, "max_hop", _DEFAULT_MAX_HOP[self.difficulty])
        if self.difficulty is Difficulty.EASY and self.max_hop != 1:
            raise ValueError("easy puzzles are single-step: max_hop must be 1")
        if self.max_hop < 1:
            raise ValueError("max_hop must be >= 1")

    def to_json(self) -> dict:
        return {
            "difficulty": self.difficulty.value,
            "operators": [op.value for op in self.operators],
            "value_range": list(self.value_range),
            "equation_count": list(self.equation_count),
            "max_hop": self.max_hop,
            "seed": self.seed,
        }

    @staticmethod
    def from_json(data: dict) -> GenParams:
        by_symbol = {op.value: op for op in Operator}
        return GenParams(
            difficulty=Difficulty(data["difficulty"]),
            operators=tuple(by_symbol[s] for s in data["operators"]),
            value_range=tuple(data["value_range"]),
            equation_count=tuple(data["equation_count"]),
            max_hop=data["max_hop"],
            seed=data["seed"],
        )


@dataclass(frozen=True)
class DifficultyProfile:
    """Blank-count and hop-depth targets for one difficulty level.

    ``target_hop_histogram`` keys are hop depths 1-4, where 4 stands for
    "4 or more". Values are desired proportions of blanks per depth.
    """

    blanks_per_equation_weights: dict[int, float]
    target_hop_histogram: dict[int, float]

    def __post_init__(self) -> None:
        for dist in (self.blanks_per_equation_weights, self.target_hop_histogram):
            total = sum(dist.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"distribution sums to {total}, not 1")


PROFILES: dict[Difficulty, DifficultyProfile] = {
    Difficulty.EASY: DifficultyProfile(
        blanks_per_equation_weights={1: 1.0, 2: 0.0},
        target_hop_histogram={1: 1.0, 2: 0.0, 3: 0.0, 4: 0.0},
    ),
    Difficulty.MEDIUM: DifficultyProfile(
        blanks_per_equation_weights={1: 0.8, 2: 0.2},
        target_hop_histogram={1: 0.781, 2: 0.156, 3: 0.054, 4: 0.009},
    ),
    Difficulty.HARD: DifficultyProfile(
        blanks_per_equation_weights={1: 0.55, 2: 0.45},
        target_hop_histogram={1: 0.482, 2: 0.237, 3: 0.163, 4: 0.118},
    ),
}


def _op_feasible(op: Operator, lo: int, hi: int) -> bool:
    if op in (Operator.ADD, Operator.SUB):
        return 2 * lo <= hi
    return lo * lo <= hi


def sample_equation(
    op: Operator, value_range: tuple[int, int], rng: random.Random
) -> tuple[int, int, int]:
    """Random exact triple ``a op b = c`` with all three values in range."""
    lo, hi = value_range
    if not _op_feasible(op, lo, hi):
        raise RangeInfeasible(f"{op.value} admits no triple within [{lo}, {hi}]")
    if op in (Operator.ADD, Operator.SUB):
        x = rng.randint(lo, hi - lo)
        y = rng.randint(lo, hi - x)
        return (x, y, x + y) if op is Operator.ADD else (x + y, x, y)
    x = rng.randint(lo, hi // lo)
    y = rng.randint(lo, hi // x)
    return (x, y, x * y) if op is Operator.MUL else (x * y, x, y)


def _ordered_divisor_pairs(v: int, lo: int, hi: int) -> list[tuple[int, int]]:
    pairs = []
    for d in range(max(lo, 1), isqrt(v) + 1):
        if v % d == 0:
            q = v // d
            if lo <= d <= hi and lo <= q <= hi:
                pairs.append((d, q))
                if q != d:
                    pairs.append((q, d))
    return sorted(pairs)


def sample_equation_at(
    op: Operator,
    slot: Slot,
    value: int,
    value_range: tuple[int, int],
    rng: random.Random,
) -> tuple[int, int, int] | None:
    """Random triple with the given slot pinned to ``value``; None if impossible."""
    lo, hi = value_range
    if not (lo <= value <= hi):
        return None

    def pick(low: int, high: int) -> int | None:
        return rng.randint(low, high) if low <= high else None

    if op is Operator.ADD:
        if slot is Slot.A:
            b = pick(lo, hi - value)
            return None if b is None else (value, b, value + b)
        if slot is Slot.B:
            a = pick(lo, hi - value)
            return None if a is None else (a, value, a + value)
        a = pick(lo, value - lo)
        return None if a is None else (a, value - a, value)
    if op is Operator.SUB:
        if slot is Slot.A:
            b = pick(lo, value - lo)
            return None if b is None else (value, b, value - b)
        if slot is Slot.B:
            c = pick(lo, hi - value)
            return None if c is None else (value + c, value, c)
        b = pick(lo, hi - value)
        return None if b is None else (b + value, b, value)
    if op is Operator.MUL:
        if slot is Slot.A:
            b = pick(lo, hi // value)
            return None if b is None else (value, b, value * b)
        if slot is Slot.B:
            a = pick(lo, hi // value)
            return None if a is None else (a, value, a * value)
        pairs = _ordered_divisor_pairs(value, lo, hi)
        if not pairs:
            return None
        a, b = rng.choice(pairs)
        return (a, b, value)
    # DIV: a = b * c
    if slot is Slot.A:
        pairs = _ordered_divisor_pairs(value, lo, hi)
        if not pairs:
            return None
        b, c = rng.choice(pairs)
        return (value, b, c)
    if slot is Slot.B:
        c = pick(lo, hi // value)
        return None if c is None else (value * c, value, c)
    b = pick(lo, hi // value)
    return None if b is None else (b * value, b, value)


# ---------------------------------------------------------------------------
# Layout construction


@dataclass
class _Board:
    """Sparse plane of placed cells during layout building."""

    cells: dict[tuple[int, int], tuple[str, object]] = field(default_factory=dict)
    owners: dict[tuple[int, int], int] = field(default_factory=lambda: defaultdict(int))
    # operand cell -> (value, owning equation index at creation time)
    operand_cells: dict[tuple[int, int], tuple[int, int]] = field(default_factory=dict)
    crossings: dict[int, int] = field(default_factory=lambda: defaultdict(int))
    eq_orientations: list[Orientation] = field(default_factory=list)
    n_equations: int = 0

    def occupied(self, pos: tuple[int, int]) -> bool:
        return pos in self.cells


_AXIS = {Orientation.HORIZONTAL: (0, 1), Orientation.VERTICAL: (1, 0)}
_SLOT_OF_OFFSET = {0: Slot.A, 2: Slot.B, 4: Slot.C}


def _span(start: tuple[int, int], orientation: Orientation) -> list[tuple[int, int]]:
    dr, dc = _AXIS[orientation]
    return [(start[0] + i * dr, start[1] + i * dc) for i in range(5)]


def _span_clear(
    board: _Board,
    start: tuple[int, int],
    orientation: Orientation,
    shared: tuple[int, int] | None,
) -> bool:
    """New cells must land on empty plane, not touching parallel content.

    The two cells flanking the 5-cell run stay empty, and every new cell's
    perpendicular neighbors must be empty; this is what rules out spurious
    or merged patterns no matter what is placed later.
    """
    dr, dc = _AXIS[orientation]
    before = (start[0] - dr, start[1] - dc)
    after = (start[0] + 5 * dr, start[1] + 5 * dc)
    if board.occupied(before) or board.occupied(after):
        return False
    for pos in _span(start, orientation):
        if pos == shared:
            if not board.occupied(pos):
                return False
            continue
        if board.occupied(pos):
            return False
        for perp in ((pos[0] + dc, pos[1] + dr), (pos[0] - dc, pos[1] - dr)):
            if board.occupied(perp):
                return False
    return True


def _place(
    board: _Board,
    start: tuple[int, int],
    orientation: Orientation,
    op: Operator,
    triple: tuple[int, int, int],
) -> None:
    span = _span(start, orientation)
    values = {0: triple[0], 2: triple[1], 4: triple[2]}
    eq_index = board.n_equations
    for i, pos in enumerate(span):
        if i in values:
            if board.occupied(pos):
                kind, existing = board.cells[pos]
                assert kind == "num" and existing == values[i]
                board.crossings[board.operand_cells[pos][1]] += 1
                board.crossings[eq_index] += 1
            else:
                board.cells[pos] = ("num", values[i])
                board.operand_cells[pos] = (values[i], eq_index)
            board.owners[pos] += 1
        elif i == 1:
            board.cells[pos] = ("op", op)
            board.owners[pos] += 1
        else:
            board.cells[pos] = ("eq", None)
            board.owners[pos] += 1
    board.eq_orientations.append(orientation)
    board.n_equations += 1


def _board_to_grid(board: _Board) -> Grid:
    rows_idx = [pos[0] for pos in board.cells]
    cols_idx = [pos[1] for pos in board.cells]
    min_r, min_c = min(rows_idx), min(cols_idx)
    height = max(rows_idx) - min_r + 1
    width = max(cols_idx) - min_c + 1
    rows: list[list[Cell]] = [[EMPTY] * width for _ in range(height)]
    for (r, c), (kind, payload) in board.cells.items():
        if kind == "num":
            cell = Cell.number(payload)
        elif kind == "op":
            cell = Cell.operator(payload)
        else:
            cell = EQUALS
        rows[r - min_r][c - min_c] = cell
    return Grid.from_rows(rows)


def _try_layout(
    n_eq: int,
    ops: tuple[Operator, ...],
    value_range: tuple[int, int],
    rng: random.Random,
) -> Grid | None:
    board = _Board()
    first_op = rng.choice(ops)
    _place(board, (0, 0), Orientation.HORIZONTAL, first_op, sample_equation(first_op, value_range, rng))

    for _ in range(n_eq - 1):
        placed = False
        for _attempt in range(40):
            anchors = [
                (pos, value, owner)
                for pos, (value, owner) in board.operand_cells.items()
                if board.owners[pos] == 1
            ]
            if not anchors:
                return None
            # spread crossings around: hub equations starve the blank punch
            quiet = [a for a in anchors if board.crossings[a[2]] <= 1]
            if quiet and rng.random() < 0.8:
                anchors = quiet
            pos, value, owner = rng.choice(anchors)
            owner_orientation = board.eq_orientations[owner]
            orientation = (
                Orientation.VERTICAL
                if owner_orientation is Orientation.HORIZONTAL
                else Orientation.HORIZONTAL
            )
            offset = rng.choice((0, 2, 4))
            dr, dc = _AXIS[orientation]
            start = (pos[0] - offset * dr, pos[1] - offset * dc)
            if not _span_clear(board, start, orientation, pos):
                continue
            for op in rng.sample(ops, len(ops)):
                triple = sample_equation_at(op, _SLOT_OF_OFFSET[offset], value, value_range, rng)
                if triple is not None:
                    _place(board, start, orientation, op, triple)
                    placed = True
                    break
            if placed:
                break
        if not placed:
            return None
    return _board_to_grid(board)


def build_solved_layout(
    params: GenParams, rng: random.Random, *, retries: int = 200
) -> tuple[Grid, list[Equation]]:
    """Build a fully solved, connected layout of intersecting equations."""
    lo, hi = params.value_range
    ops = tuple(op for op in params.operators if _op_feasible(op, lo, hi))
    if not ops:
        symbols = "".join(op.value for op in params.operators)
        raise RangeInfeasible(f"no operator of {symbols!r} fits range [{lo}, {hi}]")
    n_eq = rng.randint(*params.equation_count)
    for _ in range(retries):
        grid = _try_layout(n_eq, ops, params.value_range, rng)
        if grid is None:
            continue
        equations = detect_equations(grid)
        if len(equations) == n_eq:
            return grid, equations
    raise LayoutFailure(f"no {n_eq}-equation layout found in {retries} attempts")


# ---------------------------------------------------------------------------
# Blank punching


def _plan_chains(
    profile: DifficultyProfile, n_eq: int, max_hop: int, rng: random.Random
) -> list[int]:
    """Chain lengths to carve, deepest first; one blank lands on each hop
    level up to the chain's length.

    A chain of length L makes L-1 equations carry two blanks, so the
    profile's two-blank weight caps the total chain mass.
    """
    hist = profile.target_hop_histogram
    deep_mass = sum(hist.get(k, 0.0) for k in (2, 3, 4))
    if deep_mass == 0 or n_eq < 2 or max_hop < 2:
        return []
    two_blank_cap = int(n_eq * profile.blanks_per_equation_weights.get(2, 0.0) * 1.4) + 1
    contrib = defaultdict(int)
    plan: list[int] = []
    budget = n_eq
    two_blank_used = 0
    for level in (4, 3, 2):
        if level > max_hop:
            continue
        deficit = hist.get(level, 0.0) * n_eq - contrib[level]
        count = int(deficit) + (1 if rng.random() < deficit - int(deficit) else 0)
        for _ in range(count):
            if level < 4:
                length = level
            else:  # mostly plain 4-chains; longer ones inflate the 4+ bucket
                length = min(4 + (1 if rng.random() < 0.25 else 0), max_hop)
            length = min(length, budget, two_blank_cap - two_blank_used + 1)
            if length < 2:
                break
            plan.append(length)
            budget -= length
            two_blank_used += length - 1
            for j in range(2, length + 1):
                contrib[min(j, 4)] += 1
    if not plan:
        plan = [min(2, max_hop, n_eq)] if min(max_hop, n_eq) >= 2 else []
    return sorted(plan, reverse=True)


def _build_eq_graph(
    equations: list[Equation],
) -> tuple[dict[Coord, list[int]], dict[int, dict[int, Coord]]]:
    cell_eqs: dict[Coord, list[int]] = defaultdict(list)
    for eq in equations:
        for coord in eq.operands:
            cell_eqs[coord].append(eq.id)
    neighbors: dict[int, dict[int, Coord]] = defaultdict(dict)
    for coord, ids in cell_eqs.items():
        if len(ids) == 2:
            neighbors[ids[0]][ids[1]] = coord
            neighbors[ids[1]][ids[0]] = coord
    return cell_eqs, neighbors


def _carve_chain(
    length: int,
    equations: list[Equation],
    cell_eqs: dict[Coord, list[int]],
    neighbors: dict[int, dict[int, Coord]],
    eq_blanks: dict[int, set[Coord]],
    rng: random.Random,
) -> list[Coord] | None:
    """Pick a path of blank-free equations and blank its junction cells.

    The tail equation of the path resolves first; each junction then enables
    the next equation, and a private cell of the head resolves last, at a
    hop depth equal to the path length.
    """
    eligible = [eq.id for eq in equations if not eq_blanks[eq.id]]
    for _ in range(30):
        if not eligible:
            return None
        path = [rng.choice(eligible)]
        while len(path) < length:
            options = [
                nxt
                for nxt in neighbors[path[-1]]
                if nxt not in path and not eq_blanks[nxt]
            ]
            if not options:
                break
            path.append(rng.choice(sorted(options)))
        if len(path) < length:
            continue
        head = next(eq for eq in equations if eq.id == path[0])
        private = [c for c in head.operands if len(cell_eqs[c]) == 1]
        if not private:
            continue
        blanks = [rng.choice(sorted(private))]
        for i in range(length - 1):
            blanks.append(neighbors[path[i]][path[i + 1]])
        # path[i] owns its private-or-incoming junction plus the outgoing one
        for i, eq_id in enumerate(path):
            eq_blanks[eq_id].add(blanks[i])
            if i + 1 < len(blanks):
                eq_blanks[eq_id].add(blanks[i + 1])
        return blanks
    return None


def _cover_remaining(
    equations: list[Equation],
    cell_eqs: dict[Coord, list[int]],
    eq_blanks: dict[int, set[Coord]],
    rng: random.Random,
) -> bool:
    """Give every blank-free equation exactly one blank (possibly shared)."""
    order = rng.sample(equations, len(equations))
    for eq in order:
        if eq_blanks[eq.id]:
            continue
        candidates = [
            c
            for c in eq.operands
            if all(not eq_blanks[other] for other in cell_eqs[c])
        ]
        if not candidates:
            return False
        # prefer non-shared cells so the blank count tracks the equation count
        private = [c for c in candidates if len(cell_eqs[c]) == 1]
        pool = private if private and rng.random() < 0.95 else candidates
        chosen = rng.choice(pool)
        for other in cell_eqs[chosen]:
            eq_blanks[other].add(chosen)
    return True


def _apply_blanks(answer_grid: Grid, blanks: set[Coord]) -> Grid:
    cells = list(answer_grid.cells)
    for coord in blanks:
        cells[coord.row * answer_grid.cols + coord.col] = TARGET
    return Grid(answer_grid.rows, answer_grid.cols, tuple(cells))


def punch_blanks(
    answer_grid: Grid,
    equations: list[Equation],
    profile: DifficultyProfile,
    rng: random.Random,
    *,
    max_hop: int,
    retries: int = 200,
) -> Grid:
    """Blank number cells so deduction recovers all of them within max_hop.

    Chains are carved first to hit the profile's deep-hop proportions
    (best effort), then every remaining equation receives one blank that
    resolves immediately. A full deduction check gates every candidate set.
    """
    cell_eqs, neighbors = _build_eq_graph(equations)
    wants_depth = any(profile.target_hop_histogram.get(k, 0) > 0 for k in (2, 3, 4))
    can_deepen = len(equations) >= 2 and max_hop >= 2

    for attempt in range(retries):
        plan = _plan_chains(profile, len(equations), max_hop, rng)
        if attempt > retries // 2:
            plan = plan[: len(plan) // 2] or plan[:1]
        if attempt > (3 * retries) // 4 and can_deepen and wants_depth:
            plan = [2]
        eq_blanks: dict[int, set[Coord]] = defaultdict(set)
        carved_all = True
        for length in plan:
            if _carve_chain(length, equations, cell_eqs, neighbors, eq_blanks, rng) is None:
                carved_all = False
                break
        if not carved_all:
            continue
        if not _cover_remaining(equations, cell_eqs, eq_blanks, rng):
            continue
        blanks = set().union(*eq_blanks.values()) if eq_blanks else set()
        query = _apply_blanks(answer_grid, blanks)
        try:
            _, hops = deduce(query)
        except (Unsolvable, Contradiction):
            continue
        realized_max = max(hops.values(), default=1)
        if realized_max > max_hop:
            continue
        if wants_depth and can_deepen and realized_max < 2:
            continue
        return query
    raise ProfileInfeasible(
        f"no blank set matching the profile after {retries} attempts"
    )


# ---------------------------------------------------------------------------
# Full pipeline


def _image_file_names(example_id: str) -> dict[str, dict[str, str]]:
    return {
        style: {
            "query": f"images/{example_id}.query.{style}.svg",
            "solution": f"images/{example_id}.solution.{style}.svg",
        }
        for style in STYLE_IDS
    }


def generate(
    params: GenParams,
    *,
    out_dir: Path | str | None = None,
    example_id: str | None = None,
) -> DatasetExample:
    """Generate one example: layout, blanks, trace, markdown, and images.

    Fully deterministic for fixed params. Images (all four styles, query and
    solution views) are written under ``out_dir/images`` when ``out_dir`` is
    given; the example's image map holds the query paths relative to
    ``out_dir``.
    """
    last_error: MathGridError | None = None
    for round_ in range(30):
        rng = random.Random(params.seed if round_ == 0 else mix_seed(params.seed, round_))
        try:
            answer_grid, equations = build_solved_layout(params, rng)
            query = punch_blanks(
                answer_grid,
                equations,
                PROFILES[params.difficulty],
                rng,
                max_hop=params.max_hop,
            )
            break
        except (LayoutFailure, ProfileInfeasible) as exc:
            last_error = exc
    else:
        raise last_error

    trace, hops = deduce(query)
    targets = target_order(query)
    gold_answers = tuple(trace.answer_grid.at(c).value for c in targets)
    hop_depths = tuple(hops[c] for c in targets)
    markdown = to_markdown(query)
    if example_id is None:
        example_id = f"{params.difficulty.value}_{params.seed:016x}"

    images: dict[str, str] = {}
    names = _image_file_names(example_id)
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "images").mkdir(parents=True, exist_ok=True)
        texture_seed = texture_seed_for(example_id)
        for style_id in STYLE_IDS:
            style = StyleSpec.of(style_id)
            query_bytes = render_image(query, style, RenderView.QUERY, texture_seed)
            solution_bytes = render_image(
                query, style, RenderView.SOLUTION, texture_seed, answers=gold_answers
            )
            (out_dir / names[style_id]["query"]).write_bytes(query_bytes)
            (out_dir / names[style_id]["solution"]).write_bytes(solution_bytes)
            images[style_id] = names[style_id]["query"]

    return DatasetExample(
        id=example_id,
        difficulty=params.difficulty,
        grid=query,
        answer_grid=trace.answer_grid,
        gold_answers=gold_answers,
        hop_depths=hop_depths,
        markdown=markdown,
        images=images,
        seed=params.seed,
        gen_params=params,
        trace=trace,
    )


def generate_batch(
    params: GenParams,
    count: int,
    *,
    out_dir: Path | str | None = None,
) -> list[DatasetExample]:
    """Generate ``count`` examples with per-example seeds derived from
    ``params.seed``; safe to parallelize since every call is independent."""
    examples = []
    for index in range(count):
        example_seed = mix_seed(params.seed, index + 1)
        example = generate(
            replace(params, seed=example_seed),
            out_dir=out_dir,
            example_id=f"{params.difficulty.value}_{params.seed}_{index:04d}",
        )
        examples.append(example)
    return examples
