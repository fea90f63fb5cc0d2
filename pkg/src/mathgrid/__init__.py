"""Cross-math puzzles: generation, solving, rendering, and model evaluation.

The pipeline runs grid-first: a solved crossword-style layout of arithmetic
equations is built, operand cells are blanked into targets whose values are
recoverable by iterative deduction, and the resulting puzzle is serialized
into information-equivalent markdown and SVG forms. The harness sends those
to a chat-completion endpoint and scores the answers.
"""

from .core import (
    Cell,
    CellKind,
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
    Resolution,
    SolutionTrace,
    TARGET,
    target_order,
)
from .generator import (
    DifficultyProfile,
    GenParams,
    PROFILES,
    build_solved_layout,
    generate,
    generate_batch,
    punch_blanks,
    sample_equation,
)
from .solver import (
    brute_force_oracle,
    deduce,
    detect_equations,
    solve_missing,
    verify_solution,
)

__version__ = "0.1.0"

__all__ = [
    "Cell",
    "CellKind",
    "Coord",
    "DatasetExample",
    "Difficulty",
    "EMPTY",
    "EQUALS",
    "Equation",
    "Grid",
    "MathGridError",
    "Operator",
    "Orientation",
    "Resolution",
    "SolutionTrace",
    "TARGET",
    "target_order",
    "DifficultyProfile",
    "GenParams",
    "PROFILES",
    "build_solved_layout",
    "generate",
    "generate_batch",
    "punch_blanks",
    "sample_equation",
    "brute_force_oracle",
    "deduce",
    "detect_equations",
    "solve_missing",
    "verify_solution",
    "__version__",
]
