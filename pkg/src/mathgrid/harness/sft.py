"""Export training-ready trajectory records from a dataset manifest.

Each record pairs the trajectory-generation prompt with the machine-derived
step-by-step solution and the canonical answer line, ready for external
chain-of-thought verbalization or direct supervised fine-tuning.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..core import DatasetExample, Equation, MathGridError, Resolution
from ..manifest import read_manifest
from ..render.markdown import cell_text
from ..solver import detect_equations
from .prompts import TRAJECTORY_TEMPLATE, load_template


def _equation_text(eq: Equation, example: DatasetExample, resolved: Resolution) -> str:
    """Render an equation with the newly resolved operand masked as '?'."""
    symbols = []
    for coord in (eq.a, eq.op_cell, eq.b, eq.eq_cell, eq.c):
        if coord == resolved.coord:
            symbols.append("?")
        else:
            symbols.append(cell_text(example.answer_grid.at(coord)))
    return " ".join(symbols)


def format_solution_steps(example: DatasetExample) -> str:
    """Numbered textual steps mirroring the deduction trace."""
    if example.trace is None:
        raise MathGridError(f"example {example.id} carries no solution trace")
    equations = {eq.id: eq for eq in detect_equations(example.grid)}
    lines = []
    for i, step in enumerate(example.trace.steps, start=1):
        lines.append(f"Step {i}:")
        for res in step:
            eq = equations[res.eq_id]
            lines.append(
                f"- {eq.orientation.value} equation "
                f"{_equation_text(eq, example, res)} gives "
                f"cell ({res.coord.row}, {res.coord.col}) = {res.value}"
            )
    return "\n".join(lines)


def answer_line(example: DatasetExample) -> str:
    return "<answer>" + " ".join(str(v) for v in example.gold_answers) + "</answer>"


def export_sft_trajectories(manifest_path: Path | str, out_path: Path | str) -> Path:
    """Write one JSONL record per manifest example."""
    template = load_template(TRAJECTORY_TEMPLATE)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as sink:
        for example in read_manifest(manifest_path):
            record = {
                "example_id": example.id,
                "prompt": template + "\n" + example.markdown.rstrip("\n") + "\n",
                "symbolic_solution": format_solution_steps(example),
                "answer": answer_line(example),
            }
            sink.write(json.dumps(record, ensure_ascii=False) + "\n")
    return out_path
