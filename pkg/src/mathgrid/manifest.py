"""JSONL dataset manifests: one serialized example per line.

The grid itself is stored as its markdown form (the two are equivalent by
the round-trip contract), so a manifest line carries everything needed to
rebuild the example except the image files it references.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .core import DatasetExample, Difficulty, SolutionTrace
from .generator import GenParams
from .render.markdown import parse_markdown


def example_to_json(example: DatasetExample) -> dict:
    data = {
        "id": example.id,
        "difficulty": example.difficulty.value,
        "seed": example.seed,
        "markdown": example.markdown,
        "gold_answers": list(example.gold_answers),
        "hop_depths": list(example.hop_depths),
        "images": dict(example.images),
        "gen_params": example.gen_params.to_json(),
    }
    if example.trace is not None:
        data["trace"] = example.trace.to_json()
    return data


def example_from_json(data: dict) -> DatasetExample:
    grid = parse_markdown(data["markdown"])
    answer_grid = grid.with_answers(data["gold_answers"])
    trace = None
    if "trace" in data:
        trace = SolutionTrace.from_json(data["trace"], answer_grid)
    return DatasetExample(
        id=data["id"],
        difficulty=Difficulty(data["difficulty"]),
        grid=grid,
        answer_grid=answer_grid,
        gold_answers=tuple(data["gold_answers"]),
        hop_depths=tuple(data["hop_depths"]),
        markdown=data["markdown"],
        images=dict(data["images"]),
        seed=data["seed"],
        gen_params=GenParams.from_json(data["gen_params"]),
        trace=trace,
    )


def dumps_line(example: DatasetExample) -> str:
    return json.dumps(example_to_json(example), ensure_ascii=False, sort_keys=True)


def write_manifest(examples: Iterable[DatasetExample], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for example in examples:
            fh.write(dumps_line(example) + "\n")
    return path


def read_manifest(path: Path | str) -> Iterator[DatasetExample]:
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield example_from_json(json.loads(line))


def load_manifest(path: Path | str) -> list[DatasetExample]:
    return list(read_manifest(path))
