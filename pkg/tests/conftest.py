from __future__ import annotations

import pytest

from mathgrid import (
    Cell,
    Difficulty,
    EMPTY,
    EQUALS,
    GenParams,
    Grid,
    Operator,
    TARGET,
    generate,
)
from mathgrid.generator import mix_seed
from mathgrid.manifest import write_manifest

# 9x7 grid with four targets; unique solution [6, 93, 45, 8] in reading order.
REFERENCE_MARKDOWN = """\
|    |    |    |    | ?  |    |    |
|    |    |    |    | +  |    |    |
| 28 |    | ?  | ÷  | 3  | =  | 31 |
| +  |    |    |    | =  |    |    |
| ?  | ÷  | 5  | =  | 9  |    |    |
| =  |    | ×  |    |    |    |    |
| 73 |    | ?  | +  | 57 | =  | 65 |
|    |    | =  |    |    |    |    |
|    |    | 40 |    |    |    |    |
"""

REFERENCE_ANSWERS = [6, 93, 45, 8]


def _n(v: int) -> Cell:
    return Cell.number(v)


def _op(symbol: str) -> Cell:
    return Cell.operator(Operator(symbol))


def reference_grid() -> Grid:
    """The reference puzzle built cell by cell (independent of the parser)."""
    e = EMPTY
    rows = [
        [e, e, e, e, TARGET, e, e],
        [e, e, e, e, _op("+"), e, e],
        [_n(28), e, TARGET, _op("÷"), _n(3), EQUALS, _n(31)],
        [_op("+"), e, e, e, EQUALS, e, e],
        [TARGET, _op("÷"), _n(5), EQUALS, _n(9), e, e],
        [EQUALS, e, _op("×"), e, e, e, e],
        [_n(73), e, TARGET, _op("+"), _n(57), EQUALS, _n(65)],
        [e, e, EQUALS, e, e, e, e],
        [e, e, _n(40), e, e, e, e],
    ]
    return Grid.from_rows(rows)


@pytest.fixture(scope="session")
def appendix_grid() -> Grid:
    return reference_grid()


@pytest.fixture(scope="session")
def mixed_corpus() -> list:
    """Reusable examples across all difficulties, default parameters."""
    out = []
    for difficulty in Difficulty:
        for i in range(25):
            out.append(
                generate(GenParams(difficulty=difficulty, seed=mix_seed(99, i)))
            )
    return out


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """Small on-disk dataset with images, shared by harness and CLI tests."""
    root = tmp_path_factory.mktemp("dataset")
    examples = []
    for i in range(6):
        params = GenParams(
            difficulty=Difficulty.EASY, equation_count=(3, 6), seed=mix_seed(7, i)
        )
        examples.append(
            generate(params, out_dir=root, example_id=f"easy_fixture_{i:02d}")
        )
    for i in range(6):
        params = GenParams(
            difficulty=Difficulty.MEDIUM, equation_count=(5, 9), seed=mix_seed(11, i)
        )
        examples.append(
            generate(params, out_dir=root, example_id=f"medium_fixture_{i:02d}")
        )
    write_manifest(examples, root / "manifest.jsonl")
    return root
