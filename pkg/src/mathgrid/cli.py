"""Command-line entry point: generate, render, solve, export-sft, bench."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import Difficulty, MathGridError, Operator, target_order
from .evaluation import format_metrics_table
from .generator import GenParams, generate_batch
from .harness.client import EndpointConfig, Modality, run_benchmark, score_run
from .harness.sft import export_sft_trajectories
from .manifest import load_manifest, write_manifest
from .render.markdown import parse_markdown
from .render.svg import (
    RenderView,
    STYLE_IDS,
    StyleSpec,
    render_image,
    texture_seed_for,
)
from .solver import deduce

_OP_CHARS = {
    "+": Operator.ADD,
    "-": Operator.SUB,
    "x": Operator.MUL,
    "*": Operator.MUL,
    "×": Operator.MUL,
    "/": Operator.DIV,
    "÷": Operator.DIV,
}


def _parse_ops(text: str) -> tuple[Operator, ...]:
    ops = []
    for ch in text:
        if ch not in _OP_CHARS:
            raise argparse.ArgumentTypeError(f"unknown operator {ch!r}")
        op = _OP_CHARS[ch]
        if op not in ops:
            ops.append(op)
    if not ops:
        raise argparse.ArgumentTypeError("need at least one operator")
    return tuple(ops)


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from exc


def _cmd_generate(args: argparse.Namespace) -> int:
    params = GenParams(
        difficulty=Difficulty(args.difficulty),
        operators=args.ops,
        value_range=args.range,
        equation_count=args.eq_count,
        max_hop=args.max_hop,
        seed=args.seed,
    )
    out_dir = Path(args.out)
    examples = generate_batch(
        params, args.count, out_dir=None if args.no_images else out_dir
    )
    manifest_path = write_manifest(examples, out_dir / "manifest.jsonl")
    n_targets = sum(len(ex.gold_answers) for ex in examples)
    print(
        f"wrote {len(examples)} {params.difficulty.value} examples "
        f"({n_targets} target cells) to {manifest_path}"
    )
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    styles = args.styles.split(",") if args.styles else list(STYLE_IDS)
    for style_id in styles:
        if style_id not in STYLE_IDS:
            raise MathGridError(f"unknown style {style_id!r}; choose from {STYLE_IDS}")
    if args.markdown:
        grid = parse_markdown(Path(args.markdown).read_text(encoding="utf-8"))
        style = StyleSpec.of(styles[0])
        view = RenderView(args.view)
        answers = None
        if view is RenderView.SOLUTION and target_order(grid):
            trace, _ = deduce(grid)
            answers = [trace.answer_grid.at(c).value for c in target_order(grid)]
        out = Path(args.out)
        out.write_bytes(render_image(grid, style, view, args.seed, answers=answers))
        print(f"wrote {out}")
        return 0
    out_dir = Path(args.out)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    count = 0
    for example in load_manifest(args.manifest):
        texture_seed = texture_seed_for(example.id)
        for style_id in styles:
            style = StyleSpec.of(style_id)
            query = render_image(example.grid, style, RenderView.QUERY, texture_seed)
            solution = render_image(
                example.grid,
                style,
                RenderView.SOLUTION,
                texture_seed,
                answers=example.gold_answers,
            )
            base = out_dir / "images" / example.id
            Path(f"{base}.query.{style_id}.svg").write_bytes(query)
            Path(f"{base}.solution.{style_id}.svg").write_bytes(solution)
            count += 2
    print(f"wrote {count} images under {out_dir / 'images'}")
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    text = (
        Path(args.markdown).read_text(encoding="utf-8")
        if args.markdown
        else sys.stdin.read()
    )
    grid = parse_markdown(text)
    trace, hops = deduce(grid)
    targets = target_order(grid)
    answers = [trace.answer_grid.at(c).value for c in targets]
    print(
        json.dumps(
            {
                "answers": answers,
                "hop_depths": [hops[c] for c in targets],
                "trace": trace.to_json(),
            },
            ensure_ascii=False,
        )
    )
    return 0


def _cmd_export_sft(args: argparse.Namespace) -> int:
    out = export_sft_trajectories(args.manifest, args.out)
    n = sum(1 for _ in open(out, encoding="utf-8"))
    print(f"wrote {n} trajectory records to {out}")
    return 0


def _endpoint_from_args(args: argparse.Namespace) -> EndpointConfig:
    data: dict = {}
    if args.config:
        data.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    if args.endpoint:
        data["base_url"] = args.endpoint
    if args.model:
        data["model_name"] = args.model
    if args.concurrency is not None:
        data["max_concurrency"] = args.concurrency
    if args.auth_env:
        data["auth_token_env"] = args.auth_env
    if args.timeout is not None:
        data["timeout_s"] = args.timeout
    return EndpointConfig.from_json(data)


def _cmd_bench_run(args: argparse.Namespace) -> int:
    endpoint = _endpoint_from_args(args)
    out = run_benchmark(
        args.manifest,
        endpoint,
        Modality(args.modality),
        args.style,
        args.out,
    )
    print(f"run records in {out}")
    return 0


def _cmd_bench_score(args: argparse.Namespace) -> int:
    report = score_run(args.run, args.manifest)
    data = report.to_json()
    if args.out:
        Path(args.out).write_text(
            json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"report written to {args.out}")
    if args.table or not args.out:
        print(format_metrics_table(data))
    return 0


def _cmd_bench_table(args: argparse.Namespace) -> int:
    data = json.loads(Path(args.report).read_text(encoding="utf-8"))
    print(format_metrics_table(data))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mathgrid",
        description="Generate, solve, render, and benchmark cross-math puzzles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dataset with images")
    gen.add_argument("--difficulty", choices=[d.value for d in Difficulty], required=True)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--ops", type=_parse_ops, default=_parse_ops("+-x/"))
    gen.add_argument("--range", type=_parse_pair, default=(50, 250), metavar="LO:HI")
    gen.add_argument("--eq-count", type=_parse_pair, default=(5, 15), metavar="MIN:MAX")
    gen.add_argument("--max-hop", type=int, default=0, help="0 = difficulty default")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--no-images", action="store_true")
    gen.set_defaults(func=_cmd_generate)

    ren = sub.add_parser("render", help="render images from a manifest or markdown")
    ren.add_argument("--manifest")
    ren.add_argument("--markdown", help="render a single markdown grid file")
    ren.add_argument("--styles", help="comma-separated subset of styles")
    ren.add_argument("--view", choices=["query", "solution"], default="query")
    ren.add_argument("--seed", type=int, default=0, help="texture seed")
    ren.add_argument("--out", required=True)
    ren.set_defaults(func=_cmd_render)

    sol = sub.add_parser("solve", help="solve a markdown grid (file or stdin)")
    sol.add_argument("--markdown")
    sol.set_defaults(func=_cmd_solve)

    sft = sub.add_parser("export-sft", help="emit trajectory JSONL from a manifest")
    sft.add_argument("--manifest", required=True)
    sft.add_argument("--out", required=True)
    sft.set_defaults(func=_cmd_export_sft)

    bench = sub.add_parser("bench", help="run and score endpoint benchmarks")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)

    run = bench_sub.add_parser("run", help="drive a chat-completions endpoint")
    run.add_argument("--manifest", required=True)
    run.add_argument("--out", required=True, help="run-record JSONL path")
    run.add_argument("--endpoint", help="endpoint base URL")
    run.add_argument("--model", help="model name")
    run.add_argument(
        "--modality", choices=[m.value for m in Modality], default="text"
    )
    run.add_argument("--style", default="original")
    run.add_argument("--concurrency", type=int, default=None)
    run.add_argument("--timeout", type=float, default=None)
    run.add_argument("--auth-env", help="env var holding the bearer token")
    run.add_argument("--config", help="endpoint config JSON file")
    run.set_defaults(func=_cmd_bench_run)

    score = bench_sub.add_parser("score", help="score a run against its manifest")
    score.add_argument("--run", required=True)
    score.add_argument("--manifest", required=True)
    score.add_argument("--out", help="write report JSON here")
    score.add_argument("--table", action="store_true", help="print the text table")
    score.set_defaults(func=_cmd_bench_score)

    table = bench_sub.add_parser("table", help="print the table for a stored report")
    table.add_argument("--report", required=True)
    table.set_defaults(func=_cmd_bench_table)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MathGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
