from __future__ import annotations

import json

import pytest

from mathgrid import Difficulty, GenParams, generate
from mathgrid.evaluation import EmptyReport
from mathgrid.harness import (
    ConfigError,
    EndpointConfig,
    ManifestMismatch,
    Modality,
    TEMPLATE_VERSION,
    MissingStyleArtifact,
    build_chat_payload,
    build_prompt,
    bundle_to_messages,
    load_run_records,
    load_template,
    request_fingerprint,
    run_benchmark,
    score_run,
    template_for,
)
from mathgrid.harness.prompts import ImagePart, TextPart
from mathgrid.harness.client import response_text
from mathgrid.harness.sft import answer_line, export_sft_trajectories, format_solution_steps
from mathgrid.manifest import load_manifest, write_manifest
from mathgrid.render import to_markdown
from mathgrid.solver import deduce

from endpointmock import MockEndpoint


def _example_with_images(tmp_path, seed=31):
    return generate(
        GenParams(difficulty=Difficulty.EASY, equation_count=(3, 5), seed=seed),
        out_dir=tmp_path,
        example_id=f"img_{seed}",
    )


class TestTemplates:
    def test_all_templates_load(self):
        for modality in Modality:
            text = template_for(modality)
            assert text.rstrip().endswith("Here are the cross math puzzle:")
            assert "Cross Math Puzzle" in text
            assert "<answer>" in text and "</answer>" in text

    def test_modality_specific_wording(self):
        assert "textual markdown grid format" in template_for(Modality.TEXT_ONLY)
        assert "image format" in template_for(Modality.IMAGE_ONLY)
        assert "both modalities together" in template_for(Modality.IMAGE_TEXT)

    def test_trajectory_template_requests_concision(self):
        text = load_template("trajectory.txt")
        assert "**concisely**" in text

    def test_template_version_pinned(self):
        assert TEMPLATE_VERSION == "1"


class TestBuildPrompt:
    def test_text_only_bundle(self, tmp_path):
        example = _example_with_images(tmp_path)
        bundle = build_prompt(example, Modality.TEXT_ONLY)
        assert len(bundle.parts) == 1
        (part,) = bundle.parts
        assert isinstance(part, TextPart)
        assert example.markdown.rstrip("\n") in part.text
        assert "textual markdown grid format" in part.text
        assert bundle.style_id is None

    def test_image_only_bundle(self, tmp_path):
        example = _example_with_images(tmp_path)
        bundle = build_prompt(example, Modality.IMAGE_ONLY, "original", tmp_path)
        text_parts = [p for p in bundle.parts if isinstance(p, TextPart)]
        image_parts = [p for p in bundle.parts if isinstance(p, ImagePart)]
        assert len(text_parts) == 1 and len(image_parts) == 1
        assert example.markdown.rstrip("\n") not in text_parts[0].text
        assert image_parts[0].media_type == "image/svg+xml"

    def test_image_text_bundle_orders_markdown_before_image(self, tmp_path):
        example = _example_with_images(tmp_path)
        bundle = build_prompt(example, Modality.IMAGE_TEXT, "original", tmp_path)
        assert isinstance(bundle.parts[0], TextPart)
        assert isinstance(bundle.parts[1], ImagePart)
        assert example.markdown.rstrip("\n") in bundle.parts[0].text
        assert "both modalities together" in bundle.parts[0].text

    def test_information_equivalence_across_modalities(self, tmp_path):
        example = _example_with_images(tmp_path)
        text_bundle = build_prompt(example, Modality.TEXT_ONLY)
        image_bundle = build_prompt(example, Modality.IMAGE_ONLY, "original", tmp_path)
        both_bundle = build_prompt(example, Modality.IMAGE_TEXT, "original", tmp_path)
        md = example.markdown.rstrip("\n")
        text_of = lambda b: next(p.text for p in b.parts if isinstance(p, TextPart))
        assert md in text_of(text_bundle) and md in text_of(both_bundle)
        image_of = lambda b: next(p.data for p in b.parts if isinstance(p, ImagePart))
        assert image_of(image_bundle) == image_of(both_bundle)

    def test_build_prompt_is_deterministic(self, tmp_path):
        example = _example_with_images(tmp_path)
        a = build_prompt(example, Modality.IMAGE_TEXT, "original", tmp_path)
        b = build_prompt(example, Modality.IMAGE_TEXT, "original", tmp_path)
        assert a == b

    def test_missing_style_raises(self, tmp_path):
        example = _example_with_images(tmp_path)
        with pytest.raises(MissingStyleArtifact):
            build_prompt(example, Modality.IMAGE_ONLY, "sepia", tmp_path)
        no_images = generate(GenParams(difficulty=Difficulty.EASY, seed=3))
        with pytest.raises(MissingStyleArtifact):
            build_prompt(no_images, Modality.IMAGE_ONLY, "original")


class TestWireFormat:
    def test_messages_embed_base64_data_url(self, tmp_path):
        example = _example_with_images(tmp_path)
        bundle = build_prompt(example, Modality.IMAGE_TEXT, "original", tmp_path)
        (message,) = bundle_to_messages(bundle)
        assert message["role"] == "user"
        kinds = [part["type"] for part in message["content"]]
        assert kinds == ["text", "image_url"]
        url = message["content"][1]["image_url"]["url"]
        assert url.startswith("data:image/svg+xml;base64,")

    def test_payload_carries_model_and_sampling(self, tmp_path):
        example = _example_with_images(tmp_path)
        bundle = build_prompt(example, Modality.TEXT_ONLY)
        config = EndpointConfig(
            base_url="http://x", model_name="m1", sampling={"temperature": 0.2}
        )
        payload = build_chat_payload(bundle, config)
        assert payload["model"] == "m1"
        assert payload["temperature"] == 0.2

    def test_custom_model_field(self, tmp_path):
        example = _example_with_images(tmp_path)
        bundle = build_prompt(example, Modality.TEXT_ONLY)
        config = EndpointConfig(base_url="http://x", model_name="m", model_field="engine")
        assert "engine" in build_chat_payload(bundle, config)

    @pytest.mark.parametrize(
        "body, expected",
        [
            ({"choices": [{"message": {"content": "hi"}}]}, "hi"),
            ({"choices": [{"text": "plain"}]}, "plain"),
            (
                {"choices": [{"message": {"content": [{"type": "text", "text": "a"}, {"type": "text", "text": "b"}]}}]},
                "ab",
            ),
        ],
    )
    def test_response_text_dialects(self, body, expected):
        assert response_text(body) == expected

    def test_response_without_text_rejected(self):
        with pytest.raises(ValueError):
            response_text({"choices": []})


class TestEndpointConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            EndpointConfig(base_url="", model_name="m")
        with pytest.raises(ConfigError):
            EndpointConfig(base_url="http://x", model_name="")
        with pytest.raises(ConfigError):
            EndpointConfig(base_url="http://x", model_name="m", max_concurrency=0)

    def test_from_json_rejects_unknown_keys(self):
        with pytest.raises(ConfigError):
            EndpointConfig.from_json({"base_url": "http://x", "model_name": "m", "nope": 1})

    def test_auth_header_from_env(self, monkeypatch):
        config = EndpointConfig(
            base_url="http://x", model_name="m", auth_token_env="FAKE_TOKEN_VAR"
        )
        monkeypatch.delenv("FAKE_TOKEN_VAR", raising=False)
        assert "Authorization" not in config.headers()
        monkeypatch.setenv("FAKE_TOKEN_VAR", "sekret")
        assert config.headers()["Authorization"] == "Bearer sekret"

    def test_fingerprint_distinguishes_runs(self):
        f1 = request_fingerprint("a", Modality.TEXT_ONLY, None, "m1")
        f2 = request_fingerprint("a", Modality.IMAGE_ONLY, "original", "m1")
        f3 = request_fingerprint("a", Modality.TEXT_ONLY, None, "m2")
        assert len({f1, f2, f3}) == 3
        assert f1 == request_fingerprint("a", Modality.TEXT_ONLY, None, "m1")


def _config(url, **overrides) -> EndpointConfig:
    base = dict(
        base_url=url,
        model_name="mock-model",
        max_concurrency=4,
        timeout_s=20.0,
        max_retries=2,
        backoff_s=0.01,
    )
    base.update(overrides)
    return EndpointConfig(**base)


class TestRunBenchmark:
    def test_gold_echo_closed_loop_text(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        with MockEndpoint(manifest) as server:
            run_path = run_benchmark(
                manifest,
                _config(server.base_url),
                Modality.TEXT_ONLY,
                None,
                tmp_path / "run.jsonl",
            )
        records = load_run_records(run_path)
        assert len(records) == len(load_manifest(manifest))
        assert all(r.status == "ok" for r in records)
        report = score_run(run_path, manifest)
        assert report.micro == 1.0 and report.macro == 1.0
        assert all(v == 1.0 for v in report.khop.values())

    def test_gold_echo_closed_loop_image_only(self, dataset_dir, tmp_path):
        # the mock reads the SVG back; full image round trip through the wire
        manifest = dataset_dir / "manifest.jsonl"
        with MockEndpoint(manifest) as server:
            run_path = run_benchmark(
                manifest,
                _config(server.base_url),
                Modality.IMAGE_ONLY,
                "original",
                tmp_path / "run.jsonl",
            )
        report = score_run(run_path, manifest)
        assert report.micro == 1.0 and report.macro == 1.0

    def test_hop1_only_model_splits_khop(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        with MockEndpoint(manifest, mode="hop1") as server:
            run_path = run_benchmark(
                manifest,
                _config(server.base_url),
                Modality.TEXT_ONLY,
                None,
                tmp_path / "run.jsonl",
            )
        report = score_run(run_path, manifest)
        assert report.khop[1] == 1.0
        for k in (2, 3, 4):
            if k in report.khop:
                assert report.khop[k] == 0.0
        assert 2 in report.khop  # the medium fixtures contain deeper hops

    def test_single_failure_is_isolated(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        examples = load_manifest(manifest)
        victim = examples[0].id
        with MockEndpoint(manifest, fail_ids={victim}) as server:
            run_path = run_benchmark(
                manifest,
                _config(server.base_url, max_retries=1),
                Modality.TEXT_ONLY,
                None,
                tmp_path / "run.jsonl",
            )
        records = {r.example_id: r for r in load_run_records(run_path)}
        assert records[victim].status == "error"
        assert all(r.status == "ok" for i, r in records.items() if i != victim)
        report = score_run(run_path, manifest)
        assert report.macro == pytest.approx(1 - 1 / len(examples))

    def test_resume_skips_completed_records(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        with MockEndpoint(manifest) as server:
            config = _config(server.base_url)
            run_path = run_benchmark(
                manifest, config, Modality.TEXT_ONLY, None, tmp_path / "run.jsonl"
            )
            first_total = server.requests_total
            run_benchmark(
                manifest, config, Modality.TEXT_ONLY, None, run_path
            )
            assert server.requests_total == first_total  # nothing re-issued

    def test_resume_retries_only_failures(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        examples = load_manifest(manifest)
        victim = examples[2].id
        run_path = tmp_path / "run.jsonl"
        with MockEndpoint(manifest, fail_ids={victim}) as server:
            run_benchmark(
                manifest,
                _config(server.base_url, max_retries=0),
                Modality.TEXT_ONLY,
                None,
                run_path,
            )
        with MockEndpoint(manifest) as healthy:
            before = healthy.requests_total
            run_benchmark(
                manifest,
                _config(healthy.base_url, max_retries=0),
                Modality.TEXT_ONLY,
                None,
                run_path,
            )
            assert healthy.requests_total - before == 1  # only the victim
        records = {r.example_id: r for r in load_run_records(run_path)}
        assert records[victim].status == "ok"
        assert score_run(run_path, manifest).macro == 1.0

    def test_bounded_concurrency(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        with MockEndpoint(manifest, latency_s=0.05) as server:
            run_benchmark(
                manifest,
                _config(server.base_url, max_concurrency=3),
                Modality.TEXT_ONLY,
                None,
                tmp_path / "run.jsonl",
            )
            assert server.max_inflight <= 3
            assert server.max_inflight >= 2  # parallelism actually happened

    def test_transient_failures_retried(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        n = len(load_manifest(manifest))
        with MockEndpoint(manifest, fail_first_n=2) as server:
            run_path = run_benchmark(
                manifest,
                _config(server.base_url, max_concurrency=1, max_retries=3),
                Modality.TEXT_ONLY,
                None,
                tmp_path / "run.jsonl",
            )
            assert server.requests_total == n + 2  # two extra attempts
        assert all(r.status == "ok" for r in load_run_records(run_path))

    def test_score_run_rejects_unknown_ids(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        run_path = tmp_path / "run.jsonl"
        record = {
            "example_id": "ghost",
            "modality": "text",
            "style_id": None,
            "fingerprint": "deadbeef",
            "response_text": "<answer>1</answer>",
            "latency_ms": 1,
            "status": "ok",
        }
        run_path.write_text(json.dumps(record) + "\n", encoding="utf-8")
        with pytest.raises(ManifestMismatch):
            score_run(run_path, manifest)

    def test_empty_run_file_raises_empty_report(self, dataset_dir, tmp_path):
        run_path = tmp_path / "run.jsonl"
        run_path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyReport):
            score_run(run_path, dataset_dir / "manifest.jsonl")

    def test_mixed_configuration_run_file_rejected(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        example_id = load_manifest(manifest)[0].id
        lines = []
        for fingerprint in ("aaaa", "bbbb"):  # same example, two models
            lines.append(
                json.dumps(
                    {
                        "example_id": example_id,
                        "modality": "text",
                        "style_id": None,
                        "fingerprint": fingerprint,
                        "response_text": "<answer>1</answer>",
                        "latency_ms": 1,
                        "status": "ok",
                    }
                )
            )
        run_path = tmp_path / "run.jsonl"
        run_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(ManifestMismatch):
            score_run(run_path, manifest)


class TestSftExport:
    def test_reference_answer_line(self, appendix_grid, tmp_path):
        from mathgrid.core import DatasetExample

        trace, hops = deduce(appendix_grid)
        example = DatasetExample(
            id="reference",
            difficulty=Difficulty.EASY,
            grid=appendix_grid,
            answer_grid=trace.answer_grid,
            gold_answers=(6, 93, 45, 8),
            hop_depths=(1, 1, 1, 1),
            markdown=to_markdown(appendix_grid),
            images={},
            seed=0,
            gen_params=GenParams(difficulty=Difficulty.EASY, seed=0),
            trace=trace,
        )
        manifest = write_manifest([example], tmp_path / "m.jsonl")
        out = export_sft_trajectories(manifest, tmp_path / "sft.jsonl")
        (record,) = [json.loads(l) for l in out.read_text().splitlines()]
        assert record["answer"] == "<answer>6 93 45 8</answer>"
        assert record["symbolic_solution"].startswith("Step 1:")
        assert record["symbolic_solution"].count("Step ") == 1
        assert "**concisely**" in record["prompt"]
        assert example.markdown.rstrip("\n") in record["prompt"]

    def test_record_count_matches_manifest(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        out = export_sft_trajectories(manifest, tmp_path / "sft.jsonl")
        n_records = len(out.read_text().splitlines())
        assert n_records == len(load_manifest(manifest))

    def test_easy_examples_have_single_step_sections(self, dataset_dir, tmp_path):
        manifest = dataset_dir / "manifest.jsonl"
        out = export_sft_trajectories(manifest, tmp_path / "sft.jsonl")
        for line in out.read_text().splitlines():
            record = json.loads(line)
            if record["example_id"].startswith("easy"):
                assert record["symbolic_solution"].count("Step ") == 1

    def test_solution_steps_name_each_resolution(self, dataset_dir):
        for example in load_manifest(dataset_dir / "manifest.jsonl"):
            text = format_solution_steps(example)
            for step in example.trace.steps:
                for res in step:
                    assert f"= {res.value}" in text
            assert answer_line(example) == (
                "<answer>" + " ".join(map(str, example.gold_answers)) + "</answer>"
            )
