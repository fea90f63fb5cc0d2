"""Batch driver for chat-completion endpoints, with resume and retries.

One request per (example, modality, style); at most ``max_concurrency``
requests are in flight. Results append to a JSONL run file keyed by a
request fingerprint, so an interrupted run can be resumed without
re-issuing requests that already succeeded.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import requests

from ..core import MathGridError
from ..evaluation import EvalReport, Prediction, build_report, evaluate_prediction
from ..manifest import load_manifest
from .prompts import (
    ImagePart,
    Modality,
    PromptBundle,
    TEMPLATE_VERSION,
    TextPart,
    build_prompt,
)


class ConfigError(MathGridError):
    """Endpoint configuration is unusable."""


class ManifestMismatch(MathGridError):
    """Run records reference examples not present in the manifest."""


@dataclass(frozen=True)
class EndpointConfig:
    """Where and how to send chat-completion requests.

    The auth token is read from the environment variable named by
    ``auth_token_env`` at request time and never stored. ``sampling`` is
    passed through into the request body untouched (temperature, top_p,
    max_tokens, ...); endpoint-dialect differences are covered by ``path``
    and ``model_field``.
    """

    base_url: str
    model_name: str
    auth_token_env: str | None = None
    max_concurrency: int = 4
    timeout_s: float = 120.0
    max_retries: int = 3
    path: str = "/v1/chat/completions"
    model_field: str = "model"
    sampling: dict = field(default_factory=dict)
    backoff_s: float = 0.5

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ConfigError("base_url is required")
        if not self.model_name:
            raise ConfigError("model_name is required")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")

    @property
    def url(self) -> str:
        return self.base_url.rstrip("/") + self.path

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.auth_token_env:
            token = os.environ.get(self.auth_token_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    @staticmethod
    def from_json(data: dict) -> EndpointConfig:
        known = {f for f in EndpointConfig.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown endpoint config keys: {sorted(unknown)}")
        missing = {"base_url", "model_name"} - set(data)
        if missing:
            raise ConfigError(f"endpoint config needs {sorted(missing)}")
        return EndpointConfig(**data)


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one request."""

    example_id: str
    modality: str
    style_id: str | None
    fingerprint: str
    response_text: str
    latency_ms: int
    status: str  # "ok" or "error"
    error: str | None = None

    def to_json(self) -> dict:
        data = {
            "example_id": self.example_id,
            "modality": self.modality,
            "style_id": self.style_id,
            "fingerprint": self.fingerprint,
            "response_text": self.response_text,
            "latency_ms": self.latency_ms,
            "status": self.status,
        }
        if self.error is not None:
            data["error"] = self.error
        return data

    @staticmethod
    def from_json(data: dict) -> RunRecord:
        return RunRecord(
            example_id=data["example_id"],
            modality=data["modality"],
            style_id=data.get("style_id"),
            fingerprint=data["fingerprint"],
            response_text=data.get("response_text", ""),
            latency_ms=int(data.get("latency_ms", 0)),
            status=data["status"],
            error=data.get("error"),
        )


def request_fingerprint(
    example_id: str, modality: Modality, style_id: str | None, model_name: str
) -> str:
    """Stable key for resume: same example/modality/style/model/template."""
    payload = "\x1f".join(
        [example_id, modality.value, style_id or "", model_name, TEMPLATE_VERSION]
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def bundle_to_messages(bundle: PromptBundle) -> list[dict]:
    """Chat-completions message list with text and base64 image parts."""
    content: list[dict] = []
    for part in bundle.parts:
        if isinstance(part, TextPart):
            content.append({"type": "text", "text": part.text})
        elif isinstance(part, ImagePart):
            b64 = base64.b64encode(part.data).decode("ascii")
            content.append(
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:{part.media_type};base64,{b64}"},
                }
            )
    return [{"role": "user", "content": content}]


def build_chat_payload(bundle: PromptBundle, config: EndpointConfig) -> dict:
    payload = {
        config.model_field: config.model_name,
        "messages": bundle_to_messages(bundle),
    }
    payload.update(config.sampling)
    return payload


def response_text(data: dict) -> str:
    """Pull the assistant text out of a chat-completion response body."""
    choices = data.get("choices") or []
    if not choices:
        raise ValueError("response has no choices")
    first = choices[0]
    message = first.get("message") or {}
    content = message.get("content", first.get("text"))
    if isinstance(content, list):  # some dialects return part lists
        content = "".join(
            p.get("text", "") for p in content if isinstance(p, dict)
        )
    if not isinstance(content, str):
        raise ValueError("response carries no text content")
    return content


def _send_once(config: EndpointConfig, payload: dict) -> str:
    resp = requests.post(
        config.url, json=payload, headers=config.headers(), timeout=config.timeout_s
    )
    if resp.status_code == 429 or resp.status_code >= 500:
        raise requests.RequestException(f"HTTP {resp.status_code}: {resp.text[:200]}")
    resp.raise_for_status()
    return response_text(resp.json())


def _send_with_retries(config: EndpointConfig, payload: dict) -> str:
    attempt = 0
    while True:
        try:
            return _send_once(config, payload)
        except (requests.RequestException, ValueError) as exc:
            if attempt >= config.max_retries:
                raise
            time.sleep(config.backoff_s * (2**attempt))
            attempt += 1


def _existing_ok_fingerprints(out_path: Path) -> set[str]:
    done = set()
    if out_path.exists():
        with out_path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = RunRecord.from_json(json.loads(line))
                if record.status == "ok":
                    done.add(record.fingerprint)
    return done


def run_benchmark(
    manifest_path: Path | str,
    endpoint: EndpointConfig,
    modality: Modality,
    style_id: str | None,
    out_path: Path | str,
    *,
    images_root: Path | str | None = None,
) -> Path:
    """Query the endpoint for every example and append records to out_path.

    A single writer appends records as workers finish; per-example failures
    become error records and never abort the run. Examples whose fingerprint
    already has an OK record are skipped entirely.
    """
    manifest_path = Path(manifest_path)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if images_root is None:
        images_root = manifest_path.parent
    examples = load_manifest(manifest_path)
    done = _existing_ok_fingerprints(out_path)

    todo = []
    for example in examples:
        fingerprint = request_fingerprint(
            example.id, modality, style_id, endpoint.model_name
        )
        if fingerprint not in done:
            todo.append((example, fingerprint))

    def one(example, fingerprint) -> RunRecord:
        started = time.monotonic()
        try:
            bundle = build_prompt(example, modality, style_id, images_root)
            text = _send_with_retries(endpoint, build_chat_payload(bundle, endpoint))
            status, error = "ok", None
        except Exception as exc:  # noqa: BLE001 - isolate per-record failures
            text, status, error = "", "error", f"{type(exc).__name__}: {exc}"
        latency_ms = int((time.monotonic() - started) * 1000)
        return RunRecord(
            example_id=example.id,
            modality=modality.value,
            style_id=style_id,
            fingerprint=fingerprint,
            response_text=text,
            latency_ms=latency_ms,
            status=status,
            error=error,
        )

    if todo:
        with out_path.open("a", encoding="utf-8") as sink:
            with ThreadPoolExecutor(max_workers=endpoint.max_concurrency) as pool:
                futures = [pool.submit(one, ex, fp) for ex, fp in todo]
                for future in as_completed(futures):
                    record = future.result()
                    sink.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
                    sink.flush()
    return out_path


def load_run_records(run_path: Path | str) -> list[RunRecord]:
    """Run records with resume duplicates collapsed to the latest attempt."""
    latest: dict[str, RunRecord] = {}
    with Path(run_path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                record = RunRecord.from_json(json.loads(line))
                latest[record.fingerprint] = record
    return list(latest.values())


def score_run(run_path: Path | str, manifest_path: Path | str) -> EvalReport:
    """Score every run record against the manifest's gold answers.

    Error records score as all-wrong; manifest examples without a record are
    not counted (finish the run first). A file holds one run configuration:
    two fingerprints for the same example mean mixed runs and are rejected.
    """
    examples = {ex.id: ex for ex in load_manifest(manifest_path)}
    records = load_run_records(run_path)
    seen_ids = [r.example_id for r in records]
    if len(seen_ids) != len(set(seen_ids)):
        raise ManifestMismatch(
            "run file contains records from more than one configuration; "
            "score each run file separately"
        )
    results = []
    for record in sorted(records, key=lambda r: r.example_id):
        gold = examples.get(record.example_id)
        if gold is None:
            raise ManifestMismatch(
                f"run references {record.example_id!r}, absent from manifest"
            )
        text = record.response_text if record.status == "ok" else ""
        pred = Prediction.from_text(record.example_id, text)
        results.append(evaluate_prediction(pred, gold))
    return build_report(results)
