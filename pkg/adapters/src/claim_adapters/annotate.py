"""LLM batch-annotation client for the pair-annotation file protocol.

Reads a request file of claim pairs, asks a model whether each pair
discusses the same claim, and writes the response file. Model answers
are mapped strictly: yes -> similar, no -> dissimilar; anything else is
retried and then recorded as a protocol failure with its line omitted,
never guessed. A run log keeps the full prompt and the raw model output
for every request.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field

import requests

DEFAULT_PROMPT = "Do ‘Claim 1’ and ‘Claim 2’ discuss the same claim? Respond with Yes or No."

_ANSWER = re.compile(r"\A(yes|no)[.!]?\Z")
_WORD = re.compile(r"\w+", re.UNICODE)


@dataclass(frozen=True)
class LlmAnnotatorSpec:
    model: str
    endpoint: str | None = None  # chat-completions URL; None for the mock
    prompt_template: str = DEFAULT_PROMPT
    temperature: float = 0.0
    max_retries: int = 2


@dataclass
class BatchResult:
    n_requests: int
    n_responses: int
    failures: list[dict] = field(default_factory=list)


class MockEndpoint:
    """Keyword-overlap heuristic so the protocol is testable offline:
    answers Yes when the word sets of the two claims overlap at half
    their union or more."""

    def complete(self, prompt: str) -> str:
        match = re.search(r"Claim 1: (.*)\nClaim 2: (.*)\Z", prompt, re.DOTALL)
        if not match:
            return "No"
        a = set(_WORD.findall(match.group(1).casefold()))
        b = set(_WORD.findall(match.group(2).casefold()))
        union = a | b
        if union and len(a & b) / len(union) >= 0.5:
            return "Yes"
        return "No"


class HttpEndpoint:
    """Minimal OpenAI-style chat-completions client."""

    def __init__(self, url: str, model: str, temperature: float, timeout: float = 60.0):
        self._url = url
        self._model = model
        self._temperature = temperature
        self._timeout = timeout
        self._key = os.environ.get("CLAIM_ADAPTERS_API_KEY", "")

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self._key:
            headers["Authorization"] = f"Bearer {self._key}"
        response = requests.post(
            self._url,
            json={
                "model": self._model,
                "temperature": self._temperature,
                "messages": [{"role": "user", "content": prompt}],
            },
            headers=headers,
            timeout=self._timeout,
        )
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]


def build_endpoint(spec: LlmAnnotatorSpec):
    if spec.model == "mock" and spec.endpoint is None:
        return MockEndpoint()
    if spec.endpoint is None:
        raise ValueError(f"model {spec.model!r} needs an --endpoint URL")
    return HttpEndpoint(spec.endpoint, spec.model, spec.temperature)


def build_prompt(template: str, text_a: str, text_b: str) -> str:
    return f"{template}\n\nClaim 1: {text_a}\nClaim 2: {text_b}"


def map_answer(raw: str) -> str | None:
    match = _ANSWER.match(raw.strip().casefold())
    if match is None:
        return None
    return "similar" if match.group(1) == "yes" else "dissimilar"


def annotate_batch(
    request_path: str,
    spec: LlmAnnotatorSpec,
    out_path: str,
    log_path: str | None = None,
    endpoint=None,
) -> BatchResult:
    """Answer every request line in order; failed pairs are listed in
    the result and omitted from the response file."""
    endpoint = endpoint if endpoint is not None else build_endpoint(spec)
    requests_rows = []
    with open(request_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                requests_rows.append(json.loads(line))

    result = BatchResult(n_requests=len(requests_rows), n_responses=0)
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        with open(out_path, "w", encoding="utf-8") as out_fh:
            for row in requests_rows:
                prompt = build_prompt(spec.prompt_template, row["text_a"], row["text_b"])
                label = None
                raw_outputs = []
                for _attempt in range(spec.max_retries + 1):
                    try:
                        raw = endpoint.complete(prompt)
                    except Exception as exc:
                        raw = f"<transport error: {exc}>"
                    raw_outputs.append(raw)
                    label = map_answer(raw)
                    if label is not None:
                        break
                if log_fh:
                    log_fh.write(
                        json.dumps(
                            {
                                "pair_a": row["pair_a"],
                                "pair_b": row["pair_b"],
                                "prompt": prompt,
                                "raw_outputs": raw_outputs,
                                "label": label,
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )
                if label is None:
                    result.failures.append(
                        {
                            "pair_a": row["pair_a"],
                            "pair_b": row["pair_b"],
                            "raw_outputs": raw_outputs,
                        }
                    )
                    continue
                out_fh.write(
                    json.dumps(
                        {"pair_a": row["pair_a"], "pair_b": row["pair_b"], "label": label},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
                result.n_responses += 1
    finally:
        if log_fh:
            log_fh.close()
    return result
