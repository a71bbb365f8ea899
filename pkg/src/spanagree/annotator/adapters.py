"""Provider adapters: one HTTP client for chat-completion endpoints and
a canned-response mock that satisfies the same contract for hermetic
runs and tests."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import requests


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    seed: int | None = 42


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_s: float = 0.0


class ProviderError(RuntimeError):
    """Transport-level failure talking to the provider."""


class MissingApiKey(ProviderError):
    def __init__(self, env_var: str):
        super().__init__(f"API key environment variable {env_var} is not set")
        self.env_var = env_var


@runtime_checkable
class ProviderAdapter(Protocol):
    name: str

    def complete(
        self,
        prompt: str,
        decoding: DecodingParams,
        schema: dict | None = None,
        request_id: str = "",
    ) -> CompletionResult: ...


class MockAdapter:
    """Replays canned responses keyed by request id.

    Repeated requests for the same id walk through its reply list (so a
    retry loop can be fed a different answer per attempt); the last
    reply repeats once the list is exhausted. Latency is always 0 to
    keep runs byte-reproducible.
    """

    name = "mock"

    def __init__(self, replies: dict[str, list[str]]):
        for request_id, items in replies.items():
            if not items:
                raise ValueError(f"no replies for request id {request_id!r}")
        self._replies = {k: list(v) for k, v in replies.items()}
        self._served: dict[str, int] = {}
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "MockAdapter":
        """Load replies from JSONL lines {"example_id": ..., "replies": [...]}
        (a single "reply" string is also accepted)."""
        replies: dict[str, list[str]] = {}
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                row = json.loads(line)
                example_id = row["example_id"]
                if "replies" in row:
                    replies[example_id] = list(row["replies"])
                else:
                    replies[example_id] = [row["reply"]]
        return cls(replies)

    def complete(
        self,
        prompt: str,
        decoding: DecodingParams,
        schema: dict | None = None,
        request_id: str = "",
    ) -> CompletionResult:
        with self._lock:
            self.calls += 1
            if request_id not in self._replies:
                raise ProviderError(f"mock has no reply for request {request_id!r}")
            served = self._served.get(request_id, 0)
            self._served[request_id] = served + 1
        items = self._replies[request_id]
        text = items[min(served, len(items) - 1)]
        return CompletionResult(
            text=text,
            prompt_tokens=len(prompt.split()),
            completion_tokens=len(text.split()),
            latency_s=0.0,
        )


class OpenAIChatAdapter:
    """Minimal client for OpenAI-compatible chat-completion endpoints.

    The API key is read from the configured environment variable at
    construction time and never logged. Constrained output is requested
    through the json_schema response format when a schema is given.
    """

    name = "openai-chat"

    def __init__(
        self,
        model_id: str,
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 120.0,
        session: requests.Session | None = None,
    ):
        import os

        key = os.environ.get(api_key_env)
        if not key:
            raise MissingApiKey(api_key_env)
        self.model_id = model_id
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._headers = {"Authorization": f"Bearer {key}"}

    def complete(
        self,
        prompt: str,
        decoding: DecodingParams,
        schema: dict | None = None,
        request_id: str = "",
    ) -> CompletionResult:
        payload: dict = {
            "model": self.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": decoding.temperature,
        }
        if decoding.seed is not None:
            payload["seed"] = decoding.seed
        if schema is not None:
            payload["response_format"] = {
                "type": "json_schema",
                "json_schema": {
                    "name": "annotations",
                    "strict": True,
                    "schema": schema,
                },
            }
        started = time.monotonic()
        try:
            response = self._session.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=self._headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            body = response.json()
        except requests.RequestException as exc:
            raise ProviderError(f"chat completion request failed: {exc}") from exc
        except ValueError as exc:
            raise ProviderError(f"provider returned invalid JSON: {exc}") from exc
        latency = time.monotonic() - started
        try:
            text = body["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc
        usage = body.get("usage") or {}
        return CompletionResult(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            latency_s=latency,
        )
