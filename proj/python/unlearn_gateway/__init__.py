"""Python bindings for the inference-time unlearning gateway."""

from __future__ import annotations

import json
from typing import Any

from ._core import (
    ConfigError,
    ParseError,
    ValidationError,
    f_score,
    lcs_length,
    leaks,
    render_guardrail_prompt,
    rouge_l,
    tokenize,
)
from ._core import Service as _Service
from ._core import run_scenario_suite as _run_scenario_suite

__all__ = [
    "ConfigError",
    "Gateway",
    "GatewayError",
    "ParseError",
    "ValidationError",
    "f_score",
    "lcs_length",
    "leaks",
    "render_guardrail_prompt",
    "rouge_l",
    "run_scenario_suite",
    "tokenize",
]


class GatewayError(RuntimeError):
    """A gateway call answered with a non-2xx status."""

    def __init__(self, status: int, body: dict[str, Any]):
        super().__init__(f"{status}: {body.get('error', body)}")
        self.status = status
        self.body = body


def _decode(reply: tuple[int, str]) -> dict[str, Any]:
    status, text = reply
    body = json.loads(text)
    if status >= 300:
        raise GatewayError(status, body)
    return body


class Gateway:
    """In-process gateway built from a service config file."""

    def __init__(self, config_path: str, admin_token: str = ""):
        self._service = _Service(str(config_path))
        self._auth = f"Bearer {admin_token}" if admin_token else ""

    def chat(self, messages: list[dict[str, str]] | str, method: str | None = None) -> dict[str, Any]:
        if isinstance(messages, str):
            messages = [{"role": "user", "content": messages}]
        request: dict[str, Any] = {"messages": messages}
        if method:
            request["method"] = method
        return _decode(self._service.chat(json.dumps(request)))

    def add_target(self, name: str, aliases: list[str] | None = None) -> dict[str, Any]:
        body = json.dumps({"name": name, "aliases": aliases or []})
        return _decode(self._service.create_target(self._auth, body))

    def remove_target(self, target_id: str) -> dict[str, Any]:
        return _decode(self._service.delete_target(self._auth, target_id))

    def targets(self) -> dict[str, Any]:
        return _decode(self._service.list_targets(self._auth))

    def health(self) -> dict[str, Any]:
        return _decode(self._service.health())

    def config(self) -> dict[str, Any]:
        return _decode(self._service.config())


def run_scenario_suite(directory: str) -> dict[str, Any]:
    """Runs every scenario file in `directory` and summarises the verdicts."""
    return json.loads(_run_scenario_suite(str(directory)))
