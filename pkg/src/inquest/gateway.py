"""Optional client for an external text-generation service.

Used for free-text answer parsing, gateway-proposed questions and prose
consolidation. Ships with a deterministic mock mode so the full pipeline
runs (and tests pass) without any network access. Live mode speaks the
JSON-over-HTTP chat-completions dialect and reads its credential from an
environment variable, never from files or flags.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional

from inquest.belief import Evidence
from inquest.dialogue import Question
from inquest.errors import GatewayError
from inquest.schema import Schema

logger = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "NOUS_API_KEY"


def request_hash(prompt: str) -> str:
    """Stable key identifying a request payload (used by mock scripts and logs)."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


def _load_prompt(name: str) -> str:
    return resources.files("inquest").joinpath(f"prompts/{name}.txt").read_text()


def _attribute_block(schema: Schema) -> str:
    return "\n".join(
        f"- {attr.id}: one of {', '.join(attr.domain)}" for attr in schema.attributes
    )


@dataclass
class GatewayConfig:
    """Connection and mock settings for the text-generation service."""

    endpoint_url: str = ""
    model_name: str = "mock-model"
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout: float = 30.0
    max_retries: int = 3
    backoff: float = 0.25
    mock_mode: bool = True
    strict_mock: bool = True
    mock_script: dict = field(default_factory=dict)  # request hash -> canned text
    mock_default: Optional[str] = None
    log_path: Optional[str] = None


def _http_transport(config: GatewayConfig, prompt: str) -> str:
    import requests

    api_key = os.environ.get(config.api_key_env, "")
    response = requests.post(
        config.endpoint_url,
        json={
            "model": config.model_name,
            "messages": [{"role": "user", "content": prompt}],
        },
        headers={"Authorization": f"Bearer {api_key}"},
        timeout=config.timeout,
    )
    response.raise_for_status()
    payload = response.json()
    try:
        return payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise GatewayError(f"malformed completion response: {exc}") from None


class Gateway:
    """Client wrapper with retries, request logging and scripted mock mode."""

    def __init__(
        self,
        config: GatewayConfig,
        transport: Optional[Callable[[GatewayConfig, str], str]] = None,
    ):
        self.config = config
        self.transport = transport or _http_transport
        self.history: list = []  # one record per attempt

    def _log(self, record: dict) -> None:
        self.history.append(record)
        if self.config.log_path:
            with open(self.config.log_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(record) + "\n")

    def complete(self, prompt: str) -> str:
        """Return the model's text for a prompt (canned text in mock mode)."""
        key = request_hash(prompt)
        if self.config.mock_mode:
            if key in self.config.mock_script:
                text = self.config.mock_script[key]
            elif self.config.mock_default is not None:
                text = self.config.mock_default
            elif not self.config.strict_mock:
                text = ""
            else:
                raise GatewayError(f"no scripted mock response for request {key}")
            self._log({"mode": "mock", "request": key, "response": request_hash(text)})
            return text

        if not os.environ.get(self.config.api_key_env):
            raise GatewayError(
                f"environment variable {self.config.api_key_env} is not set"
            )
        attempts = max(1, self.config.max_retries)
        last_error: Optional[Exception] = None
        for attempt in range(1, attempts + 1):
            try:
                text = self.transport(self.config, prompt)
                self._log(
                    {
                        "mode": "live",
                        "attempt": attempt,
                        "request": key,
                        "response": request_hash(text),
                    }
                )
                return text
            except GatewayError:
                raise
            except Exception as exc:  # transport/transient failure
                last_error = exc
                self._log(
                    {
                        "mode": "live",
                        "attempt": attempt,
                        "request": key,
                        "error": str(exc),
                    }
                )
                if attempt < attempts and self.config.backoff > 0:
                    time.sleep(self.config.backoff * (2 ** (attempt - 1)))
        raise GatewayError(
            f"request {key} failed after {attempts} attempts: {last_error}"
        )

    def parse_freetext_answer(
        self, question: Question, answer_text: str, schema: Schema
    ) -> Evidence:
        """Extract attribute constraints from free text, schema-validated.

        Invalid attribute/value pairs are dropped with a warning; an answer
        with no valid extractions yields empty evidence, not an error.
        """
        prompt = _load_prompt("parse_answer").format(
            attribute_block=_attribute_block(schema),
            question=question.text,
            answer=answer_text,
        )
        raw = self.complete(prompt)
        extracted = _parse_json_object(raw)
        constraints = {}
        for attr_id, value in extracted.items():
            if attr_id not in schema:
                logger.warning("parser returned unknown attribute %r; dropped", attr_id)
                continue
            attr = schema.attribute(attr_id)
            values = value if isinstance(value, list) else [value]
            valid = tuple(v for v in attr.domain if v in values)
            if not valid:
                logger.warning(
                    "parser returned out-of-domain value(s) %r for %r; dropped",
                    values,
                    attr_id,
                )
                continue
            constraints[attr_id] = valid
        if not constraints:
            logger.warning("parser extracted no valid constraints from the answer")
        return Evidence(constraints=constraints, provenance="parser")

    def propose_question(self, history: str, schema: Schema) -> Question:
        """Ask the service for the next clarifying question."""
        prompt = _load_prompt("socratic_question").format(
            attribute_block=_attribute_block(schema),
            history=history,
        )
        raw = self.complete(prompt)
        payload = _parse_json_object(raw)
        text = payload.get("question")
        if not text or not isinstance(text, str):
            raise GatewayError("gateway question payload is missing 'question'")
        targets = tuple(
            t for t in payload.get("targets", []) if isinstance(t, str) and t in schema
        )
        return Question(targets=targets, text=text, origin="llm")

    def consolidate(self, structured_block: str) -> str:
        prompt = _load_prompt("consolidate").format(structured_block=structured_block)
        return self.complete(prompt)


def _parse_json_object(text: str) -> dict:
    """Extract the first JSON object from model output."""
    start = text.find("{")
    end = text.rfind("}")
    if start < 0 or end <= start:
        raise GatewayError("gateway response contains no JSON object")
    try:
        payload = json.loads(text[start : end + 1])
    except json.JSONDecodeError as exc:
        raise GatewayError(f"gateway response is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise GatewayError("gateway response is not a JSON object")
    return payload


def complete(config: GatewayConfig, prompt: str) -> str:
    """One-shot completion with a throwaway client."""
    return Gateway(config).complete(prompt)


def parse_freetext_answer(
    config: GatewayConfig, question: Question, answer_text: str, schema: Schema
) -> Evidence:
    """One-shot free-text parse with a throwaway client."""
    return Gateway(config).parse_freetext_answer(question, answer_text, schema)


def script_for(prompt: str, response: str) -> dict:
    """Helper to build mock-script entries from plain prompt/response pairs."""
    return {request_hash(prompt): response}


def parse_prompt_for(question: Question, answer_text: str, schema: Schema) -> str:
    """The exact parser prompt used for a question/answer pair (for mock scripting)."""
    return _load_prompt("parse_answer").format(
        attribute_block=_attribute_block(schema),
        question=question.text,
        answer=answer_text,
    )
