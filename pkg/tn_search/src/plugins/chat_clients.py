"""
Chat-completion clients for the LLM-guided search.

- HttpChatClient: OpenAI-compatible /chat/completions endpoint over requests
- AzureOpenAIChatClient: Azure OpenAI deployment through the openai SDK
- ScriptedChatClient: canned replies, for tests and offline reruns

Every client exposes `complete(messages) -> str` and keeps at most one request in flight.
"""
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

import openai
import requests

from errors import (
    ConfigError,
    LLMAuthError,
    LLMRequestError,
    LLMResponseError,
    ScriptExhaustedError,
)

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
PROVIDERS = ("http", "azure", "scripted")
RETRY_STATUSES = (429, 500, 502, 503, 504)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"Unknown chat role {self.role!r}")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class LLMClientConfig:
    provider: str = "http"
    endpoint: Optional[str] = None
    model: Optional[str] = None
    temperature: float = 0.2
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 1.0
    api_key_env: str = "LLM_API_KEY"
    api_version: str = "2024-12-01-preview"
    scripted_replies: Optional[str] = None

    def __post_init__(self):
        if self.provider not in PROVIDERS:
            raise ConfigError(f"Unknown LLM provider {self.provider!r}; expected one of {PROVIDERS}")
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be > 0, got {self.timeout}")
        if self.retries < 0:
            raise ConfigError(f"retries must be >= 0, got {self.retries}")


class ChatClient(Protocol):
    def complete(self, messages: Sequence[ChatMessage]) -> str: ...


def chat_complete(transcript: Sequence[ChatMessage], client: ChatClient) -> str:
    """Send a transcript and return the assistant reply text."""
    if not transcript:
        raise ValueError("Cannot send an empty transcript")
    if transcript[0].role != "system":
        raise ValueError("Transcript must start with the system message")
    return client.complete(list(transcript))


class HttpChatClient:
    def __init__(self, config: LLMClientConfig):
        if not config.endpoint:
            raise ConfigError("LLM endpoint is not set (LLM_ENDPOINT or llm.endpoint)")
        if not config.model:
            raise ConfigError("LLM model is not set (MODEL_NAME or llm.model)")
        self.config = config
        self._lock = threading.Lock()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        api_key = os.getenv(self.config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        return headers

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        payload = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [m.to_dict() for m in messages],
        }
        attempts = self.config.retries + 1
        last_error: Optional[LLMRequestError] = None
        with self._lock:
            for attempt in range(attempts):
                if attempt:
                    delay = self.config.backoff * 2 ** (attempt - 1)
                    logger.warning(f"[LLM] Retry {attempt}/{self.config.retries} in {delay:.1f}s: {last_error}")
                    time.sleep(delay)
                try:
                    resp = requests.post(
                        self.config.endpoint,
                        json=payload,
                        headers=self._headers(),
                        timeout=self.config.timeout,
                    )
                except requests.RequestException as e:
                    last_error = LLMRequestError(f"Transport error: {e}")
                    continue

                if resp.status_code in (401, 403):
                    raise LLMAuthError(
                        f"HTTP {resp.status_code} from LLM endpoint; check the API key in "
                        f"${self.config.api_key_env}",
                        resp.status_code,
                    )
                if resp.status_code in RETRY_STATUSES:
                    last_error = LLMRequestError(f"HTTP {resp.status_code}: {resp.text[:200]}", resp.status_code)
                    continue
                if resp.status_code >= 400:
                    raise LLMRequestError(f"HTTP {resp.status_code}: {resp.text[:200]}", resp.status_code)
                return _extract_content(resp)
        raise last_error


def _extract_content(resp: requests.Response) -> str:
    try:
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as e:
        raise LLMResponseError(f"Malformed chat completion body: {e}") from e
    if not isinstance(content, str):
        raise LLMResponseError("Chat completion content is not text")
    return content


class AzureOpenAIChatClient:
    def __init__(self, config: LLMClientConfig, client: Optional[openai.AzureOpenAI] = None):
        if client is None:
            if not config.endpoint or not config.model:
                raise ConfigError("Azure OpenAI needs AZURE_OPENAI_ENDPOINT and MODEL_NAME")
            client = openai.AzureOpenAI(
                api_version=config.api_version,
                azure_endpoint=config.endpoint,
                api_key=os.getenv(config.api_key_env),
                timeout=config.timeout,
                max_retries=config.retries,
            )
        self.config = config
        self.client = client
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        with self._lock:
            try:
                response = self.client.chat.completions.create(
                    model=self.config.model,
                    temperature=self.config.temperature,
                    messages=[m.to_dict() for m in messages],
                )
            except openai.AuthenticationError as e:
                raise LLMAuthError(
                    f"Azure OpenAI rejected the credentials; check ${self.config.api_key_env}", 401
                ) from e
            except openai.APIStatusError as e:
                raise LLMRequestError(f"HTTP {e.status_code}: {e.message}", e.status_code) from e
            except openai.APIError as e:
                raise LLMRequestError(f"Azure OpenAI error: {e}") from e
        try:
            content = response.choices[0].message.content
        except (AttributeError, IndexError) as e:
            raise LLMResponseError(f"Malformed chat completion: {e}") from e
        if not isinstance(content, str):
            raise LLMResponseError("Chat completion content is not text")
        return content


class ScriptedChatClient:
    """Replays canned replies in order and records every request it receives."""

    def __init__(self, replies: Iterable[str]):
        self.replies = list(replies)
        self.requests: list[list[ChatMessage]] = []
        self._cursor = 0

    @classmethod
    def from_file(cls, path) -> "ScriptedChatClient":
        """JSON list of reply strings, or an object with a "replies" list."""
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Scripted replies file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Scripted replies file {path} is not valid JSON: {e}") from e
        replies = data.get("replies") if isinstance(data, dict) else data
        if not isinstance(replies, list) or not all(isinstance(r, str) for r in replies):
            raise ConfigError(f"Scripted replies file {path} must hold a list of strings")
        return cls(replies)

    @property
    def remaining(self) -> int:
        return len(self.replies) - self._cursor

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        self.requests.append(list(messages))
        if self._cursor >= len(self.replies):
            raise ScriptExhaustedError(f"Scripted client ran out of replies after {len(self.replies)}")
        reply = self.replies[self._cursor]
        self._cursor += 1
        return reply


def create_client(config: LLMClientConfig) -> ChatClient:
    if config.provider == "scripted":
        if not config.scripted_replies:
            raise ConfigError("Scripted provider needs a scripted replies file")
        return ScriptedChatClient.from_file(config.scripted_replies)
    if config.provider == "azure":
        return AzureOpenAIChatClient(config)
    return HttpChatClient(config)
