"""
Run configuration for tn_search.

Environment variables come from .env (existing variables win). Run settings come from a
JSON file and `--key value` overrides; LLM settings fall back to the environment.
"""
import json
import os
import typing
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

from dotenv import load_dotenv

from errors import ConfigError
from plugins.chat_clients import PROVIDERS, ChatClient, LLMClientConfig, create_client

# Load .env file (won't override existing environment variables)
load_dotenv()

ALGORITHMS = ("tnls", "tnale", "tnllm", "hybrid", "exhaustive")
LLM_ALGORITHMS = ("tnllm", "hybrid")
LOCAL_ALGORITHMS = ("tnls", "tnale")

# JSON / CLI spellings that are not valid Python field names
ALIASES = {"lambda": "lam"}


@dataclass
class RunConfig:
    dataset: Optional[str] = None
    algorithm: str = "tnale"
    lam: float = 10.0
    max_evals: int = 500
    patience: int = 5
    delta: float = 0.0
    rank_max: Optional[int] = None
    rank_min: int = 1
    init_ranks: Optional[list[int]] = None
    seed: int = 0
    train_fraction: float = 0.8
    output_dir: str = "runs/latest"

    # inner fit
    max_iters: int = 500
    tolerance: float = 1e-6
    restarts: int = 1
    bb_steps: bool = True
    precondition: bool = True
    workers: int = 1

    # local search
    n_sample: int = 4
    p: float = 0.5
    radius: int = 1
    rounds: int = 1
    max_structures: int = 10_000

    # LLM-guided search
    llm_budget: int = 10
    local_strategy: str = "tnale"
    domain: Optional[str] = None
    domain_aware: bool = True
    llm_provider: str = "http"
    llm_endpoint: Optional[str] = None
    llm_model: Optional[str] = None
    llm_temperature: float = 0.2
    llm_timeout: float = 60.0
    llm_retries: int = 3
    llm_backoff: float = 1.0
    llm_api_key_env: Optional[str] = None
    llm_api_version: Optional[str] = None
    scripted_replies: Optional[str] = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        values = {}
        for key, value in data.items():
            name = ALIASES.get(key, key).replace("-", "_")
            if name not in known:
                raise ConfigError(f"Unknown config key {key!r}")
            values[name] = value
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object")
        config = cls.from_dict(data)
        # relative paths in a config file are relative to the file
        for name in ("dataset", "domain", "scripted_replies"):
            value = getattr(config, name)
            if value and not Path(value).is_absolute() and not Path(value).exists():
                candidate = path.parent / value
                if candidate.exists():
                    setattr(config, name, str(candidate))
        return config

    def with_overrides(self, overrides: Sequence[str]) -> "RunConfig":
        """Apply `--key value` pairs, coercing each value to the field's type."""
        hints = typing.get_type_hints(type(self))
        values = asdict(self)
        args = list(overrides)
        if len(args) % 2:
            raise ConfigError(f"Override {args[-1]!r} has no value")
        for flag, raw in zip(args[::2], args[1::2]):
            if not flag.startswith("--"):
                raise ConfigError(f"Expected an option like --key, got {flag!r}")
            name = ALIASES.get(flag[2:], flag[2:]).replace("-", "_")
            if name not in hints:
                raise ConfigError(f"Unknown config key {flag[2:]!r}")
            values[name] = _coerce(name, raw, hints[name])
        return type(self)(**values)

    def validate(self) -> "RunConfig":
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"Unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if not self.dataset:
            raise ConfigError("No dataset given (dataset / --dataset)")
        if self.lam <= 0:
            raise ConfigError(f"lambda must be > 0, got {self.lam}")
        for name in ("max_evals", "patience", "rank_min", "max_iters", "restarts", "workers",
                     "n_sample", "radius", "rounds", "llm_budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.rank_max is not None and self.rank_max < self.rank_min:
            raise ConfigError(f"rank_max {self.rank_max} is below rank_min {self.rank_min}")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"p must lie in (0, 1], got {self.p}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.local_strategy not in LOCAL_ALGORITHMS:
            raise ConfigError(
                f"Unknown local_strategy {self.local_strategy!r}; expected one of {LOCAL_ALGORITHMS}"
            )
        if self.algorithm in LLM_ALGORITHMS:
            if self.llm_provider not in PROVIDERS:
                raise ConfigError(f"Unknown LLM provider {self.llm_provider!r}; expected one of {PROVIDERS}")
            if self.domain_aware and not self.domain:
                raise ConfigError("Domain-aware LLM search needs a domain description (domain / --domain)")
            llm = self.llm_client_config()
            if llm.provider == "scripted":
                if not llm.scripted_replies:
                    raise ConfigError("Scripted provider needs scripted_replies")
            elif not llm.endpoint or not llm.model:
                raise ConfigError(
                    f"{self.algorithm} needs an LLM endpoint and model "
                    "(LLM_ENDPOINT / AZURE_OPENAI_ENDPOINT and MODEL_NAME, or llm_endpoint / llm_model)"
                )
        return self

    def llm_client_config(self) -> LLMClientConfig:
        azure = self.llm_provider == "azure"
        endpoint = self.llm_endpoint or os.getenv("AZURE_OPENAI_ENDPOINT" if azure else "LLM_ENDPOINT")
        key_env = self.llm_api_key_env or ("AZURE_OPENAI_API_KEY" if azure else "LLM_API_KEY")
        return LLMClientConfig(
            provider=self.llm_provider,
            endpoint=endpoint,
            model=self.llm_model or os.getenv("MODEL_NAME"),
            temperature=self.llm_temperature,
            timeout=self.llm_timeout,
            retries=self.llm_retries,
            backoff=self.llm_backoff,
            api_key_env=key_env,
            api_version=self.llm_api_version or os.getenv("AZURE_OPENAI_API_VERSION", "2024-12-01-preview"),
            scripted_replies=self.scripted_replies,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _coerce(name: str, raw: str, hint):
    if typing.get_origin(hint) is typing.Union:
        if raw.lower() in ("none", "null", ""):
            return None
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
    try:
        if hint is bool:
            lowered = raw.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if typing.get_origin(hint) is list:
            return [int(v) for v in raw.replace("[", "").replace("]", "").split(",") if v.strip()]
        return hint(raw)
    except ValueError as e:
        raise ConfigError(f"Bad value for {name}: {raw!r}") from e


def build_chat_client(config: RunConfig) -> ChatClient:
    """
    Creates the chat client for the configured provider.

    Reads the endpoint, model and API key from the environment unless the config sets them.
    """
    return create_client(config.llm_client_config())
