"""
Natural-language description of a tensor dataset's modes.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from errors import ConfigError
from tensors.network import edge_list


@dataclass(frozen=True)
class ModeInfo:
    name: str
    size: int
    description: str = ""


@dataclass
class DomainInfo:
    """
    One ModeInfo per tensor mode plus a free-text dataset description.

    With domain awareness off, only mode sizes reach the prompts.
    """

    modes: list[ModeInfo]
    description: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.modes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(m.size for m in self.modes)

    @classmethod
    def anonymous(cls, shape: Sequence[int]) -> "DomainInfo":
        return cls([ModeInfo(f"Mode {i + 1}", int(size)) for i, size in enumerate(shape)])

    @classmethod
    def from_dict(cls, data: dict) -> "DomainInfo":
        try:
            modes = [
                ModeInfo(str(m["name"]), int(m["size"]), str(m.get("description", "")))
                for m in data["modes"]
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Malformed domain description: {e}") from e
        extra = {k: v for k, v in data.items() if k not in ("modes", "description")}
        return cls(modes, str(data.get("description", "")), extra)

    @classmethod
    def load(cls, path) -> "DomainInfo":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Domain description not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Domain description {path} is not valid JSON: {e}") from e
        return cls.from_dict(data)

    def validate(self, shape: Sequence[int], domain_aware: bool = True) -> None:
        if self.shape != tuple(shape):
            raise ConfigError(f"Domain modes {self.shape} do not match the tensor shape {tuple(shape)}")
        if domain_aware:
            missing = [m.name for m in self.modes if not m.description.strip()]
            if missing:
                raise ConfigError(f"Domain-aware prompts need a description for every mode; missing: {missing}")

    def mode_table(self, domain_aware: bool = True) -> str:
        lines = []
        if domain_aware and self.description:
            lines.append(f"Dataset: {self.description}")
            lines.append("")
        for i, mode in enumerate(self.modes, start=1):
            if domain_aware:
                lines.append(f"- Mode {i}: {mode.name} (size {mode.size}) - {mode.description}")
            else:
                lines.append(f"- Mode {i}: size {mode.size}")
        lines.append("")
        lines.append("Rank variables, in the order they must be listed:")
        for i, j in edge_list(self.order):
            if domain_aware:
                lines.append(f"- k_{i + 1}{j + 1}: {self.modes[i].name} <-> {self.modes[j].name}")
            else:
                lines.append(f"- k_{i + 1}{j + 1}: mode {i + 1} <-> mode {j + 1}")
        return "\n".join(lines)


def load_domain(path: Optional[str], shape: Sequence[int], domain_aware: bool = True) -> DomainInfo:
    """Load and validate a domain file; without one, fall back to anonymous modes."""
    if path is None:
        if domain_aware:
            raise ConfigError("Domain-aware LLM search needs a domain description file")
        return DomainInfo.anonymous(shape)
    domain = DomainInfo.load(path)
    domain.validate(shape, domain_aware)
    return domain
