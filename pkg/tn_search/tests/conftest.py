"""
Shared fixtures. src/ is the import root, as for the entry points.
"""
import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(SRC))

from agents.domain_info import DomainInfo, ModeInfo  # noqa: E402
from objective.fitting import FitConfig  # noqa: E402
from plugins.chat_clients import ScriptedChatClient  # noqa: E402
from tensors.network import TNStructure  # noqa: E402
from tensors.synthetic import generate_synthetic  # noqa: E402

TN_SEARCH_DIR = Path(__file__).resolve().parents[1]
PLANTED_SHAPE = (6, 6, 6)
PLANTED_RANKS = (3, 2, 1)


@pytest.fixture(scope="session")
def planted_structure() -> TNStructure:
    return TNStructure(3, PLANTED_RANKS)


@pytest.fixture(scope="session")
def planted_dataset(planted_structure):
    """Noiseless (6, 6, 6) instance, L = 8, planted ranks (3, 2, 1)."""
    return generate_synthetic(PLANTED_SHAPE, planted_structure, num_samples=8, seed=0)


@pytest.fixture
def small_dataset():
    """(3, 3, 3) instance, L = 3, planted ranks (2, 1, 1)."""
    return generate_synthetic((3, 3, 3), TNStructure(3, (2, 1, 1)), num_samples=3, seed=1)


@pytest.fixture
def fast_fit() -> FitConfig:
    return FitConfig(max_iters=150, tolerance=1e-8)


@pytest.fixture
def small_domain() -> DomainInfo:
    return DomainInfo(
        [
            ModeInfo("Rows", 3, "Row index of a small synthetic tensor."),
            ModeInfo("Columns", 3, "Column index; strongly coupled to rows."),
            ModeInfo("Channels", 3, "Channel index; weakly coupled to the others."),
        ],
        description="Small synthetic tensors for tests.",
    )


@pytest.fixture
def planted_domain() -> DomainInfo:
    return DomainInfo.load(TN_SEARCH_DIR / "domains" / "synthetic_cube.json")


@pytest.fixture
def scripted_client():
    def make(replies):
        return ScriptedChatClient(replies)
    return make
