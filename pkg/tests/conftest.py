from pathlib import Path

import pytest

import powerplan as pp

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def profile_joint() -> pp.DeviceProfile:
    """Two-batch profile where b=64 at 460 MHz beats b=128 at 307 MHz under 5 W."""
    return pp.load_profile((DATA / "profile_b64_b128.csv").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def profile_flip() -> pp.DeviceProfile:
    """Two-batch profile whose best batch size flips from 8 to 32 as the cap rises."""
    return pp.load_profile((DATA / "profile_b8_b32.csv").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def relation_uniform() -> pp.RelationVector:
    return pp.parse_relation_file(
        (DATA / "relation_uniform_b64_b128.csv").read_text(encoding="utf-8")
    )


@pytest.fixture(scope="session")
def relation_small() -> pp.RelationVector:
    return pp.parse_relation_file((DATA / "relation_b8_b32.csv").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def counts_small() -> dict[int, float]:
    counts, _ = pp.parse_counts_file((DATA / "counts_b8_b32.csv").read_text(encoding="utf-8"))
    return counts


@pytest.fixture(scope="session")
def safe_shared() -> pp.SafeFrequencyTable:
    return pp.parse_safe_table((DATA / "safe_freqs.csv").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def safe_small() -> pp.SafeFrequencyTable:
    return pp.parse_safe_table((DATA / "safe_freqs_b8_b32.csv").read_text(encoding="utf-8"))
