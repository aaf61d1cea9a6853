import random
import zlib
from pathlib import Path

import numpy as np
import pytest

SEED_KEY = pytest.StashKey[int]()


def pytest_addoption(parser: pytest.Parser):
    parser.addoption(
        "--seed",
        type=int,
        default=None,
        help="Replay a session with a fixed random seed.",
    )
    parser.addoption(
        "-F",
        "--fast",
        action="store_true",
        default=False,
        help="Skip slow tests (closed-loop runs, shooting with obstacles, etc.)",
    )


def pytest_configure(config: pytest.Config):
    config.addinivalue_line("markers", "slow: long simulations or solves (skipped with --fast)")
    seed = config.getoption("--seed")
    config.stash[SEED_KEY] = seed if seed is not None else random.randrange(1, 10_000_001)


def pytest_collection_modifyitems(config: pytest.Config, items):
    if not config.getoption("--fast"):
        return

    skip_slow = pytest.mark.skip(reason="slow test skipped by --fast")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def seed(pytestconfig: pytest.Config) -> int:
    return pytestconfig.stash[SEED_KEY]


@pytest.fixture
def rng(seed, request: pytest.FixtureRequest) -> np.random.Generator:
    """Generator keyed on the session seed and the test name, so tests draw independently."""
    return np.random.default_rng([seed, zlib.crc32(request.node.name.encode())])


def _first_line(doc: str | None) -> str:
    return doc.strip().splitlines()[0] if doc and doc.strip() else ""


def pytest_itemcollected(item: pytest.Item):
    """Build node ids from the module name plus class and test docstrings."""
    parts = [Path(str(item.fspath)).stem.removeprefix("test_").title()]

    owner = getattr(item.parent, "obj", None)
    if isinstance(owner, type):
        parts.append(_first_line(owner.__doc__) or owner.__name__)

    doc = _first_line(getattr(item.obj, "__doc__", None))
    if not doc:
        e = ValueError(f"{item.name} has no docstring")
        e.add_note("Every test states what it checks as a 'should ...' docstring.")
        raise e
    parts.append(f"{item.obj.__name__} > {doc}")

    if "[" in item.name:
        parts.append("[" + item.name.split("[", 1)[1])

    item._nodeid = " ".join(parts)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Append the replay seed to failing reports."""
    outcome = yield
    report = outcome.get_result()

    if report.when == "call" and report.failed:
        report.nodeid += f" (Reproduce with: pytest --seed={item.config.stash[SEED_KEY]})"
