from __future__ import annotations

from pathlib import Path

import pytest

from contextstream import io
from contextstream.core import Containment
from contextstream.hierarchy import compile_hierarchy

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def pytest_addoption(parser):
    parser.addoption(
        "--bless", action="store_true", default=False,
        help="regenerate golden files from current outputs",
    )


@pytest.fixture(scope="session")
def bless(request):
    return request.config.getoption("--bless")


def golden_check(path: Path, text: str, bless: bool) -> None:
    if bless:
        path.write_text(text, encoding="utf-8")
    assert path.exists(), f"golden file {path} missing; run pytest --bless"
    assert path.read_text(encoding="utf-8") == text


@pytest.fixture(scope="session")
def travel_etg():
    return io.load_etg(FIXTURES / "travel_etg.json")


@pytest.fixture(scope="session")
def travel_eg(travel_etg):
    return io.load_eg(FIXTURES / "travel_eg.json", travel_etg)


@pytest.fixture(scope="session")
def travel_containment():
    return Containment(
        location_parent={"train_1": "trentino", "roads_2": "trentino"},
        event_parent={"take_train": "travel_1", "walk": "travel_1"},
    )


@pytest.fixture(scope="session")
def travel_stream(travel_containment):
    return io.load_stream(FIXTURES / "travel_stream.jsonl", travel_containment)


@pytest.fixture(scope="session")
def travel_hierarchy(travel_etg, travel_eg):
    return compile_hierarchy(travel_etg, travel_eg)


@pytest.fixture(scope="session")
def travel_scenario():
    return io.load_scenario(FIXTURES / "travel_scenario.json")


# -- independent graph oracles (kept dumb on purpose) ----------------------

def dfs_reachable_pairs(n: int, edges: set[tuple[int, int]]) -> set[tuple[int, int]]:
    """All (i, j) with a directed path i -> j, by per-node DFS."""
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in edges:
        adj[a].append(b)
    out: set[tuple[int, int]] = set()
    for start in range(n):
        stack = list(adj[start])
        seen: set[int] = set()
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            out.add((start, node))
            stack.extend(adj[node])
    return out


def dfs_closure_ids(edges: set[tuple[str, str]], seeds: set[str]) -> set[str]:
    """Seeds plus everything reachable from them over child->parent edges."""
    adj: dict[str, list[str]] = {}
    for child, parent in edges:
        adj.setdefault(child, []).append(parent)
    out = set(seeds)
    stack = list(seeds)
    while stack:
        node = stack.pop()
        for parent in adj.get(node, ()):
            if parent not in out:
                out.add(parent)
                stack.append(parent)
    return out


def random_dag(rng, n: int, p: float = 0.15) -> set[tuple[int, int]]:
    """Random DAG on 0..n-1 with edges only from lower to higher index."""
    edges: set[tuple[int, int]] = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((i, j))
    return edges
