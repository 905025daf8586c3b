import numpy as np
import pytest
from hypothesis import settings, strategies as st

from shrutikit.grammar import RagaSpec, default_raga
from shrutikit.scale import DEFAULT_SCALE

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_raga(rng: np.random.Generator, n_states=None, pakad=True) -> RagaSpec:
    """A valid raga over a random subset of the 22 Shrutis.

    Adjacent steps are always allowed; leaps and repeats are sprinkled in at
    random, with repeats forced at the range ends so every note has an
    outgoing edge in both directions.
    """
    n = int(rng.integers(3, 9)) if n_states is None else n_states
    active = sorted(rng.choice(len(DEFAULT_SCALE), size=n, replace=False).tolist())
    up = {(active[k], active[k + 1]) for k in range(n - 1)}
    down = {(active[k + 1], active[k]) for k in range(n - 1)}
    up.add((active[-1], active[-1]))
    up.add((active[0], active[0]))
    down.add((active[0], active[0]))
    down.add((active[-1], active[-1]))
    for i in range(n):
        for j in range(i + 2, n):
            if rng.random() < 0.25:
                up.add((active[i], active[j]))
            if rng.random() < 0.25:
                down.add((active[j], active[i]))
        if rng.random() < 0.3:
            up.add((active[i], active[i]))
        if rng.random() < 0.3:
            down.add((active[i], active[i]))
    motifs = []
    if pakad and n >= 3 and rng.random() < 0.7:
        start = int(rng.integers(0, n - 2))
        motifs.append(tuple(active[start:start + 3]))
    vadi, samvadi = rng.choice(active, size=2, replace=False).tolist()
    return RagaSpec(
        name="R",
        active=tuple(active),
        ascent_edges=frozenset(up),
        descent_edges=frozenset(down),
        pakad=tuple(motifs),
        vadi=vadi,
        samvadi=samvadi,
        alpha=float(rng.uniform(0, 0.5)),
        pakad_bonus_factor=float(rng.uniform(1, 2)),
    )


@st.composite
def ragas(draw, max_states=8):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return random_raga(rng, n_states=int(rng.integers(3, max_states + 1)))


@pytest.fixture(scope="session")
def yaman():
    return default_raga("Yaman")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: primary acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
