import collections

import numpy as np
import pytest

LETTERS = {ch: i + 1 for i, ch in enumerate("abcdefgh")}


def ids(text):
    """Map a string like "abac" to item ids a=1, b=2, ..."""
    return [LETTERS[ch] for ch in text]


def brute_counts(stream):
    return collections.Counter(int(x) for x in stream)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def oracle60():
    """60-item stream over 5 items; a occurs 25 > 60/3 times, nothing else does."""
    counts = {1: 25, 2: 15, 3: 10, 4: 6, 5: 4}
    stream = np.repeat(np.array(list(counts), dtype=np.uint64), list(counts.values()))
    np.random.default_rng(7).shuffle(stream)
    return stream


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion.

    Usage: ``with criterion("3", "recall at desk scale") as note: ...``;
    ``note(text)`` attaches measured values to the line.
    """
    import contextlib

    @contextlib.contextmanager
    def ctx(number, title):
        details = []
        try:
            yield details.append
        except pytest.skip.Exception:
            _ACCEPTANCE_LINES.append(f"SKIP  criterion {number}: {title} | {'; '.join(details)}")
            raise
        except BaseException:
            _ACCEPTANCE_LINES.append(f"FAIL  criterion {number}: {title} | {'; '.join(details)}")
            raise
        _ACCEPTANCE_LINES.append(f"PASS  criterion {number}: {title} | {'; '.join(details)}")

    return ctx


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
