import time

import pytest

from imdrive.scenario import get_builtin, run


class BuiltinRuns:
    """Runs each built-in scenario at most once per test session."""

    def __init__(self):
        self._cache = {}

    def __call__(self, name):
        if name not in self._cache:
            start = time.perf_counter()
            series, summary = run(get_builtin(name))
            self._cache[name] = (series, summary, time.perf_counter() - start)
        return self._cache[name]


@pytest.fixture(scope="session")
def builtin_runs():
    return BuiltinRuns()
