import time

import pytest

from insightmem.core import Experience, OutcomeRecord

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    number, title = marker.args
    _RESULTS[number] = (title, rep.outcome, getattr(item, "_elapsed", None))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, outcome, elapsed = _RESULTS[number]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        took = f" ({elapsed:.2f}s)" if elapsed is not None else ""
        terminalreporter.write_line(f"[{verdict}] {number}. {title}{took}")


@pytest.fixture
def stopwatch(request):
    """Yields a callable returning seconds since the test body started; recorded for the summary."""
    start = time.perf_counter()

    def elapsed():
        request.node._elapsed = time.perf_counter() - start
        return request.node._elapsed

    yield elapsed
    if getattr(request.node, "_elapsed", None) is None:
        elapsed()


def make_exp(exp_id, query="put the apple on the table", success=True, env=None, steps=2, gcn=2):
    scn = gcn if success else 0
    return Experience(
        id=exp_id,
        task_background="a small room",
        user_query=query,
        plan=tuple(f"goto room{i}" for i in range(steps)),
        feedback=tuple("ok" for _ in range(steps)),
        executed_steps=tuple({"step": f"goto room{i}", "ok": True} for i in range(steps)),
        outcome=OutcomeRecord.from_counts(scn, gcn, steps),
        env_category=env,
    )


@pytest.fixture
def exp_factory():
    return make_exp
