import pytest
from hypothesis import settings

# Property suites draw at least 50 cases each; derandomized so that every run
# of the suite checks the same cases.
settings.register_profile("suite", max_examples=60, deadline=None, derandomize=True,
                          print_blob=True)
settings.load_profile("suite")


# --- acceptance verdicts -------------------------------------------------------
#
# Acceptance tests record the outcome of each check through the ``verdict``
# fixture.  A criterion may be split over several tests; the terminal summary
# folds its parts into one PASS/FAIL line.

_VERDICTS = pytest.StashKey[dict]()
ACCEPTANCE_CRITERIA = range(1, 10)


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


@pytest.fixture
def verdict(request):
    store = request.config.stash[_VERDICTS]

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        store.setdefault(number, (title, []))[1].append((bool(ok), detail))
        print(f"criterion {number} {'pass' if ok else 'FAIL'}: {detail}")
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_VERDICTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in ACCEPTANCE_CRITERIA:
        if number not in store:
            terminalreporter.write_line(f"criterion {number}: FAIL (no verdict recorded)")
            continue
        title, parts = store[number]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = "; ".join(detail for _, detail in parts)
        terminalreporter.write_line(f"criterion {number}: {status} {title} | {details}")
