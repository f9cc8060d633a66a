import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fab_apk import build_fixture_apk  # noqa: E402

ACCEPTANCE_RESULTS: dict[str, str] = {}


def record_criterion(name: str) -> None:
    """Called by acceptance tests once their assertions have all passed."""
    ACCEPTANCE_RESULTS[name] = "PASS"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        return
    ran_acceptance = any(
        "test_acceptance" in str(item) for item in terminalreporter.stats.get("passed", [])
    ) or any(
        "test_acceptance" in str(item) for item in terminalreporter.stats.get("failed", [])
    ) or any(
        "test_acceptance" in str(item) for item in terminalreporter.stats.get("skipped", [])
    )
    if not ran_acceptance:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, gated in CRITERIA:
        status = ACCEPTANCE_RESULTS.get(name)
        if status is None:
            status = "SKIP (env-gated)" if gated else "FAIL"
        terminalreporter.write_line(f"  {status:18s} {name}")


@pytest.fixture(scope="session")
def fixture_apk() -> bytes:
    return build_fixture_apk()


@pytest.fixture(scope="session")
def fixture_apk_multidex() -> bytes:
    return build_fixture_apk(second_dex=True)


@pytest.fixture(scope="session")
def signing_key(tmp_path_factory):
    from appgrease import signer

    store = tmp_path_factory.mktemp("keys") / "signing.pem"
    return signer.generate_key(store)
