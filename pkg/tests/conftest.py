import pytest

from ris_ambient.scenario import baseline_config, build_scenario

# Filled by test_acceptance.py, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def baseline():
    return build_scenario(baseline_config())


@pytest.fixture(scope="session")
def make_scenario():
    def _make(**overrides):
        cfg = baseline_config()
        spread = overrides.pop("angle_spread", None)
        cfg.update(overrides)
        if spread:
            cfg["angle_spread"].update(spread)
        return build_scenario(cfg)

    return _make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
