from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"

_acceptance: dict[int, tuple[str, list[str]]] = {}


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture
def write_tsv(tmp_path):
    def _write(name: str, rows, header: str | None = None) -> Path:
        path = tmp_path / name
        lines = [header] if header else []
        lines += ["\t".join(map(str, r)) if not isinstance(r, str) else r for r in rows]
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        return path

    return _write


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker
    outcomes = _acceptance.setdefault(number, (title, []))[1]
    if report.when == "call" or report.outcome != "passed":
        outcomes.append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        report.acceptance = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, outcomes = _acceptance[number]
        ok = outcomes and all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] AC{number}: {title} ({len(outcomes)} check(s))")
