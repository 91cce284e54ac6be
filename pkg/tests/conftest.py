import pytest

from flattorus import satgrid

# criterion number -> list of (ok, detail); filled by test_acceptance.py
ACCEPTANCE = {}

TITLES = {
    1: "exact values d1 = d2 = sqrt2/2, d3 = sqrt13/6",
    2: "closed-form bounds for m = 1..25",
    3: "hexagonal tiling optima reproduce the published rows",
    4: "hexagonal tilings certify for m = 8, 11, 12, 16",
    5: "grid non-colorability lower bounds and m=7 re-certification",
    6: "external solver agrees with brute force for s <= 4",
    7: "global optimization m=9 and m=16, monotone descent, subgradients",
    8: "polygon diameter against a sampling oracle",
    9: "partition JSON round-trips re-verify",
}


def record(criterion, ok, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(TITLES):
        rows = ACCEPTANCE.get(c)
        if not rows:
            tr.write_line(f"criterion {c}: NOT RUN  {TITLES[c]}")
            continue
        ok = all(r[0] for r in rows)
        failed = "; ".join(d for good, d in rows if not good)
        tail = f"  [{failed}]" if failed else ""
        tr.write_line(f"criterion {c}: {'PASS' if ok else 'FAIL'}  {TITLES[c]}{tail}")


@pytest.fixture(scope="session")
def solver():
    """Path of the external SAT solver; fails loudly when none is installed."""
    path = satgrid.find_solver()
    assert path is not None, "no SAT solver on PATH (install kissat or set FLATTORUS_SAT_SOLVER)"
    return path


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    name = item.name
    if rep.when == "call" and rep.failed and name.startswith("test_c") and name[6:7].isdigit():
        record(int(name[6]), False, f"{name} failed")
