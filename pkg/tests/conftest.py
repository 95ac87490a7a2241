import warnings

import pytest

from rectenna.circuit import build_netlist, solve_transient

_CRITERIA = {}


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    """Compile (or load from cache) the numba kernels before any timing test."""
    net = build_netlist([
        {"name": "V1", "kind": "voltage-source", "nodes": ("a", "0"),
         "source": {"amplitude": 1.0, "frequency": 1e9}},
        {"name": "R1", "kind": "resistor", "nodes": ("a", "b"), "value": 50.0},
        {"name": "D1", "kind": "diode", "nodes": ("b", "c")},
        {"name": "L1", "kind": "inductor", "nodes": ("c", "d"), "value": 1e-9},
        {"name": "C1", "kind": "capacitor", "nodes": ("d", "0"), "value": 1e-12},
    ])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        solve_transient(net, 2e-9, 1e-11)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.failed:
        if report.failed or name not in _CRITERIA:
            _CRITERIA[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda n: int(n.split("_")[2])):
        num = name.split("_")[2]
        label = " ".join(name.split("_")[3:])
        verdict = "PASS" if _CRITERIA[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num} ({label}): {verdict}")
