import math
from collections import OrderedDict

import pytest

from cevsmile.cev_dist import BoundaryBehaviour, CevModel

Y0, T, C = 0.07, 0.5, 0.2


def ref_model(p, boundary=BoundaryBehaviour.ABSORBING):
    """Reference parameters: y0 = 0.07, xi = 0.2 y0^(1/2 - p), t = 0.5."""
    return CevModel.with_auto_xi(C, Y0, T, p, boundary)


@pytest.fixture
def model_of():
    return ref_model


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config._criteria = OrderedDict()


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    store = report.config._criteria if hasattr(report, "config") else None
    if store is None:
        return
    store.setdefault(crit, []).append((report.nodeid.split("::")[-1], report.outcome,
                                       dict(report.user_properties).get("detail", "")))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.config = item.config
    m = item.get_closest_marker("criterion")
    if m is not None and not any(k == "criterion" for k, _ in rep.user_properties):
        rep.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_criteria", None)
    if not store:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(store):
        parts = store[crit]
        ok = all(o == "passed" for _, o, _ in parts)
        tr.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}")
        for name, outcome, detail in parts:
            tr.write_line(f"    {outcome.upper():7s} {name}{('  ' + detail) if detail else ''}")


def rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a)


__all__ = ["ref_model", "rel", "math"]
