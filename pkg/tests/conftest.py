import re
from collections import defaultdict

_AC = re.compile(r"test_acceptance\.py::test_ac(\d+)_")
_outcomes: dict[int, list[str]] = defaultdict(list)
TITLES = {
    1: "controller arithmetic under stagnation",
    2: "decrease off reset and bounded restarts",
    3: "P + D cancellation identity",
    4: "heuristic weights and oracle",
    5: "quadtree counts, homogeneity, argmin",
    6: "GMRES matches direct solve",
    7: "end-to-end tuning beats default and GMRES(30)",
    8: "m_max bounds and capped benefit",
    9: "ILU(0) pattern, exactness, fewer iterations",
    10: "tune reruns are byte-identical",
}


def pytest_runtest_logreport(report):
    m = _AC.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        _outcomes[n].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        res = _outcomes[n]
        status = "PASS" if res and all(r == "passed" for r in res) else "FAIL"
        terminalreporter.write_line(f"AC{n} {status}  {TITLES.get(n, '')}")
