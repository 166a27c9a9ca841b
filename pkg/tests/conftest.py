import re
import sys


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion, even when pytest
    # captures in-test prints (the in-test PASS lines carry extra detail and
    # show under -s)
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    match = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not match:
        return
    number, name = int(match.group(1)), match.group(2).replace("_", " ")
    verdict = "PASS" if report.passed else "FAIL"
    sys.stdout.write(f"\nACCEPTANCE {number:02d} {name}: {verdict}\n")
