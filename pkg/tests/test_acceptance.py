"""The ten acceptance criteria at their stated tolerances; one pass/fail line each.

Run directly (``python tests/test_acceptance.py``) for the lines alone.
"""

import pytest

from qdgadget.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("k", sorted(CRITERIA), ids=[f"criterion_{k}" for k in sorted(CRITERIA)])
def test_criterion(k, acceptance_lines):
    res = run_criterion(k)
    line = res.line()
    print(line)
    acceptance_lines.append(line)
    for c in res.checks:
        if c.informational:
            print(f"    info: {c.name} = {c.value:.3e} ({c.tolerance})")
    assert res.passed, line


if __name__ == "__main__":
    import sys

    results = [run_criterion(k) for k in sorted(CRITERIA)]
    for r in results:
        print(r.line(), flush=True)
    sys.exit(0 if all(r.passed for r in results) else 1)
