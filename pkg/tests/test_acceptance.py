import pytest

from qplancherel.acceptance import CRITERIA


@pytest.mark.parametrize("name, check", CRITERIA, ids=[c[0].replace(" ", "_") for c in CRITERIA])
def test_criterion(name, check, capsys):
    ok, detail = check()
    # shown even without -s so the log carries one line per criterion
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail
