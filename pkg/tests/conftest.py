from pathlib import Path

import numpy as np
import pytest

from sharpmetrics import load_image

DATA = Path(__file__).parent / "data"
CORPUS = sorted(DATA.glob("*.png"))

# natural photograph used as the reference crop for the sharpening sweep
SWEEP_CROP = "chelsea"

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def corpus():
    """name -> luma array for every bundled 128x128 crop."""
    return {p.stem: load_image(p).pixels for p in CORPUS}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    """Record an acceptance criterion outcome, then assert it."""

    def _record(number: int, ok: bool, detail: str):
        _ACCEPTANCE[number] = (bool(ok), detail)
        assert ok, f"criterion {number}: {detail}"

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
