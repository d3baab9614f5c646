import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tetrosense.tiling import BUILTIN_LAYOUTS, get_layout  # noqa: E402

ALL_LAYOUTS = tuple(BUILTIN_LAYOUTS)
TETROMINO_LAYOUTS = ("t4x4", "galdo6x6", "geared8x8")


@pytest.fixture(scope="session")
def camera():
    skdata = pytest.importorskip("skimage.data")
    return skdata.camera() / 255.0


@pytest.fixture(scope="session")
def natural_crop(camera):
    """128 x 128 crop with the photographer's head and coat (edges and flat areas)."""
    return camera[64:192, 180:308].copy()


@pytest.fixture(params=ALL_LAYOUTS)
def layout(request):
    return get_layout(request.param)


def smooth_periodic(M, N):
    """Smooth image that is periodic on its own M x N grid."""
    a, b = np.mgrid[0:M, 0:N]
    return (0.5 + 0.2 * np.sin(2 * np.pi * a / M) * np.cos(4 * np.pi * b / N)
            + 0.1 * np.cos(6 * np.pi * (a / M + b / N)))


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {title}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
