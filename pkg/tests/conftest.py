import os
import sys
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from surplex.prob_core import RandVar, make_space, uniform_space  # noqa: E402

settings.register_profile("surplex", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("surplex")


@pytest.fixture
def u4():
    return uniform_space(4)


@pytest.fixture
def u2():
    return uniform_space(2)


@st.composite
def spaces(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    w = draw(st.lists(st.integers(1, 20), min_size=n, max_size=n))
    return make_space(np.array(w, float), normalize=True)


@st.composite
def positions(draw, space=None, min_n=1, max_n=8):
    sp = space if space is not None else draw(spaces(min_n, max_n))
    # quarter-integers give plenty of ties between atoms
    vals = draw(st.lists(st.integers(-40, 40), min_size=sp.n, max_size=sp.n))
    return RandVar(np.array(vals, float) / 4.0, sp)


def random_space(rng, n):
    return make_space(rng.integers(1, 20, n).astype(float), normalize=True)


# -- acceptance criterion reporting ------------------------------------------

_CRITERIA: dict = {}


class _Criterion:
    """Context manager recording one PASS/FAIL line per acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, et, ev, tb):
        ok = et is None
        detail = self.detail if ok else f"{et.__name__}: {str(ev).splitlines()[0] if str(ev) else ''}"
        _CRITERIA[self.number] = (ok, self.title, detail, time.perf_counter() - self.t0)
        line = format_criterion(self.number)
        print(line)
        return False


def format_criterion(n: int) -> str:
    ok, title, detail, dt = _CRITERIA[n]
    return f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]  ({dt:.1f}s)"


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(format_criterion(n))
