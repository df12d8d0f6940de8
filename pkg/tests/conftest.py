import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from stsp.bnb import solve_milp  # noqa: E402
from stsp.formulations import build  # noqa: E402
from stsp.generate import path_instance  # noqa: E402
from stsp.instance import build_instance  # noqa: E402

PATH3_TEXT = "nodes 3\nrequired 1 3\nedge 1 2 1\nedge 2 3 1\n"


def timed_windows_instance(service=0, windows=None):
    """Four nodes, edges 12, 13, 24, unit costs and times, one-point windows at 1, 3, 6."""
    windows = windows or {2: (1, 1), 3: (3, 3), 4: (6, 6)}
    return build_instance(4, [(1, 2, 1, 1), (1, 3, 1, 1), (2, 4, 1, 1)], [2, 3, 4],
                          service={i: service for i in (2, 3, 4)}, windows=windows, horizon=10)


def solve_tag(inst, tag, stages=None, **limits):
    form = build(inst, tag, stages)
    return solve_milp(form.model, form.sep, **limits)


@pytest.fixture
def path3():
    return path_instance(3, [1, 3])


@pytest.fixture
def triangle():
    return build_instance(3, [(1, 2, 1), (2, 3, 1), (1, 3, 1)], [1, 2, 3])


@pytest.fixture
def tw4():
    return timed_windows_instance()
