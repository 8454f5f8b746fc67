import glob
import os

import pytest

from seclus.parser import parse_program

FIXDIR = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def load(name: str):
    path = os.path.join(FIXDIR, name)
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read(), filename=path)


def fixture_path(name: str) -> str:
    return os.path.join(FIXDIR, name)


def leaky_pairs():
    """(program path, policy path) for every hand-planted leaky fixture."""
    out = []
    for lus in sorted(glob.glob(os.path.join(FIXDIR, "leaky", "*.lus"))):
        out.append((lus, os.path.splitext(lus)[0] + ".pol"))
    return out


@pytest.fixture(scope="session")
def cnt_dn():
    return load("cnt_dn.lus")


@pytest.fixture(scope="session")
def re_trig():
    return load("re_trig.lus")
