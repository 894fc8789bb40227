# tests/conftest.py

import os
import sys
from fractions import Fraction

import pytest

# Same path setup as src/main.py
SRC_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src")
sys.path.append(os.path.abspath(SRC_DIR))

DATA_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "data"))

import harmonic  # noqa: E402
from padic_core import LogBranch, PadicNumber  # noqa: E402

N = 12


def padic(x, p, n=N):
    return PadicNumber.from_rational(Fraction(x), p, n)


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def axis3():
    # qtilde = 3 * 4, translation length 1
    return harmonic.axis_cocycle(3, padic(12, 3), 6)


@pytest.fixture
def periodic3():
    return harmonic.periodic_cocycle(3, padic(12, 3), {1: 1, 2: -1}, 7)


@pytest.fixture
def iwasawa3():
    return LogBranch.iwasawa(3, N)
