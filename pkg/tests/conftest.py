import numpy as np
import pytest

from lognn.delta import DeltaApproximator, build_table
from lognn.lnsformat import LnsFormat


@pytest.fixture(scope="session")
def fmt16():
    return LnsFormat(4, 10)


@pytest.fixture(scope="session")
def exact16(fmt16):
    return DeltaApproximator.exact(fmt16)


@pytest.fixture(scope="session")
def lut16(fmt16):
    return DeltaApproximator.lut(build_table(10.0, 0.5, fmt16))


@pytest.fixture(scope="session")
def bitshift16(fmt16):
    return DeltaApproximator.bitshift(fmt16)


def random_scalars(rng: np.random.Generator, fmt: LnsFormat, n: int,
                   lo_code=None, hi_code=None):
    """(codes, signs) arrays of random nonzero scalars."""
    lo = fmt.min_code if lo_code is None else lo_code
    hi = fmt.max_code if hi_code is None else hi_code
    codes = rng.integers(lo, hi + 1, size=n, dtype=np.int64)
    signs = rng.integers(0, 2, size=n, dtype=np.uint8)
    return codes, signs
