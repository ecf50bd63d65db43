import pytest

from timebin_qkd import Frame

# Five n=8 frames reconstructed from the worked example; units are 1-indexed.
FIG1_UNITS = [(1,), (3, 4), (), (4, 5), (1, 3, 4, 7)]


def frame8(*units):
    return Frame.from_units(8, units, one_indexed=True)


@pytest.fixture
def fig1_frames():
    return [frame8(*u) for u in FIG1_UNITS]


def all_frames(n):
    return [Frame.from_bits(n, pattern) for pattern in range(1 << n)]
