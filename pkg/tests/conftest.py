import random

import pytest

from walshlab.core import TruthTable


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def random_table(rng: random.Random, n: int) -> TruthTable:
    return TruthTable(n, rng.getrandbits(1 << n))


def random_balanced(rng: random.Random, n: int) -> TruthTable:
    points = list(range(1 << n))
    rng.shuffle(points)
    bits = 0
    for x in points[: 1 << (n - 1)]:
        bits |= 1 << x
    return TruthTable(n, bits)
