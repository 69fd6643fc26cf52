import random
import sys
from fractions import Fraction as Fr
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from smallcover import DiscreteLaw, IndexSet, Instance, ValueMap  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def i1():
    return Instance(DiscreteLaw(oracles.I1_P), ValueMap(oracles.I1_F), IndexSet(oracles.I1_T),
                    K=2, delta=Fr(1, 2), L=Fr(3, 2))


@pytest.fixture
def selector_inst():
    return Instance(DiscreteLaw((Fr(3, 4), Fr(1, 4))), ValueMap((0, 1)),
                    IndexSet(((1, 0), (0, 1))), K=1, L=Fr(1, 2))


def small_instances(count, seed, max_d=2, max_n=3, max_K=2):
    """Random instances small enough for raw-matrix brute force."""
    from smallcover.verify import random_instance

    rng = random.Random(seed)
    return [random_instance(rng, max_d=max_d, max_n=max_n, max_K=max_K) for _ in range(count)]


def raw(inst):
    """(p, f, T) tuples in the oracle's plain format."""
    return inst.law.p, inst.f.values, inst.T.vectors
