import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from policytree.data import FeatureSpec
from policytree.tree import Leaf, PolicyTree, Split, SplitRule

sys.path.insert(0, str(Path(__file__).parent))

# first calls pay for numba compilation, so no per-example deadline
settings.register_profile('default', deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile('default')

DATA_DIR = Path(__file__).parent / 'data'


def rhc_tree() -> PolicyTree:
    specs = (FeatureSpec('age', 'continuous'),
             FeatureSpec('surv2md1', 'continuous'))
    labels = ('no RHC', 'yes RHC')
    root = Split(SplitRule(0, threshold=65.0),
                 Split(SplitRule(1, threshold=0.48), Leaf(1), Leaf(0)),
                 Split(SplitRule(1, threshold=0.402), Leaf(1), Leaf(0)))
    return PolicyTree(root, specs, labels, 2)


@pytest.fixture
def rhc_depth2():
    return rhc_tree()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section('acceptance criteria')
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
