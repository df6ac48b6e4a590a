import json

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from storefleet.fixtures import fixture_dir
from storefleet.io import read_instance
from storefleet.model import Fleet, StepSignal, Store

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def load_fixture(name):
    return read_instance(fixture_dir(name))


def golden(name):
    return json.loads((fixture_dir(name) / "golden.json").read_text())


@pytest.fixture
def example1():
    return load_fixture("example1")


@pytest.fixture
def example_cc():
    return load_fixture("example-cc")


@pytest.fixture
def example_cc2():
    return load_fixture("example-cc2")


def example1_fleet():
    return Fleet([Store(str(i + 1), c, 100.0) for i, c in enumerate([100, 150, 200, 200, 250])])


def example1_signal():
    return StepSignal([0, 2, 3, 4], [200, 500, 100])


def assert_knots(tf, expected, tol=1e-9):
    got = np.array(tf.knots)
    exp = np.array(expected, dtype=float)
    assert got.shape == exp.shape, (tf.knots, expected)
    np.testing.assert_allclose(got, exp, atol=tol, rtol=0)
