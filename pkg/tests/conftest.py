"""Shared fixtures: the unit disk touching x1 = 0 and its tubular chart."""

import pytest

from confined_stark.geometry import DomainSpec, build_domain, build_tubular_map


@pytest.fixture(scope="session")
def disk_spec():
    return DomainSpec.disk(1.0, (1.0, 0.0))


@pytest.fixture(scope="session")
def disk_curve(disk_spec):
    return build_domain(disk_spec)


@pytest.fixture(scope="session")
def disk_map(disk_curve):
    return build_tubular_map(disk_curve)
