"""Shared test setup."""

import pytest

from softlev import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Compile (or load from cache) every dispatched kernel before any test
    # runs, so timed assertions measure math instead of the JIT.
    _kernels.warmup()
