from __future__ import annotations

import pytest

import helpers


@pytest.fixture(scope="session")
def vc5():
    return helpers.maize_vc("cross_classified")


@pytest.fixture(scope="session")
def vc5_nested():
    return helpers.maize_vc("nested")


@pytest.fixture(scope="session")
def profile5():
    return helpers.maize_profile()
