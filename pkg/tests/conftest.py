import pytest

import helpers


@pytest.fixture(scope="session")
def mini_landscape():
    return helpers.load_mini_landscape()


@pytest.fixture()
def shop():
    return helpers.shop_landscape()
