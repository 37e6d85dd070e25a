import numpy as np
import pytest

from ltbarrier.contracts import BarrierClause, ContractSpec
from ltbarrier.market import MarketSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240307)


@pytest.fixture
def single_asset_market():
    """One asset, two dates; small enough to check by hand."""
    return MarketSpec(s0=[100.0], sigma=[0.3], rho=np.eye(1), rate=0.05,
                      horizon=1.0, steps=2)


@pytest.fixture
def small_basket_market():
    """Two assets, three dates (mn = 6)."""
    return MarketSpec(
        s0=[100.0, 95.0], sigma=[0.3, 0.2],
        rho=np.array([[1.0, 0.35], [0.35, 1.0]]),
        rate=0.04, horizon=1.0, steps=3)


@pytest.fixture
def up_out_call():
    return ContractSpec(
        family="asian_basket_call", strike=90.0,
        barriers=(BarrierClause(asset=0, level=130.0, direction="up",
                                kind="knock_out"),))
