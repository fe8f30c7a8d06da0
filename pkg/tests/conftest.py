import pytest
from hypothesis import HealthCheck, settings

from michelkit.corpus import vote_albert_text, vote_contract
from michelkit.typecheck import typecheck_contract

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def vote_src():
    return vote_contract()


@pytest.fixture(scope="session")
def vote_typed(vote_src):
    return typecheck_contract(vote_src)


@pytest.fixture(scope="session")
def vote_alb():
    return vote_albert_text()
