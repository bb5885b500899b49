from pathlib import Path

import pytest

from epart.dsl import parse_program
from epart.partition import compute_images

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def bank_source() -> str:
    return (FIXTURES / "bank.ep").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def bank_program(bank_source):
    return parse_program(bank_source)


@pytest.fixture(scope="session")
def bank_plan(bank_program):
    return compute_images(bank_program)
