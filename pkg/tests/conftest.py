import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def example_5():
    return json.loads((FIXTURES / "example_5_5_5_2_2.json").read_text())


@pytest.fixture(scope="session")
def example_6():
    return json.loads((FIXTURES / "example_6_6_6_2_2.json").read_text())
