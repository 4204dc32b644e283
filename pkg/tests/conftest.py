import os

os.environ["APP_ENV"] = "test"
os.environ.setdefault("THREADS", "2")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from src.apps.clouds.schemas import ClassCatalog  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def catalog():
    return ClassCatalog(
        names=("floor", "chair", "table"),
        background=(True, False, False),
        mean_size=(0.0, 1.0, 1.5),
        mean_count=(0.0, 100.0, 150.0),
    )
