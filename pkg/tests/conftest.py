import warnings

import pytest

from thinpart.partition import StructuralWarning


@pytest.fixture(autouse=True)
def _quiet_structural_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StructuralWarning)
        yield
