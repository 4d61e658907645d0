import numpy as np
import pytest

from safeslew.dynamics import InertiaMatrix
from safeslew.keepout import KeepOutZone


@pytest.fixture
def inertia():
    return InertiaMatrix.default()


@pytest.fixture
def table2_zone():
    """The bundled example scenario's cone (avoid direction normalized)."""
    return KeepOutZone.create(
        np.array([0.703, 0.263, 0.661]), np.array([1.0, 0.0, 0.0]), np.radians(25.0)
    )
