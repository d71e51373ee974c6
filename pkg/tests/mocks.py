"""Small mock systems shared by the falsification tests."""

import numpy as np

from falsar.systems import ScaledModel, SystemModel


class Lattice(SystemModel):
    """Static mock whose outputs are multiples of 100 * 2**-12.

    Multiplying such values by 10**k for small k is exact, so scaled and
    unscaled runs can be compared bit for bit.
    """

    name = "lattice"
    default_control_points = 1

    def __init__(self):
        super().__init__({"u1": (0.0, 1.0), "u2": (0.0, 1.0)}, ("a", "b"), 5.0, 0.5)

    def _run(self, u):
        da = (u[:, 0] - 0.8) ** 2 + (u[:, 1] - 0.3) ** 2 - 0.0001
        db = 3.0 * ((u[:, 0] - 0.2) ** 2 + (u[:, 1] - 0.7) ** 2) - 0.0001
        q = lambda v: 100.0 * np.floor(4096.0 * v) / 4096.0  # noqa: E731
        return np.column_stack([q(da), q(db)])


def scaled(m, k1, k2):
    """Scale output ``a`` by 10**k1 and ``b`` by 10**k2."""
    return ScaledModel(ScaledModel(m, "a", k1), "b", k2)
