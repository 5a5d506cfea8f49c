"""Ising interaction parametrizations."""

import numpy as np


class OutOfRange(ValueError):
    pass


def theta_from_x(x):
    """Angle parametrization theta = 2*arctan(x) of an Ising weight.

    Weights must lie in (0, 1); x = 1 (theta = pi/2) is allowed only for the
    tuned external edge of four-point boundary conditions.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x > 1):
        raise OutOfRange(f"weight {x[(x <= 0) | (x > 1)].flat[0]} outside (0, 1]")
    return 2.0 * np.arctan(x)


def x_from_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0) or np.any(theta > np.pi / 2):
        raise OutOfRange("angle outside (0, pi/2]")
    return np.tan(theta / 2.0)


class IsingWeights:
    """Per-quad weights of a planar Ising model, stored as angles.

    ``theta[z] = 2*arctan(x[e(z)])`` with ``x = exp(-2*beta*J)``.
    """

    def __init__(self, theta):
        theta = np.asarray(theta, dtype=float).copy()
        if np.any(theta <= 0) or np.any(theta > np.pi / 2):
            raise OutOfRange("quad angle outside (0, pi/2]")
        self.theta = theta

    @classmethod
    def from_x(cls, x):
        return cls(theta_from_x(x))

    @property
    def x(self):
        return np.tan(self.theta / 2.0)

    def __len__(self):
        return len(self.theta)
