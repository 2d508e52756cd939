import numpy as np

from kaccess import AccessibilityMatrix, DEFAULT_FLOOR


def random_access_matrix(rng, n, floor=DEFAULT_FLOOR):
    """Uniform entries in [floor, 1) with an exact unit diagonal."""
    values = rng.uniform(floor, 1.0, size=(n, n))
    np.fill_diagonal(values, 1.0)
    return AccessibilityMatrix(values, floor=floor)
