"""Convex smoothing of the Euclidean norm used by the wall friction law.

j_delta(v) is |v| outside the ball of radius delta and a matched parabola
inside it; its gradient is the radial retraction v / max(|v|, delta)-style
kernel with |grad| <= 1.  Evaluation at exactly |v| = delta uses the inner
(quadratic) branch.
"""

import numpy as np


def _norms(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.sqrt(np.sum(v * v, axis=-1))


def j_delta(v: np.ndarray, delta: float) -> np.ndarray:
    """Smoothed norm: |v| if |v| > delta, else |v|^2/(2 delta) + delta/2.

    Args:
        v: array of vectors, shape (..., d).
        delta: smoothing width, must be > 0.

    Returns:
        Array of shape (...,).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    r = _norms(v)
    return np.where(r > delta, r, r * r / (2.0 * delta) + delta / 2.0)


def grad_j_delta(v: np.ndarray, delta: float) -> np.ndarray:
    """Gradient of j_delta: v/|v| if |v| > delta, else v/delta."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    v = np.asarray(v, dtype=float)
    r = _norms(v)
    # Avoid 0/0 on the inner branch; the inner scale 1/delta is used there.
    safe = np.where(r > delta, r, delta)
    return v / safe[..., None]
