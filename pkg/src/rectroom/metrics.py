"""Field and transfer-function comparison scores."""

import numpy as np


def _pair(a, b):
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape or a.size == 0:
        raise ValueError(f"need two non-empty sequences of equal length, got {a.size} and {b.size}")
    return a, b


def l2_relative_error(p, p_ref) -> float:
    """Discrete relative L2 error ``sqrt(sum|p - p_ref|^2 / sum|p_ref|^2)``.

    With uniformly sampled points this estimates the continuous relative
    L2 norm over the room.
    """
    p, p_ref = _pair(p, p_ref)
    ref = np.sum(np.abs(p_ref) ** 2)
    if ref == 0:
        raise ValueError("reference has zero norm")
    return float(np.sqrt(np.sum(np.abs(p - p_ref) ** 2) / ref))


def frac(h1, h2) -> float:
    """Frequency Response Assurance Criterion.

    ``|sum h1 conj(h2)|^2 / (sum|h1|^2 sum|h2|^2)``: 1 for responses equal up
    to a complex factor, 0 for orthogonal ones.
    """
    h1, h2 = _pair(h1, h2)
    n1 = np.vdot(h1, h1).real
    n2 = np.vdot(h2, h2).real
    if n1 == 0 or n2 == 0:
        raise ValueError("FRAC undefined for a zero-norm response")
    val = float(np.abs(np.vdot(h2, h1)) ** 2 / (n1 * n2))
    return min(val, 1.0)


def uniform_points(lengths, n: int, seed: int = 0) -> np.ndarray:
    """``n`` uniformly distributed centre-referenced points in the room."""
    rng = np.random.default_rng(seed)
    half = np.asarray(lengths, dtype=float) / 2
    return rng.uniform(-half, half, size=(n, len(half)))
