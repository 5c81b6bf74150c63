"""Total-variation seminorm for 2-D grids.

The primary form places a single square root over the sum of all
squared forward differences; differences whose i+1 or j+1 index falls
outside the grid are omitted.  The conventional isotropic variant
(sum of per-pixel gradient magnitudes) is available for comparison.
"""

import numpy as np

from .errors import DomainError, ParameterError


def _as_image(img) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ParameterError(f"image must be a 2-D grid, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("image values must be finite")
    return a


def tv_norm(img, isotropic: bool = False) -> float:
    """Total-variation seminorm of a 2-D grid.

    Default: sqrt( sum of squared vertical and horizontal forward
    differences ), one global square root.  With ``isotropic=True``,
    returns sum_{i,j} sqrt(dv^2 + dh^2) instead (out-of-range
    differences treated as 0).
    """
    a = _as_image(img)
    dv = a[1:, :] - a[:-1, :]
    dh = a[:, 1:] - a[:, :-1]
    if not isotropic:
        return float(np.sqrt(np.sum(dv * dv) + np.sum(dh * dh)))
    rows, cols = a.shape
    dv_full = np.zeros_like(a)
    dh_full = np.zeros_like(a)
    dv_full[: rows - 1, :] = dv
    dh_full[:, : cols - 1] = dh
    return float(np.sum(np.sqrt(dv_full**2 + dh_full**2)))


def save_image(img, path) -> None:
    """Text format: 'rows cols' header, then row-major values."""
    a = _as_image(img)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(format(float(v), ".17g") for v in row))
            fh.write("\n")


def load_image(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ParameterError("image file must start with 'rows cols'")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise ParameterError("image header must be two integers") from exc
    values = tokens[2:]
    if len(values) != rows * cols:
        raise ParameterError(f"expected {rows * cols} values, found {len(values)}")
    try:
        flat = np.array([float(t) for t in values])
    except ValueError as exc:
        raise ParameterError("image contains a non-numeric value") from exc
    return flat.reshape(rows, cols)
