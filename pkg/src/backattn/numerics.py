"""Dense float64 numerics shared by every model component.

All arithmetic runs in 64-bit floats: the finite-difference gradient
checks at 1e-4 relative tolerance are not trustworthy in float32, and
nothing here is large enough for speed to matter. Vectors and matrices
are plain contiguous numpy arrays.

Randomness always flows through an explicit ``numpy.random.Generator``
backed by PCG64 (a named, documented algorithm), so any run reproduces
from its seed on any platform.
"""

import numpy as np

# Informal aliases used in signatures throughout the package.
Vector = np.ndarray
Matrix = np.ndarray


def new_rng(seed: int) -> np.random.Generator:
    """Deterministic generator: PCG64 stream fully defined by ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def sigmoid(x):
    """Numerically stable logistic function."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(v: Vector) -> Vector:
    """Probability vector exp(v)/sum(exp(v)), computed with max-subtraction.

    Raises ValueError on an empty input; the output is invariant under
    adding a constant to every entry.
    """
    v = as_f64(v)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("softmax requires a non-empty 1-d vector")
    shifted = v - np.max(v)
    e = np.exp(shifted)
    return e / e.sum()


def row_softmax(scores: Matrix) -> Matrix:
    """Row-wise stable softmax of a 2-d score matrix."""
    scores = as_f64(scores)
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_sum_exp(a: np.ndarray, axis=None) -> np.ndarray:
    """log(sum(exp(a))) along ``axis`` without overflow."""
    a = as_f64(a)
    amax = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - amax), axis=axis, keepdims=True)) + amax
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def finite_difference_gradient(f, p: Vector, h: float = 1e-5) -> Vector:
    """Central-difference gradient (f(p+h*e_k) - f(p-h*e_k)) / (2h).

    ``f`` takes a 1-d parameter vector and returns a scalar. This is the
    independent oracle used to validate every analytic gradient in the
    package; it never shares code with the backward passes it checks.
    """
    if h <= 0:
        raise ValueError("step size h must be positive")
    p = as_f64(p)
    grad = np.zeros_like(p)
    for k in range(p.size):
        step = np.zeros_like(p)
        step[k] = h
        f_plus = float(f(p + step))
        f_minus = float(f(p - step))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise ValueError(f"non-finite function value at coordinate {k}")
        grad[k] = (f_plus - f_minus) / (2.0 * h)
    return grad


def flatten_arrays(arrays):
    """Concatenate arrays into one vector; returns (vector, shapes)."""
    shapes = [a.shape for a in arrays]
    if not arrays:
        return np.zeros(0), shapes
    return np.concatenate([np.ravel(a) for a in arrays]), shapes


def unflatten_vector(vec, shapes):
    """Inverse of :func:`flatten_arrays`."""
    out = []
    offset = 0
    for shape in shapes:
        size = int(np.prod(shape)) if shape else 1
        out.append(np.asarray(vec[offset:offset + size]).reshape(shape))
        offset += size
    return out


def max_relative_error(analytic: Vector, numeric: Vector, floor: float = 1e-5) -> float:
    """max |a - n| / max(|a|, |n|, floor); the gradient-check metric.

    The floor keeps near-zero coordinates meaningful: central differences
    at h=1e-5 carry ~1e-10 absolute noise (roundoff eps*|f|/h plus h^2
    truncation), so coordinates below the floor are held to an absolute
    tolerance of floor * rtol instead of a relative one.
    """
    analytic = as_f64(analytic)
    numeric = as_f64(numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))
