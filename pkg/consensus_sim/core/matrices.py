"""Stochastic-matrix kernels.

Weight normalization, the ergodicity coefficients delta and lambda, sign-pattern
types, SIA classification, stationary left vectors and left products.
"""

import logging
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import DirectedWeightedGraph, in_gamma_s


logger = logging.getLogger(__name__)

PATTERN_EPSILON = 1e-12
ROW_SUM_TOLERANCE = 1e-12
PRODUCT_TOLERANCE = 1e-10
STATIONARY_MAX_ITERATIONS = 100_000


class MatrixError(Exception):
    """Base exception for matrix operations."""
    pass


class DimensionMismatchError(MatrixError):
    """Raised when matrix dimensions are incompatible."""
    pass


class InvalidReceptionError(MatrixError):
    """Raised when a received neighbor has no edge to the receiving agent."""
    pass


class CertificationError(MatrixError):
    """Raised when a matrix cannot be certified SIA or a stationary vector does not converge."""
    pass


def _square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    return a


def is_stochastic(a: np.ndarray, tol: float = ROW_SUM_TOLERANCE) -> bool:
    """True iff a is square, nonnegative and every row sums to 1 within tol."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.all(a >= -tol) and np.all(np.abs(a.sum(axis=1) - 1.0) <= tol))


def normalize_weights(g: DirectedWeightedGraph, received: Iterable[int], i: int) -> np.ndarray:
    """Row i of the normalized matrix for the given received set.

    Entries are a_ij / sum of received a_ij on received neighbors. An empty
    received set yields the unit row at i.

    Raises:
        InvalidReceptionError: If some received j has a_ij = 0
    """
    if not 0 <= i < g.n:
        raise InvalidReceptionError(f"agent {i} out of range 0..{g.n - 1}")
    row = np.zeros(g.n)
    received = sorted(set(received))
    if not received:
        row[i] = 1.0
        return row
    weights = g.weights[i]
    for j in received:
        if not 0 <= j < g.n or j == i or weights[j] <= 0:
            raise InvalidReceptionError(f"agent {i} cannot receive from {j}: no edge ({j}, {i})")
    total = float(sum(weights[j] for j in received))
    for j in received:
        row[j] = weights[j] / total
    return row


def normalized_matrix(g: DirectedWeightedGraph,
                      received_sets: Optional[Sequence[Iterable[int]]] = None) -> np.ndarray:
    """Stacked normalized rows; every neighbor is received when received_sets is None."""
    if received_sets is None:
        received_sets = [np.nonzero(g.weights[i] > 0)[0] for i in range(g.n)]
    if len(received_sets) != g.n:
        raise DimensionMismatchError(f"expected {g.n} received sets, got {len(received_sets)}")
    return np.vstack([normalize_weights(g, received_sets[i], i) for i in range(g.n)])


def delta(a: np.ndarray) -> float:
    """Largest column-wise disagreement between two rows."""
    a = _square(a)
    return float(np.ptp(a, axis=0).max())


def lambda_(a: np.ndarray) -> float:
    """Ergodicity coefficient 1 - min over row pairs of their shared mass.

    a is scrambling iff the result is below 1.
    """
    a = _square(a)
    n = a.shape[0]
    shared = np.inf
    for i in range(n):
        overlaps = np.minimum(a[i], a[i:]).sum(axis=1)
        shared = min(shared, float(overlaps.min()))
    return float(min(max(1.0 - shared, 0.0), 1.0))


def same_type(a: np.ndarray, b: np.ndarray, eps: float = PATTERN_EPSILON) -> bool:
    """True iff a and b have zero and positive entries in the same places."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"cannot compare shapes {a.shape} and {b.shape}")
    return bool(np.array_equal(a > eps, b > eps))


def is_sia(a: np.ndarray, k_max: Optional[int] = None, tol: float = 1e-9) -> bool:
    """Certify that powers of a converge to a rank-one matrix.

    Membership in Gamma_s is accepted directly. Otherwise the matrix is powered
    up to k_max (default 4 n^2); delta never grows along powers, so checking
    the last power suffices. False means "not certified within budget".
    """
    a = _square(a)
    n = a.shape[0]
    if k_max is None:
        k_max = 4 * n * n
    if k_max < 1 or tol <= 0:
        raise MatrixError(f"invalid SIA budget k_max={k_max}, tol={tol}")
    if in_gamma_s(a):
        return True
    certified = delta(np.linalg.matrix_power(a, k_max)) < tol
    if not certified:
        logger.debug(f"SIA not certified within k_max={k_max} for {n}x{n} matrix")
    return certified


def stationary_vector(a: np.ndarray, tol: float = 1e-12,
                      max_iterations: int = STATIONARY_MAX_ITERATIONS) -> np.ndarray:
    """Left vector f >= 0 with sum 1 and fA = f, by normalized power iteration.

    Raises:
        CertificationError: If a is not certified SIA or iteration does not converge
    """
    a = _square(a)
    if not is_sia(a):
        raise CertificationError("matrix is not certified SIA; stationary vector is not unique")
    n = a.shape[0]
    f = np.full(n, 1.0 / n)
    for iteration in range(max_iterations):
        nxt = f @ a
        nxt = np.clip(nxt, 0.0, None)
        nxt /= nxt.sum()
        if np.max(np.abs(nxt @ a - nxt)) <= tol:
            logger.debug(f"stationary vector converged after {iteration + 1} iterations")
            return nxt
        f = nxt
    raise CertificationError(f"stationary vector did not converge within {max_iterations} iterations")


def left_product(ms: Sequence[np.ndarray]) -> np.ndarray:
    """Left product A_k ... A_1 of ms = (A_1, ..., A_k)."""
    if not ms:
        raise MatrixError("left product of an empty sequence")
    result = _square(ms[0])
    for m in ms[1:]:
        m = _square(m)
        if m.shape != result.shape:
            raise DimensionMismatchError(f"cannot multiply {m.shape} by {result.shape}")
        result = m @ result
    return result


def step_matrix(a: np.ndarray, h: float) -> np.ndarray:
    """e^{-h} I + (1 - e^{-h}) a, the one-step matrix of a synchronous update."""
    a = _square(a)
    decay = float(np.exp(-h))
    return decay * np.eye(a.shape[0]) + (1.0 - decay) * a
