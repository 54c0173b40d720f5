"""Shared dense linear-algebra helpers.

All solves go through a Cholesky factorization of the explicitly symmetrized
operand; explicit inverses are formed only where a stored inverse is part of
the evaluation structure.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError


def sym(a: np.ndarray) -> np.ndarray:
    """Symmetrize ``a`` as (a + aᵀ)/2."""
    return 0.5 * (a + a.T)


def spd_factor(a: np.ndarray, what: str = "matrix"):
    """Cholesky-factor the symmetrized ``a``, raising :class:`NumericalError`."""
    try:
        return sla.cho_factor(sym(a), lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise NumericalError(f"{what} is not positive definite: {exc}") from None


def spd_solve(a: np.ndarray, b: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Solve ``a x = b`` for symmetric positive-definite ``a``."""
    return sla.cho_solve(spd_factor(a, what), b, check_finite=False)


def spd_inverse(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Explicit inverse of a symmetric positive-definite matrix."""
    out = spd_solve(a, np.eye(a.shape[0]), what)
    return sym(out)


def frozen_array(values, dtype=float) -> np.ndarray:
    """Copy ``values`` into a read-only ndarray (safe to share across threads)."""
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr
