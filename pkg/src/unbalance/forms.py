"""Sequence magnitudes as real quadratic forms.

With V = (a_re, a_im, b_re, b_im, c_re, c_im):

    V^T A_n V = 9 |V_n|^2,  V^T A_0 V = 9 |V_0|^2,  V^T A_p V = 9 |V_p|^2

Each A has identity diagonal blocks and off-diagonal blocks B (a-b, b-c, c-a)
and B^T (a-c, b-a, c-b), where B is multiplication by alpha^2, 1 and alpha
written as a real 2x2 block.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .metrics import ALPHA, SequenceKind


def rotation(z: complex) -> np.ndarray:
    """Real 2x2 block of multiplication by the complex number z."""
    z = complex(z)
    return np.array([[z.real, -z.imag], [z.imag, z.real]])


def _block_form(b: np.ndarray) -> np.ndarray:
    eye = np.eye(2)
    return np.block([
        [eye, b, b.T],
        [b.T, eye, b],
        [b, b.T, eye],
    ])


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class QuadraticForms:
    a_n: np.ndarray
    a_0: np.ndarray
    a_p: np.ndarray
    b_n: np.ndarray
    b_0: np.ndarray
    b_p: np.ndarray

    def numerator(self, which: SequenceKind) -> np.ndarray:
        return self.a_n if SequenceKind(which) is SequenceKind.NEGATIVE else self.a_0

    def objective(self, which: SequenceKind, eps: float) -> np.ndarray:
        """A_x - eps^2 A_p, whose form is <= 0 exactly when VUF <= eps."""
        return self.numerator(which) - eps ** 2 * self.a_p


@lru_cache(maxsize=1)
def build_quadratic_forms() -> QuadraticForms:
    """Build the shared, read-only quadratic forms."""
    b_n, b_0, b_p = rotation(ALPHA ** 2), rotation(1.0), rotation(ALPHA)
    return QuadraticForms(
        a_n=_frozen(_block_form(b_n)),
        a_0=_frozen(_block_form(b_0)),
        a_p=_frozen(_block_form(b_p)),
        b_n=_frozen(b_n),
        b_0=_frozen(b_0),
        b_p=_frozen(b_p),
    )


def objective_matrix(which: SequenceKind, eps: float) -> np.ndarray:
    return build_quadratic_forms().objective(which, eps)


def quadratic_values(matrix: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate x^T M x for each row x of points (shape (..., 6))."""
    points = np.asarray(points, dtype=float)
    return np.einsum("...i,ij,...j->...", points, matrix, points)
