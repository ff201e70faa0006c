"""Quaternion arithmetic and the imaginary bilinear form on H^{n-1}.

Quaternions are stored as 4-vectors ``(x1, x2, x3, x4)`` meaning
``x1 + x2 i + x3 j + x4 k``.  The array functions (``qmul``, ``qconj``, ...)
work on the last axis of numpy arrays and accept both float arrays and
``dtype=object`` arrays of :class:`fractions.Fraction`, which gives an exact
rational backend for identity checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Any

import numpy as np


class DimensionError(ValueError):
    """Operands live in spaces of different dimension."""


# b^alpha_{kj}: Im(conj(x) x') = sum_alpha sum_{k,j} b^alpha_{kj} x_k x'_j i_alpha
B_MATRICES = np.array(
    [
        [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]],
        [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]],
        [[0, 0, 0, 1], [0, 0, -1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]],
    ],
    dtype=np.int64,
)
B_MATRICES.setflags(write=False)
_PAIRS = [[(k, j) for k in range(4) for j in range(k + 1, 4) if B_MATRICES[a, k, j]] for a in range(3)]


def b_matrix(alpha: int) -> np.ndarray:
    """Return the 4x4 sign matrix b^alpha for alpha in {1, 2, 3}."""
    if alpha not in (1, 2, 3):
        raise ValueError(f"alpha must be 1, 2 or 3, got {alpha!r}")
    return B_MATRICES[alpha - 1].copy()


def qmul(a, b):
    """Hamilton product along the last axis."""
    a1, a2, a3, a4 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b1, b2, b3, b4 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            a1 * b1 - a2 * b2 - a3 * b3 - a4 * b4,
            a1 * b2 + a2 * b1 + a3 * b4 - a4 * b3,
            a1 * b3 - a2 * b4 + a3 * b1 + a4 * b2,
            a1 * b4 + a2 * b3 - a3 * b2 + a4 * b1,
        ],
        axis=-1,
    )


def qconj(a):
    return np.concatenate([a[..., :1], -a[..., 1:]], axis=-1)


def qnorm2(a):
    return (a * a).sum(axis=-1)


def qabs(a):
    return np.sqrt(qnorm2(np.asarray(a, dtype=float)))


def _split(y, name="y"):
    y = np.asarray(y)
    if y.shape[-1] % 4:
        raise DimensionError(f"{name} has {y.shape[-1]} coordinates, not a multiple of 4")
    return y.reshape(y.shape[:-1] + (y.shape[-1] // 4, 4))


def im_bilinear(y, y2):
    """Im <y, y2> = sum_l Im(conj(y_l) y2_l) for flat (..., 4(n-1)) vectors.

    Returns the three imaginary coordinates, shape (..., 3).
    """
    y = np.asarray(y)
    y2 = np.asarray(y2)
    if y.shape[-1] != y2.shape[-1]:
        raise DimensionError(f"length mismatch: {y.shape[-1]} vs {y2.shape[-1]}")
    ys, y2s = _split(y), _split(y2, "y2")
    # antisymmetric pairs, so Im <y, y> is exactly zero in floating point too
    out = []
    for alpha in range(3):
        acc = 0
        for k, j in _PAIRS[alpha]:
            acc = acc + int(B_MATRICES[alpha, k, j]) * (ys[..., k] * y2s[..., j] - ys[..., j] * y2s[..., k])
        out.append(acc.sum(axis=-1))
    return np.stack(out, axis=-1)


def im_bilinear_qmul(y, y2):
    """Im <y, y2> straight from quaternion products (reference implementation)."""
    y = np.asarray(y)
    y2 = np.asarray(y2)
    if y.shape[-1] != y2.shape[-1]:
        raise DimensionError(f"length mismatch: {y.shape[-1]} vs {y2.shape[-1]}")
    prod = qmul(qconj(_split(y)), _split(y2, "y2"))
    return prod[..., 1:].sum(axis=-2)


def im_bilinear_bform(y, y2):
    """Same quantity as :func:`im_bilinear`, assembled from the b^alpha matrices."""
    y = np.asarray(y)
    y2 = np.asarray(y2)
    if y.shape[-1] != y2.shape[-1]:
        raise DimensionError(f"length mismatch: {y.shape[-1]} vs {y2.shape[-1]}")
    ys, y2s = _split(y), _split(y2, "y2")
    out = []
    for alpha in range(3):
        b = B_MATRICES[alpha]
        acc = 0
        for k in range(4):
            for j in range(4):
                if b[k, j]:
                    acc = acc + int(b[k, j]) * (ys[..., k] * y2s[..., j]).sum(axis=-1)
        out.append(acc)
    return np.stack(out, axis=-1)


def _is_exact(x) -> bool:
    return isinstance(x, (Rational, Fraction)) and not isinstance(x, bool)


@dataclass(frozen=True)
class Quaternion:
    """A single quaternion with float or rational coordinates."""

    x1: Any = 0
    x2: Any = 0
    x3: Any = 0
    x4: Any = 0

    @classmethod
    def from_seq(cls, seq) -> "Quaternion":
        seq = list(seq)
        if len(seq) != 4:
            raise DimensionError(f"a quaternion needs 4 coordinates, got {len(seq)}")
        return cls(*seq)

    @classmethod
    def exact(cls, *coords) -> "Quaternion":
        return cls(*(Fraction(c) for c in coords))

    @property
    def coords(self) -> tuple:
        return (self.x1, self.x2, self.x3, self.x4)

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(c) for c in self.coords)

    def to_array(self) -> np.ndarray:
        if self.is_exact:
            return np.array(self.coords, dtype=object)
        return np.array([float(c) for c in self.coords])

    @property
    def real(self):
        return self.x1

    def imag(self) -> "Quaternion":
        return Quaternion(0 * self.x1, self.x2, self.x3, self.x4)

    def conj(self) -> "Quaternion":
        return Quaternion(self.x1, -self.x2, -self.x3, -self.x4)

    def norm2(self):
        return self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3 + self.x4 * self.x4

    def __abs__(self) -> float:
        return math.sqrt(self.norm2())

    def inverse(self) -> "Quaternion":
        d = self.norm2()
        if d == 0:
            raise ZeroDivisionError("inverse of the zero quaternion")
        c = self.conj()
        return Quaternion(*(x / d for x in c.coords))

    def __add__(self, other):
        if not isinstance(other, Quaternion):
            other = Quaternion(other)
        return Quaternion(*(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return Quaternion(*(-a for a in self.coords))

    def __sub__(self, other):
        if not isinstance(other, Quaternion):
            other = Quaternion(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Quaternion):
            return Quaternion(*(a * other for a in self.coords))
        a1, a2, a3, a4 = self.coords
        b1, b2, b3, b4 = other.coords
        return Quaternion(
            a1 * b1 - a2 * b2 - a3 * b3 - a4 * b4,
            a1 * b2 + a2 * b1 + a3 * b4 - a4 * b3,
            a1 * b3 - a2 * b4 + a3 * b1 + a4 * b2,
            a1 * b4 + a2 * b3 - a3 * b2 + a4 * b1,
        )

    def __rmul__(self, other):
        # scalars commute with quaternions
        return Quaternion(*(other * a for a in self.coords))

    def __truediv__(self, other):
        if isinstance(other, Quaternion):
            return self * other.inverse()
        return Quaternion(*(a / other for a in self.coords))

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = Quaternion(1 + 0 * self.x1, 0 * self.x1, 0 * self.x1, 0 * self.x1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def isclose(self, other: "Quaternion", rel: float = 1e-12, abs_tol: float = 0.0) -> bool:
        diff = abs(self - other)
        return diff <= max(rel * max(abs(self), abs(other)), abs_tol)


ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K_UNIT = Quaternion(0.0, 0.0, 0.0, 1.0)


def mul(a, b):
    """Quaternion product for :class:`Quaternion` values or (..., 4) arrays."""
    if isinstance(a, Quaternion) and isinstance(b, Quaternion):
        return a * b
    return qmul(np.asarray(a), np.asarray(b))


def conj(a):
    if isinstance(a, Quaternion):
        return a.conj()
    return qconj(np.asarray(a))


def modulus(a):
    if isinstance(a, Quaternion):
        return abs(a)
    return qabs(a)
