"""The quaternionic Heisenberg group H^{n-1} = Im H x H^{n-1}.

Points carry a vertical part ``t`` (three coordinates) and a horizontal part
``y`` (4(n-1) coordinates, flat).  All operations broadcast over leading batch
axes, so one :class:`GroupPoint` may hold a whole cloud of points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy import special
from scipy.stats import norm, qmc

from .quaternion import DimensionError, B_MATRICES, im_bilinear, qconj, qmul, _split


class DomainError(ValueError):
    """A point does not lie where the operation needs it (e.g. off the boundary)."""


def _coords(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype != object:
        arr = arr.astype(float)
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GroupPoint:
    """A point (or batch of points) (t, y) of H^{n-1}."""

    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t, y = _coords(self.t), _coords(self.y)
        if t.shape[-1:] != (3,):
            raise DimensionError(f"t must have 3 coordinates, got shape {t.shape}")
        if y.ndim == 0 or y.shape[-1] < 4 or y.shape[-1] % 4:
            raise DimensionError(f"y must have 4(n-1) >= 4 coordinates, got shape {y.shape}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.shape[-1] // 4 + 1

    @property
    def shape(self) -> tuple:
        return np.broadcast_shapes(self.t.shape[:-1], self.y.shape[:-1])

    def __len__(self) -> int:
        return self.shape[0]

    def __getitem__(self, idx) -> "GroupPoint":
        shape = self.shape
        t = np.broadcast_to(self.t, shape + (3,))
        y = np.broadcast_to(self.y, shape + self.y.shape[-1:])
        return GroupPoint(t[idx], y[idx])

    def __mul__(self, other: "GroupPoint") -> "GroupPoint":
        return group_mul(self, other)

    def inverse(self) -> "GroupPoint":
        return group_inv(self)

    def coords(self) -> np.ndarray:
        shape = self.shape
        t = np.broadcast_to(self.t, shape + (3,))
        y = np.broadcast_to(self.y, shape + self.y.shape[-1:])
        return np.concatenate([t, y], axis=-1)

    @classmethod
    def from_coords(cls, coords) -> "GroupPoint":
        coords = np.asarray(coords)
        if (coords.shape[-1] + 1) % 4 or coords.shape[-1] < 7:
            raise DimensionError(f"expected 4n-1 >= 7 coordinates, got {coords.shape[-1]}")
        return cls(coords[..., :3], coords[..., 3:])

    @classmethod
    def identity(cls, n: int) -> "GroupPoint":
        return cls(np.zeros(3), np.zeros(4 * (n - 1)))


def _check_same_n(g: GroupPoint, h: GroupPoint) -> None:
    if g.n != h.n:
        raise DimensionError(f"points of H^{g.n - 1} and H^{h.n - 1} cannot be combined")


def group_mul(g: GroupPoint, h: GroupPoint) -> GroupPoint:
    _check_same_n(g, h)
    return GroupPoint(g.t + h.t + 2 * im_bilinear(g.y, h.y), g.y + h.y)


def group_inv(g: GroupPoint) -> GroupPoint:
    return GroupPoint(-g.t, -g.y)


def dilate(r, g: GroupPoint) -> GroupPoint:
    """delta_r(t, y) = (r^2 t, r y); ``r`` may be a scalar or a batch."""
    r_arr = np.asarray(r)
    if r_arr.dtype != object and not np.all(r_arr > 0):
        raise ValueError("dilation factor must be positive")
    if r_arr.dtype == object and not all(v > 0 for v in r_arr.ravel()):
        raise ValueError("dilation factor must be positive")
    rr = r_arr[..., None]
    return GroupPoint(rr * rr * g.t, rr * g.y)


def hnorm(g: GroupPoint) -> np.ndarray:
    """Homogeneous norm (|y|^4 + |t|^2)^(1/4)."""
    t = np.asarray(g.t, dtype=float)
    y = np.asarray(g.y, dtype=float)
    y2 = (y * y).sum(axis=-1)
    return np.sqrt(np.sqrt(y2 * y2 + (t * t).sum(axis=-1)))


def rho(g: GroupPoint, h: GroupPoint) -> np.ndarray:
    """Quasi-distance rho(g, h) = ||h^{-1} g||."""
    _check_same_n(g, h)
    return hnorm(group_mul(group_inv(h), g))


# ---------------------------------------------------------------- sampling

def _qmc_normal(dim: int, count: int, seed: int) -> np.ndarray:
    """Scrambled-Sobol standard normal draws; the first k rows do not depend on ``count``."""
    sampler = qmc.Sobol(dim, scramble=True, seed=seed)
    m = max(0, math.ceil(math.log2(max(count, 1))))
    u = sampler.random_base2(m)[:count]
    return norm.ppf(np.clip(u, 1e-16, 1 - 1e-16))


def sphere_from_normal(z: np.ndarray, n: int) -> GroupPoint:
    """Map raw normal draws (..., 4n-1) to the homogeneous unit sphere."""
    g = GroupPoint.from_coords(z)
    return dilate(1.0 / hnorm(g), g)


def sample_unit_sphere(n: int, count: int, seed: int = 0) -> GroupPoint:
    """Seeded low-discrepancy points with ||g|| = 1."""
    return sphere_from_normal(_qmc_normal(4 * n - 1, count, seed), n)


def quasi_triangle_constant(samples: int, n: int = 2, seed: int = 0) -> float:
    """Empirical C_rho: sup of rho(h, g) / (rho(h, w) + rho(w, g)) over random triples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    d = 4 * n - 1
    pts = []
    for _ in range(3):
        z = rng.standard_normal((samples, d))
        scale = np.exp(rng.uniform(-2.0, 2.0, samples))
        pts.append(dilate(scale, GroupPoint.from_coords(z)))
    h, w, g = pts
    ratio = rho(h, g) / (rho(h, w) + rho(w, g))
    return float(max(1.0, np.max(ratio)))


def ball_volume(n: int, radius: float = 1.0) -> float:
    """Lebesgue (= Haar) volume of {g : ||g|| <= radius}."""
    d = 4 * (n - 1)
    sphere_area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    unit = (4 * math.pi / 3) * sphere_area * 0.25 * special.beta(d / 4, 2.5)
    return unit * radius ** (4 * n + 2)


# ------------------------------------------------------- Siegel boundary

@dataclass(frozen=True)
class SiegelPoint:
    """A point (q1, q') of H^n; ``qprime`` is flat with 4(n-1) coordinates."""

    q1: np.ndarray
    qprime: np.ndarray

    def __post_init__(self):
        q1, qp = _coords(self.q1), _coords(self.qprime)
        if q1.shape[-1:] != (4,):
            raise DimensionError(f"q1 must be a quaternion, got shape {q1.shape}")
        if qp.shape[-1] < 4 or qp.shape[-1] % 4:
            raise DimensionError(f"q' must have 4(n-1) coordinates, got shape {qp.shape}")
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "qprime", qp)

    @property
    def n(self) -> int:
        return self.qprime.shape[-1] // 4 + 1

    def defect(self):
        """Re q1 - |q'|^2: zero on the boundary, positive inside."""
        return self.q1[..., 0] - (self.qprime * self.qprime).sum(axis=-1)

    def is_interior(self) -> np.ndarray:
        return np.asarray(self.defect() > 0)

    def __add__(self, other: "SiegelPoint") -> "SiegelPoint":
        return SiegelPoint(self.q1 + other.q1, self.qprime + other.qprime)

    @classmethod
    def real_axis(cls, x: float, n: int) -> "SiegelPoint":
        return cls(np.array([x, 0.0, 0.0, 0.0]), np.zeros(4 * (n - 1)))

    def vertical_shift(self, eps: float) -> "SiegelPoint":
        """q + eps e with e = (1, 0, ..., 0)."""
        return SiegelPoint(self.q1 + np.array([eps, 0.0, 0.0, 0.0]), self.qprime)


def boundary_to_group(q: SiegelPoint, tol: float = 1e-10) -> GroupPoint:
    """pi(|q'|^2 + x2 i + x3 j + x4 k, q') = (x2 i + x3 j + x4 k, q')."""
    q1 = np.asarray(q.q1, dtype=float)
    defect = np.asarray(q.defect(), dtype=float)
    bound = tol * (1.0 + np.sqrt((q1 * q1).sum(axis=-1)))
    bad = np.abs(defect) > bound
    if np.any(bad):
        worst = float(np.max(np.abs(defect)))
        raise DomainError(f"point is not on the boundary: Re q1 - |q'|^2 = {worst:.3e}")
    return GroupPoint(q.q1[..., 1:], q.qprime)


def group_to_boundary(g: GroupPoint) -> SiegelPoint:
    y2 = (g.y * g.y).sum(axis=-1)
    return SiegelPoint(np.concatenate([np.asarray(y2)[..., None], g.t], axis=-1), g.y)


def hinner(y, q):
    """<y, q> = sum_l conj(y_l) q_l as a full quaternion, shape (..., 4)."""
    return qmul(qconj(_split(y)), _split(q, "q")).sum(axis=-2)


def tau(p: GroupPoint, q: SiegelPoint) -> SiegelPoint:
    """The automorphism tau_p of U_n: (q1 + |y|^2 + t + 2<y, q'>, q' + y)."""
    if p.n != q.n:
        raise DimensionError("dimension mismatch between group point and Siegel point")
    y2 = (p.y * p.y).sum(axis=-1)
    shift = np.concatenate([np.asarray(y2)[..., None], p.t], axis=-1)
    return SiegelPoint(q.q1 + shift + 2 * hinner(p.y, q.qprime), q.qprime + p.y)


# ----------------------------------------------- left-invariant vector fields

def _check_field_index(l: int, j: int, n: int) -> None:
    if not (0 <= l <= n - 2) or not (1 <= j <= 4):
        raise ValueError(f"vector field index out of range: l={l}, j={j} for n={n}")


def horizontal_unit(l: int, j: int, n: int, s=1.0) -> GroupPoint:
    _check_field_index(l, j, n)
    s = np.asarray(s, dtype=float)
    y = np.zeros(s.shape + (4 * (n - 1),))
    y[..., 4 * l + j - 1] = s
    return GroupPoint(np.zeros(s.shape + (3,)), y)


def vector_field_flow(l: int, j: int, s, g: GroupPoint) -> GroupPoint:
    """Time-s flow of Y_{4l+j} from g, i.e. right translation by (0, s e_{4l+j}).

    ``l`` runs over 0..n-2 and ``j`` over 1..4, matching the field's label 4l+j.
    """
    return group_mul(g, horizontal_unit(l, j, g.n, s))


def vector_field_coefficients(l: int, j: int, y) -> np.ndarray:
    """The d/dt_alpha coefficients 2 sum_k b^alpha_{kj} y_{4l+k} of Y_{4l+j}, shape (..., 3)."""
    block = np.asarray(y)[..., 4 * l: 4 * l + 4]
    return np.stack(
        [2 * sum(int(B_MATRICES[a, k, j - 1]) * block[..., k] for k in range(4)) for a in range(3)],
        axis=-1,
    )


def lie_bracket(l2: int, k: int, l: int, j: int, n: int) -> np.ndarray:
    """d/dt coefficients of [Y_{4l2+k}, Y_{4l+j}], from the coefficient fields of the Y's."""
    _check_field_index(l2, k, n)
    _check_field_index(l, j, n)
    # Y_a(coef of Y_b) - Y_b(coef of Y_a); coefficients are linear in y
    out = np.zeros(3)
    if l == l2:
        for a in range(3):
            out[a] = 2 * B_MATRICES[a, k - 1, j - 1] - 2 * B_MATRICES[a, j - 1, k - 1]
    return out


def flow_commutator(first: tuple[int, int], second: tuple[int, int], s: float, g: GroupPoint) -> GroupPoint:
    """Apply flow_first(s), flow_second(s), flow_first(-s), flow_second(-s) in that order."""
    (l, j), (l2, k) = first, second
    out = vector_field_flow(l, j, s, g)
    out = vector_field_flow(l2, k, s, out)
    out = vector_field_flow(l, j, -s, out)
    return vector_field_flow(l2, k, -s, out)


def apply_Y(l: int, j: int, f: Callable[[GroupPoint], object], g: GroupPoint, step: float):
    """Central difference of f along the flow of Y_{4l+j}."""
    if np.any(np.asarray(step) <= 0):
        raise ValueError("step must be positive")
    fp = f(vector_field_flow(l, j, step, g))
    fm = f(vector_field_flow(l, j, -step, g))
    st = np.asarray(step, dtype=float)
    diff = np.asarray(fp - fm)
    return diff / (2 * st.reshape(st.shape + (1,) * (diff.ndim - st.ndim)))


# ------------------------------------------------------------------ lattice

@dataclass(frozen=True)
class LatticeSpec:
    """Truncated cell-centred grid: ``exclusion <= rho(., 0) <= radius``."""

    radius: float
    hy: float
    ht: float | None = None
    exclusion: float = 1e-9

    def __post_init__(self):
        if self.ht is None:
            object.__setattr__(self, "ht", self.hy * self.hy)
        if not (self.hy > 0 and self.ht > 0):
            raise ValueError("lattice spacings must be positive")
        if not (0 < self.exclusion < self.radius):
            raise ValueError("need 0 < exclusion < radius")

    def weight(self, n: int) -> float:
        return self.ht ** 3 * self.hy ** (4 * (n - 1))

    def to_dict(self) -> dict:
        return {"radius": self.radius, "hy": self.hy, "ht": self.ht, "exclusion": self.exclusion}

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeSpec":
        unknown = set(d) - {"radius", "hy", "ht", "exclusion"}
        if unknown:
            raise ValueError(f"unknown LatticeSpec keys: {sorted(unknown)}")
        return cls(**d)


def _odd_grid(dim: int, limit2: float, h: float) -> np.ndarray:
    """Integer vectors m (entries odd) with (h/2)^2 |m|^2 <= limit2, built one axis at a time."""
    mmax = int(math.floor(2 * math.sqrt(max(limit2, 0.0)) / h)) + 1
    axis = np.arange(-mmax, mmax + 1)
    axis = axis[axis % 2 != 0]
    bound = 4 * limit2 / (h * h)
    pts = np.zeros((1, 0), dtype=np.int64)
    sq = np.zeros(1, dtype=np.int64)
    for _ in range(dim):
        new_sq = sq[:, None] + axis[None, :] ** 2
        keep = new_sq <= bound * (1 + 1e-12)
        rows, cols = np.nonzero(keep)
        pts = np.concatenate([pts[rows], axis[cols][:, None]], axis=1)
        sq = new_sq[rows, cols]
    return pts


def lattice_arrays(spec: LatticeSpec, n: int, with_hole: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates (t, y) of the grid points in the shell, sorted by rho then lexicographically."""
    d = 4 * (n - 1)
    R4 = spec.radius ** 4
    ym = _odd_grid(d, spec.radius ** 2, spec.hy)
    tm = _odd_grid(3, spec.radius ** 4, spec.ht)
    y = ym * (spec.hy / 2)
    t = tm * (spec.ht / 2)
    y2 = (y * y).sum(axis=1)
    t2 = (t * t).sum(axis=1)
    order = np.argsort(t2, kind="stable")
    t, t2 = t[order], t2[order]
    lo_lim = spec.exclusion ** 4 if with_hole else -1.0
    ts, ys = [], []
    for i in range(len(y)):
        y4 = y2[i] * y2[i]
        lo = np.searchsorted(t2, lo_lim - y4, side="left")
        hi = np.searchsorted(t2, R4 - y4, side="right")
        if hi > lo:
            ts.append(t[lo:hi])
            ys.append(np.broadcast_to(y[i], (hi - lo, d)))
    if not ts:
        return np.zeros((0, 3)), np.zeros((0, d))
    t = np.concatenate(ts)
    y = np.concatenate(ys)
    r = np.sqrt(np.sqrt((y * y).sum(1) ** 2 + (t * t).sum(1)))
    keys = [y[:, c] for c in range(d - 1, -1, -1)] + [t[:, c] for c in range(2, -1, -1)] + [r]
    order = np.lexsort(keys)
    return t[order], y[order]


def lattice(spec: LatticeSpec, n: int, chunk: int = 65536) -> Iterator[tuple[GroupPoint, float]]:
    """Stream the shell of the grid as (batch of points, weight per point)."""
    t, y = lattice_arrays(spec, n)
    w = spec.weight(n)
    for start in range(0, len(t), chunk):
        yield GroupPoint(t[start:start + chunk], y[start:start + chunk]), w


def grid_ball(spec: LatticeSpec, n: int, center: GroupPoint | None = None) -> GroupPoint:
    """Grid points center * u with ||u|| <= radius (no exclusion hole)."""
    t, y = lattice_arrays(spec, n, with_hole=False)
    u = GroupPoint(t, y)
    if center is None:
        return u
    return group_mul(center, u)
