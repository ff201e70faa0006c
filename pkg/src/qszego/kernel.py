"""Cauchy-Szego kernel on the quaternionic Siegel upper half-space.

Three independent evaluators of s(sigma) live here:

* ``s_sum_form``        -- double sum over powers of z and conj(z),
* ``s_closed_form``     -- closed form with the (z - conj z)^3 denominator,
* ``s_derivative_oracle`` -- product rule on d^{2n-2}/dx1^{2n-2} (conj(sigma)/|sigma|^4)
  with exact integer derivative polynomials; it never touches complex numbers.

The first two are evaluated in the commutative slice R + R u, u = Im sigma / |Im sigma|,
which is a copy of C; results are embedded back into H.  Float inputs use a
vectorised numpy path.  :class:`~qszego.quaternion.Quaternion` inputs with
``Fraction`` coordinates use exact rational arithmetic: inside the slice
z is sigma itself, so no square roots are needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .heisenberg import GroupPoint, SiegelPoint, hinner, vector_field_coefficients, _check_field_index
from .quaternion import Quaternion, qconj, qmul


class SingularityError(ValueError):
    """The kernel was evaluated at its singularity sigma = 0."""


class NearAxisError(ValueError):
    """Closed form requested too close to the real axis; use the sum form instead."""


@dataclass(frozen=True)
class KernelConfig:
    """Dimension ``n``, normalisation ``c`` and the closed/sum dispatch threshold."""

    n: int = 2
    c: float = 1.0
    switch_tol: float = 1e-3

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not (0 < self.switch_tol < 1):
            raise ValueError("switch_tol must lie in (0, 1)")
        if not math.isfinite(float(self.c)):
            raise ValueError("c must be finite")

    @property
    def Q(self) -> int:
        """Homogeneous dimension 4n + 2."""
        return 4 * self.n + 2

    def with_c(self, c) -> "KernelConfig":
        return KernelConfig(self.n, c, self.switch_tol)

    def to_dict(self) -> dict:
        return {"n": self.n, "c": self.c, "switch_tol": self.switch_tol}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelConfig":
        unknown = set(d) - {"n", "c", "switch_tol"}
        if unknown:
            raise ValueError(f"unknown KernelConfig keys: {sorted(unknown)}")
        return cls(**d)


# ----------------------------------------------------- derivative polynomials

@dataclass(frozen=True)
class DerivPoly:
    """P_l(x1, D) with d^l/dx1^l (1/|sigma|^4) = P_l / D^(2+l), D = |sigma|^2.

    ``terms`` holds (i, j, coeff) for coeff * x1^i * D^j with i + 2j = l.
    """

    l: int
    terms: tuple

    def __call__(self, x1, D):
        return sum(c * x1 ** i * D ** j for i, j, c in self.terms)

    def d_dD(self, x1, D):
        return sum(c * j * x1 ** i * D ** (j - 1) for i, j, c in self.terms if j)

    def R(self, x1, D):
        return self(x1, D) / D ** (2 + self.l)

    def dR_dD(self, x1, D):
        return self.d_dD(x1, D) / D ** (2 + self.l) - (2 + self.l) * self(x1, D) / D ** (3 + self.l)


@lru_cache(maxsize=None)
def deriv_poly(l: int) -> DerivPoly:
    if l < 0:
        raise ValueError("order must be non-negative")
    terms = {(0, 0): 1}
    for k in range(l):
        nxt: dict = {}
        for (i, j), c in terms.items():
            # (dP/dx1) * D with dD/dx1 = 2 x1, then -(2k+4) x1 P
            if i:
                nxt[(i - 1, j + 1)] = nxt.get((i - 1, j + 1), 0) + i * c
            if j:
                nxt[(i + 1, j)] = nxt.get((i + 1, j), 0) + 2 * j * c
            nxt[(i + 1, j)] = nxt.get((i + 1, j), 0) - (2 * k + 4) * c
        terms = {key: c for key, c in nxt.items() if c}
    return DerivPoly(l, tuple(sorted((i, j, c) for (i, j), c in terms.items())))


# ------------------------------------------------------------ slice helpers

def _slice(sigma: np.ndarray):
    x1 = sigma[..., 0]
    v = sigma[..., 1:]
    r = np.sqrt((v * v).sum(axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(r[..., None] > 0, v / r[..., None], 0.0)
    return x1, r, u


def _embed(w: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.concatenate([w.real[..., None], w.imag[..., None] * u], axis=-1)


def _inv_powers(z: np.ndarray, top: int) -> list:
    iz = 1.0 / z
    out = [np.ones_like(z), iz]
    for _ in range(top - 1):
        out.append(out[-1] * iz)
    return out


def _check_nonzero(sigma: np.ndarray) -> None:
    zero = ~np.any(sigma != 0, axis=-1)
    if np.any(zero):
        raise SingularityError("kernel evaluated at sigma = 0")


def _sigma_array(sigma) -> np.ndarray:
    arr = np.asarray(sigma, dtype=float)
    if arr.shape[-1:] != (4,):
        raise ValueError(f"sigma must have 4 coordinates, got shape {arr.shape}")
    return arr


def _dispatch(sigma, cfg, float_impl, exact_impl):
    if isinstance(sigma, Quaternion):
        if sigma.is_exact:
            return exact_impl(sigma, cfg)
        return Quaternion.from_seq(float_impl(_sigma_array(sigma.coords), cfg).tolist())
    arr = np.asarray(sigma)
    if arr.dtype == object:
        flat = arr.reshape(-1, 4)
        out = np.empty(flat.shape, dtype=object)
        for i, row in enumerate(flat):
            out[i] = exact_impl(Quaternion(*(Fraction(x) for x in row)), cfg).coords
        return out.reshape(arr.shape)
    return float_impl(_sigma_array(arr), cfg)


# ---------------------------------------------------------------- sum form

def _sum_form_array(sigma, cfg):
    _check_nonzero(sigma)
    n = cfg.n
    m = 2 * n - 2
    f = math.factorial(m)
    x1, r, u = _slice(sigma)
    z = x1 + 1j * r
    zb = z.conj()
    iz, izb = _inv_powers(z, 2 * n), _inv_powers(zb, 2 * n)
    s1 = sum(f * (2 * n - k - 1) * (k + 1) * iz[2 * n - k] * izb[k + 2] for k in range(m + 1))
    s2 = sum(f * (2 * n - k - 2) * (k + 1) * iz[2 * n - k - 1] * izb[k + 2] for k in range(m))
    return float(cfg.c) * _embed(s1 * zb - s2, u)


def _sum_form_exact(sigma: Quaternion, cfg) -> Quaternion:
    if sigma.norm2() == 0:
        raise SingularityError("kernel evaluated at sigma = 0")
    n = cfg.n
    m = 2 * n - 2
    f = math.factorial(m)
    zb = sigma.conj()
    iz, izb = sigma.inverse(), zb.inverse()
    s1 = sum((f * (2 * n - k - 1) * (k + 1) * iz ** (2 * n - k) * izb ** (k + 2) for k in range(m + 1)),
             Quaternion.exact(0, 0, 0, 0))
    s2 = sum((f * (2 * n - k - 2) * (k + 1) * iz ** (2 * n - k - 1) * izb ** (k + 2) for k in range(m)),
             Quaternion.exact(0, 0, 0, 0))
    return Fraction(cfg.c) * (s1 * zb - s2)


def s_sum_form(sigma, cfg: KernelConfig):
    """s(sigma) from the double-sum representation; regular everywhere except sigma = 0."""
    return _dispatch(sigma, cfg, _sum_form_array, _sum_form_exact)


# -------------------------------------------------------------- closed form

def _closed_form_array(sigma, cfg):
    _check_nonzero(sigma)
    n = cfg.n
    x1, r, u = _slice(sigma)
    mod2 = x1 * x1 + r * r
    if np.any(r <= cfg.switch_tol * np.sqrt(mod2)):
        raise NearAxisError(f"|Im sigma| <= {cfg.switch_tol} |sigma|; use the sum form")
    z = x1 + 1j * r
    zb = z.conj()
    iz = _inv_powers(z, 2 * n - 2)
    x_a = zb ** 2 * iz[2 * n - 2] * (z + (2 * n - 1) * (z - zb) / 2)
    x_b = zb ** 2 * iz[2 * n - 3] * (z + (2 * n - 2) * (z - zb) / 2)
    pref = 4 * math.factorial(2 * n - 2) / (mod2 ** 2 * (z - zb) ** 3) * 1j
    return float(cfg.c) * _embed(pref * (x_a.imag * zb - x_b.imag), u)


def _closed_form_exact(sigma: Quaternion, cfg) -> Quaternion:
    if sigma.norm2() == 0:
        raise SingularityError("kernel evaluated at sigma = 0")
    n = cfg.n
    im = sigma.imag()
    tol = Fraction(cfg.switch_tol)
    if im.norm2() <= tol * tol * sigma.norm2():
        raise NearAxisError(f"|Im sigma| <= {cfg.switch_tol} |sigma|; use the sum form")
    zb = sigma.conj()
    diff = sigma - zb
    # within the slice, Im[w] i is the imaginary part of w as a quaternion
    x_a = zb ** 2 * sigma ** (-(2 * n - 2)) * (sigma + Fraction(2 * n - 1, 2) * diff)
    x_b = zb ** 2 * sigma ** (-(2 * n - 3)) * (sigma + Fraction(2 * n - 2, 2) * diff)
    pref = (4 * math.factorial(2 * n - 2)) * (diff ** 3).inverse() / (sigma.norm2() ** 2)
    return Fraction(cfg.c) * (pref * (x_a.imag() * zb - x_b.imag()))


def s_closed_form(sigma, cfg: KernelConfig):
    """s(sigma) from the closed form; needs |Im sigma| > switch_tol * |sigma|."""
    return _dispatch(sigma, cfg, _closed_form_array, _closed_form_exact)


# ------------------------------------------------------- derivative oracle

def _oracle_array(sigma, cfg):
    _check_nonzero(sigma)
    m = 2 * cfg.n - 2
    x1 = sigma[..., 0]
    D = (sigma * sigma).sum(axis=-1)
    out = deriv_poly(m).R(x1, D)[..., None] * qconj(sigma)
    out[..., 0] += m * deriv_poly(m - 1).R(x1, D)
    return float(cfg.c) * out


def _oracle_exact(sigma: Quaternion, cfg) -> Quaternion:
    D = sigma.norm2()
    if D == 0:
        raise SingularityError("kernel evaluated at sigma = 0")
    m = 2 * cfg.n - 2
    x1 = sigma.x1
    out = deriv_poly(m).R(x1, D) * sigma.conj() + m * deriv_poly(m - 1).R(x1, D)
    return Fraction(cfg.c) * out


def s_derivative_oracle(sigma, cfg: KernelConfig):
    """s(sigma) = c [R_{2n-2} conj(sigma) + (2n-2) R_{2n-3}] with R_l = P_l / D^(2+l)."""
    return _dispatch(sigma, cfg, _oracle_array, _oracle_exact)


# ---------------------------------------------------------------- dispatcher

def _eval_array(sigma, cfg):
    _check_nonzero(sigma)
    x1, r, _ = _slice(sigma)
    closed = r > cfg.switch_tol * np.sqrt(x1 * x1 + r * r)
    if np.all(closed):
        return _closed_form_array(sigma, cfg)
    if not np.any(closed):
        return _sum_form_array(sigma, cfg)
    out = np.empty(sigma.shape)
    out[closed] = _closed_form_array(sigma[closed], cfg)
    out[~closed] = _sum_form_array(sigma[~closed], cfg)
    return out


def _eval_exact(sigma: Quaternion, cfg) -> Quaternion:
    tol = Fraction(cfg.switch_tol)
    if sigma.imag().norm2() > tol * tol * sigma.norm2():
        return _closed_form_exact(sigma, cfg)
    return _sum_form_exact(sigma, cfg)


def s_eval(sigma, cfg: KernelConfig):
    """Production evaluator: closed form off the real axis, sum form near it."""
    return _dispatch(sigma, cfg, _eval_array, _eval_exact)


# ------------------------------------------------------------ group kernels

def group_sigma(g: GroupPoint, shift=0):
    """|y|^2 + shift + t as a quaternion array (..., 4)."""
    y2 = (g.y * g.y).sum(axis=-1)
    t = g.t
    shape = np.broadcast_shapes(np.shape(y2), t.shape[:-1])
    re = np.broadcast_to(np.asarray(y2 + shift), shape)
    return np.concatenate([re[..., None], np.broadcast_to(t, shape + (3,))], axis=-1)


def K(g: GroupPoint, cfg: KernelConfig):
    """Group kernel K(t, y) = s(|y|^2 + t)."""
    if g.n != cfg.n:
        raise ValueError(f"point lives in H^{g.n - 1} but the config has n = {cfg.n}")
    return s_eval(group_sigma(g), cfg)


def K_eps(g: GroupPoint, eps: float, cfg: KernelConfig):
    """Regularised kernel s(|y|^2 + eps + t); finite at the identity."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if g.n != cfg.n:
        raise ValueError(f"point lives in H^{g.n - 1} but the config has n = {cfg.n}")
    return s_eval(group_sigma(g, eps), cfg)


def two_point_sigma(q: SiegelPoint, p: SiegelPoint) -> np.ndarray:
    """q1 + conj(p1) - 2 sum_k conj(p_k) q_k."""
    return q.q1 + qconj(p.q1) - 2 * hinner(p.qprime, q.qprime)


def S_two_point(q: SiegelPoint, p: SiegelPoint, cfg: KernelConfig):
    if q.n != cfg.n or p.n != cfg.n:
        raise ValueError("Siegel points do not match the config dimension")
    return s_eval(two_point_sigma(q, p), cfg)


# --------------------------------------------------------------- gradients

_UNITS = np.eye(4)[1:]  # i, j, k


def _grad_x1_sum(sigma, cfg):
    n = cfg.n
    F = math.factorial(2 * n - 1)
    x1, r, u = _slice(sigma)
    z = x1 + 1j * r
    zb = z.conj()
    iz, izb = _inv_powers(z, 2 * n + 1), _inv_powers(zb, 2 * n + 1)
    a = -sum(F * (2 * n - k) * (k + 1) * iz[2 * n - k + 1] * izb[k + 2] for k in range(2 * n))
    b = sum(F * (2 * n - k - 1) * (k + 1) * iz[2 * n - k] * izb[k + 2] for k in range(2 * n - 1))
    return float(cfg.c) * _embed(a * zb + b, u)


def _grad_im_sum(sigma, cfg):
    """d s / d x_{alpha+1} from the term-by-term differentiated sum (needs Im sigma != 0)."""
    n = cfg.n
    f = math.factorial(2 * n - 2)
    x1, r, u = _slice(sigma)
    z = x1 + 1j * r
    zb = z.conj()
    iz, izb = _inv_powers(z, 2 * n + 1), _inv_powers(zb, 2 * n + 1)
    s1 = sum(f * (2 * n - k - 1) * (k + 1) * iz[2 * n - k] * izb[k + 2] for k in range(2 * n - 1))
    t1 = sum(
        f * (2 * n - k - 1) * (k + 1)
        * (-(2 * n - k) * zb * iz[2 * n - k + 1] * izb[k + 2] + (k + 2) * zb * iz[2 * n - k] * izb[k + 3])
        for k in range(2 * n - 1)
    )
    t2 = sum(
        f * (2 * n - k - 2) * (k + 1)
        * (-(2 * n - k - 1) * iz[2 * n - k] * izb[k + 2] + (k + 2) * iz[2 * n - k - 1] * izb[k + 3])
        for k in range(2 * n - 2)
    )
    # dz/dx_{alpha+1} = (x_{alpha+1}/r) u inside the slice; d conj(sigma)/dx_{alpha+1} = -i_alpha
    radial = _embed(1j * (t1 - t2), u)
    s1q = _embed(s1, u)
    out = np.empty(sigma.shape[:-1] + (3, 4))
    for a in range(3):
        out[..., a, :] = qmul(s1q, -_UNITS[a]) + (sigma[..., a + 1] / r)[..., None] * radial
    return float(cfg.c) * out


def _grad_im_poly(sigma, cfg):
    m = 2 * cfg.n - 2
    x1 = sigma[..., 0]
    D = (sigma * sigma).sum(axis=-1)
    pm, pm1 = deriv_poly(m), deriv_poly(m - 1)
    rm = pm.R(x1, D)
    radial = pm.dR_dD(x1, D)[..., None] * qconj(sigma)
    radial[..., 0] += m * pm1.dR_dD(x1, D)
    out = np.empty(sigma.shape[:-1] + (3, 4))
    for a in range(3):
        out[..., a, :] = 2 * sigma[..., a + 1, None] * radial - rm[..., None] * _UNITS[a]
    return float(cfg.c) * out


def grad_s(sigma, cfg: KernelConfig):
    """Return (ds/dx1, ds/dx_{2..4}) with shapes (..., 4) and (..., 3, 4)."""
    sigma = _sigma_array(sigma.coords if isinstance(sigma, Quaternion) else sigma)
    _check_nonzero(sigma)
    ds1 = _grad_x1_sum(sigma, cfg)
    x1, r, _ = _slice(sigma)
    use_sum = r > cfg.switch_tol * np.sqrt(x1 * x1 + r * r)
    if np.all(use_sum):
        dsa = _grad_im_sum(sigma, cfg)
    elif not np.any(use_sum):
        dsa = _grad_im_poly(sigma, cfg)
    else:
        dsa = np.empty(sigma.shape[:-1] + (3, 4))
        dsa[use_sum] = _grad_im_sum(sigma[use_sum], cfg)
        dsa[~use_sum] = _grad_im_poly(sigma[~use_sum], cfg)
    return ds1, dsa


def grad_s_oracle(sigma, cfg: KernelConfig):
    """Gradient from the derivative polynomials only (independent of the complex slice)."""
    sigma = _sigma_array(sigma)
    _check_nonzero(sigma)
    m = 2 * cfg.n - 2
    x1 = sigma[..., 0]
    D = (sigma * sigma).sum(axis=-1)
    ds1 = deriv_poly(m + 1).R(x1, D)[..., None] * qconj(sigma)
    ds1[..., 0] += (m + 1) * deriv_poly(m).R(x1, D)
    return float(cfg.c) * ds1, _grad_im_poly(sigma, cfg)


def YK(l: int, j: int, g: GroupPoint, cfg: KernelConfig):
    """Y_{4l+j} K(g) by the chain rule; l in 0..n-2, j in 1..4."""
    _check_field_index(l, j, cfg.n)
    ds1, dsa = grad_s(group_sigma(g), cfg)
    yj = np.asarray(g.y, dtype=float)[..., 4 * l + j - 1]
    coef = vector_field_coefficients(l, j, np.asarray(g.y, dtype=float))
    return 2 * yj[..., None] * ds1 + np.einsum("...a,...aq->...q", coef, dsa)


def YK_all(g: GroupPoint, cfg: KernelConfig) -> np.ndarray:
    """Y_i K(g) for every horizontal field i = 4l + j, shape (..., 4(n-1), 4)."""
    ds1, dsa = grad_s(group_sigma(g), cfg)
    y = np.asarray(g.y, dtype=float)
    out = []
    for l in range(cfg.n - 1):
        for j in range(1, 5):
            coef = vector_field_coefficients(l, j, y)
            out.append(2 * y[..., 4 * l + j - 1, None] * ds1 + np.einsum("...a,...aq->...q", coef, dsa))
    return np.stack(out, axis=-2)
