"""Discretised Cauchy-Szego projection as a truncated principal-value convolution.

All lattice sums are accumulated with :func:`math.fsum` per quaternion
component.  fsum is correctly rounded, so the result is independent of the
summation order and therefore of how the work is split across threads.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.signal import fftconvolve

from . import io as qio
from ._parallel import chunked_map, map_items
from .heisenberg import (
    DomainError, GroupPoint, LatticeSpec, SiegelPoint, group_inv, group_mul, group_to_boundary, grid_ball, hnorm,
)
from .kernel import K, K_eps, KernelConfig, S_two_point, s_eval, s_sum_form
from .quaternion import qconj, qmul


class QuadratureError(RuntimeError):
    """The requested lattice sum has no terms."""


class QuadratureWarning(RuntimeWarning):
    """Truncated sum still carries a large tail."""


def _fsum4(terms: np.ndarray) -> np.ndarray:
    terms = np.asarray(terms, dtype=float).reshape(-1, 4)
    return np.array([math.fsum(terms[:, k]) for k in range(4)])


@dataclass(frozen=True)
class SampledFunction:
    """Quaternion samples ``values[i]`` of f at ``points[i]``."""

    points: GroupPoint
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.points), 4):
            raise qio.InputError(f"values must have shape ({len(self.points)}, 4), got {vals.shape}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.points.n

    def __len__(self) -> int:
        return len(self.points)

    def check_finite(self) -> None:
        bad = ~np.all(np.isfinite(self.values), axis=1)
        if np.any(bad):
            raise qio.InputError(f"sample {int(np.argmax(bad))} is missing or not finite")

    @classmethod
    def from_callable(cls, fn, spec: LatticeSpec, n: int, center: GroupPoint | None = None) -> "SampledFunction":
        """Sample ``fn(points) -> (N, 4)`` on the grid ball around ``center``."""
        pts = grid_ball(spec, n, center)
        return cls(pts, np.asarray(fn(pts), dtype=float))

    def scaled(self, a: float) -> "SampledFunction":
        return SampledFunction(self.points, a * self.values)

    def right_translate(self, a: GroupPoint) -> "SampledFunction":
        """Samples of f(. a^{-1}) on the translated points h a."""
        return SampledFunction(group_mul(self.points, a), self.values)

    def to_csv(self, path) -> None:
        header = qio.group_header(self.n) + ["f1", "f2", "f3", "f4"]
        data = np.hstack([self.points.t, self.points.y, self.values])
        qio.write_csv(path, header, data.tolist())

    @classmethod
    def from_csv(cls, path) -> "SampledFunction":
        header, data = qio.read_table(path, min_cols=11)
        n = qio.n_from_header(header, extra=4)
        if list(header[-4:]) != ["f1", "f2", "f3", "f4"]:
            raise qio.InputError("last four columns must be f1,f2,f3,f4", 1)
        d = 4 * (n - 1)
        return cls(GroupPoint(data[:, :3], data[:, 3:3 + d]), data[:, 3 + d:])


def _select_shell(f: SampledFunction, g: GroupPoint, lo: float, hi: float):
    """Indices of samples with lo <= rho(h, g) <= hi, sorted by rho then coordinates."""
    u = group_mul(group_inv(f.points), g)
    r = hnorm(u)
    idx = np.nonzero((r >= lo) & (r <= hi))[0]
    coords = np.hstack([f.points.t, f.points.y])[idx]
    keys = [coords[:, c] for c in range(coords.shape[1] - 1, -1, -1)] + [r[idx]]
    return idx[np.lexsort(keys)], u


def _convolve(f, g, spec, cfg, threads, kernel, lo, order="forward"):
    if g.n != f.n or cfg.n != f.n:
        raise ValueError("sampled function, point and config must share n")
    f.check_finite()
    idx, u = _select_shell(f, g, lo, spec.radius)
    if len(idx) == 0:
        raise QuadratureError("no lattice samples in the shell around g")
    w = spec.weight(f.n)
    vals = f.values[idx]
    us = u[idx]

    def part(a, b):
        kv = kernel(us[a:b])
        prod = qmul(vals[a:b], kv) if order == "forward" else qmul(kv, vals[a:b])
        return prod * w

    return _fsum4(np.concatenate(chunked_map(part, len(idx), threads)))


def project(f: SampledFunction, g: GroupPoint, spec: LatticeSpec, cfg: KernelConfig,
            threads: int = 1, order: str = "forward") -> np.ndarray:
    """sum_h f(h) K(h^{-1} g) w over exclusion <= rho(h, g) <= radius.

    ``order="reversed"`` computes K(h^{-1} g) f(h) instead, for comparison only.
    """
    if order not in ("forward", "reversed"):
        raise ValueError("order must be 'forward' or 'reversed'")
    return _convolve(f, g, spec, cfg, threads, lambda u: K(u, cfg), spec.exclusion, order)


def project_eps(f: SampledFunction, g: GroupPoint, eps: float, spec: LatticeSpec, cfg: KernelConfig,
                threads: int = 1) -> np.ndarray:
    """Same sum with K_eps and no exclusion hole."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return _convolve(f, g, spec, cfg, threads, lambda u: K_eps(u, eps, cfg), -1.0)


# ------------------------------------------------------- reproducing check

@dataclass(frozen=True)
class ReproduceResult:
    approx: np.ndarray
    exact: np.ndarray
    rel_err: float
    tail: float     # |contribution of the outer half shell| / |exact|
    method: str

    def to_dict(self) -> dict:
        return {"approx": self.approx, "exact": self.exact, "rel_err": self.rel_err,
                "tail": self.tail, "method": self.method}


def _on_real_axis(p: SiegelPoint) -> bool:
    return bool(np.all(p.q1[..., 1:] == 0) and np.all(p.qprime == 0))


def _odd_square_counts(dim: int, mmax: int) -> np.ndarray:
    """counts[M] = #{m in (odd Z)^dim : |m|^2 = M} for M <= mmax."""
    one = np.zeros(mmax + 1)
    j = np.arange(1, math.isqrt(mmax) + 1, 2)
    one[j * j] = 2
    out = one.copy()
    for _ in range(dim - 1):
        out = np.rint(fftconvolve(out, one)[: mmax + 1])
    return out.astype(np.int64)


def _reproduce_direct(p0, q, spec, cfg, threads):
    pts = grid_ball(spec, cfg.n)
    r = hnorm(pts)
    w = spec.weight(cfg.n)

    def part(a, b):
        xi = group_to_boundary(pts[a:b])
        return qmul(S_two_point(q, xi, cfg), S_two_point(xi, p0, cfg)) * w

    terms = np.concatenate(chunked_map(part, len(pts), threads))
    return _fsum4(terms), _fsum4(terms[r > spec.radius / 2])


def _reproduce_radial(p0, q, spec, cfg, threads):
    """Shell-aggregated sum for q, p0 on the real axis.

    The integrand then depends on |y|^2 and t only, and after pairing t with -t
    only the real part survives, which depends on |t| alone.
    """
    n = cfg.n
    a, b = float(q.q1[0]), float(p0.q1[0])
    R = spec.radius
    cy = _odd_square_counts(4 * (n - 1), int(4 * R * R / spec.hy ** 2))
    ct = _odd_square_counts(3, int(4 * R ** 4 / spec.ht ** 2))
    iy = np.nonzero(cy)[0]
    it = np.nonzero(ct)[0]
    y2 = spec.hy ** 2 * iy / 4
    tt = spec.ht * np.sqrt(it / 4)
    w = spec.weight(n)

    def shell(k):
        m = y2[k] ** 2 + tt ** 2 <= R ** 4
        if not np.any(m):
            return np.zeros(0), np.zeros(0, dtype=bool)
        t = tt[m]
        z = np.zeros((len(t), 4))
        z[:, 1] = t
        s1 = s_eval(np.column_stack([np.full(len(t), a + y2[k]), -t, z[:, 2], z[:, 3]]), cfg)
        s2 = s_eval(np.column_stack([np.full(len(t), b + y2[k]), t, z[:, 2], z[:, 3]]), cfg)
        re = qmul(s1, s2)[:, 0]
        outer = y2[k] ** 2 + t ** 2 > (R / 2) ** 4
        return re * (ct[it][m] * cy[iy[k]] * w), outer

    parts = map_items(shell, range(len(iy)), threads)
    vals = np.concatenate([p[0] for p in parts])
    outer = np.concatenate([p[1] for p in parts])
    total = np.array([math.fsum(vals), 0.0, 0.0, 0.0])
    tail = np.array([math.fsum(vals[outer]), 0.0, 0.0, 0.0])
    return total, tail


def reproduce_check(p0: SiegelPoint, q: SiegelPoint, spec: LatticeSpec, cfg: KernelConfig,
                    threads: int = 1, method: str = "auto", tail_tol: float = 0.05) -> ReproduceResult:
    """Compare sum_h S(q, pi h) S(pi h, p0) w with S(q, p0) on the grid ball of ``spec``.

    ``method`` is "direct", "radial" (real-axis q and p0 only) or "auto".
    """
    if p0.n != cfg.n or q.n != cfg.n:
        raise ValueError("Siegel points do not match the config dimension")
    if not (p0.is_interior() and q.is_interior()):
        raise DomainError("reproduce_check needs interior points")
    radial_ok = _on_real_axis(p0) and _on_real_axis(q)
    if method == "auto":
        method = "radial" if radial_ok else "direct"
    if method == "radial":
        if not radial_ok:
            raise ValueError("radial method needs q and p0 on the real axis")
        approx, tail = _reproduce_radial(p0, q, spec, cfg, threads)
    elif method == "direct":
        approx, tail = _reproduce_direct(p0, q, spec, cfg, threads)
    else:
        raise ValueError(f"unknown method {method!r}")
    exact = np.asarray(S_two_point(q, p0, cfg), dtype=float)
    scale = float(np.linalg.norm(exact))
    rel = float(np.linalg.norm(approx - exact) / scale)
    tail_rel = float(np.linalg.norm(tail) / scale)
    if tail_rel > tail_tol:
        warnings.warn(f"outer half shell carries {tail_rel:.3g} of |exact|; radius {spec.radius} may be too small",
                      QuadratureWarning, stacklevel=2)
    return ReproduceResult(approx, exact, rel, tail_rel, method)


@lru_cache(maxsize=None)
def reproducing_constant(n: int, a: float = 2.0, b: float = 2.0) -> float:
    """c_{n-1} fixed by requiring the reproducing identity at real q1 = a, p1 = b.

    With c = 1 the identity reads c^2 I = c s(a + b), so c = s(a + b) / I where
    I is the boundary integral of s(a + |y|^2 - t) s(b + |y|^2 + t), reduced to
    polar coordinates in y and t.
    """
    cfg = KernelConfig(n, 1.0)
    d = 4 * (n - 1)
    area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)

    def integrand(tau, r):
        s1 = s_sum_form(np.array([a + r * r, -tau, 0.0, 0.0]), cfg)
        s2 = s_sum_form(np.array([b + r * r, tau, 0.0, 0.0]), cfg)
        return qmul(s1, s2)[0] * area * r ** (d - 1) * 4 * math.pi * tau * tau

    with warnings.catch_warnings():
        # quadpack flags roundoff at this tolerance; the result is stable to ~1e-12 under (a, b) changes
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.dblquad(integrand, 0, np.inf, 0, np.inf, epsabs=0, epsrel=1e-11)
    return float(s_sum_form(np.array([a + b, 0.0, 0.0, 0.0]), cfg)[0] / val)


# -------------------------------------------------------- operator norm probe

@dataclass(frozen=True)
class NormEstimate:
    value: float
    converged: bool
    iterations: int
    points: int
    spec: LatticeSpec

    def to_dict(self) -> dict:
        return {"value": self.value, "converged": self.converged, "iterations": self.iterations,
                "points": self.points, "spec": self.spec.to_dict()}


def kernel_matrix(spec: LatticeSpec, cfg: KernelConfig, threads: int = 1):
    """Dense (N, N, 4) table of K(h_j^{-1} g_i) on the grid ball, zero outside the shell."""
    pts = grid_ball(spec, cfg.n)
    N = len(pts)
    if N == 0:
        raise QuadratureError("grid ball is empty")

    def rows(a, b):
        g = pts[a:b]
        u = group_mul(group_inv(GroupPoint(pts.t[None, :, :], pts.y[None, :, :])),
                      GroupPoint(g.t[:, None, :], g.y[:, None, :]))
        r = hnorm(u)
        inside = (r >= spec.exclusion) & (r <= spec.radius)
        out = np.zeros(r.shape + (4,))
        if np.any(inside):
            out[inside] = K(u[inside], cfg)
        return out

    return pts, np.concatenate(chunked_map(rows, N, threads, chunk=64))


def operator_norm_estimate(spec: LatticeSpec, cfg: KernelConfig, trials: int = 1, seed: int = 0,
                           max_iter: int = 200, rtol: float = 1e-8, threads: int = 1) -> NormEstimate:
    """Power iteration on A*A for the discrete operator (A f)(g) = sum_h f(h) K(h^{-1} g) w."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pts, km = kernel_matrix(spec, cfg, threads)
    w = spec.weight(cfg.n)
    N = len(pts)
    kc = qconj(km)

    def apply(f):
        return w * qmul(f[None, :, :], km).sum(axis=1)

    def adjoint(v):
        return w * qmul(v[:, None, :], kc).sum(axis=0)

    rng = np.random.default_rng(seed)
    best, conv, iters = 0.0, True, 0
    for _ in range(trials):
        f = rng.standard_normal((N, 4))
        f /= np.linalg.norm(f)
        est, ok = 0.0, False
        for it in range(1, max_iter + 1):
            g = adjoint(apply(f))
            nrm = float(np.linalg.norm(g))
            if nrm == 0.0:
                est, ok = 0.0, True
                break
            new = math.sqrt(nrm)
            f = g / nrm
            if abs(new - est) <= rtol * new:
                est, ok = new, True
                break
            est = new
        iters = max(iters, it)
        conv = conv and ok
        best = max(best, est)
    return NormEstimate(best, conv, iters, N, spec)
