"""Numerical checks of the kernel's quantitative properties.

Each "<=, up to a constant" statement is turned into two assertable facts:
the normalised ratio is constant on dilation orbits (to roundoff), and its
sampled supremum is finite and stable when the sample count doubles.
Samples come from scrambled Sobol sequences, whose prefixes are themselves
the smaller sample sets, so "N vs 2N" compares nested point sets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize
from scipy.stats import norm, qmc

from ._parallel import chunked_map
from .heisenberg import (
    GroupPoint, apply_Y, dilate, flow_commutator, group_inv, group_mul, hnorm, lie_bracket,
    rho, sphere_from_normal,
)
from .kernel import (
    KernelConfig, K, YK_all, s_closed_form, s_derivative_oracle, s_eval, s_sum_form,
)
from .quaternion import B_MATRICES, Quaternion, qabs


class ConsistencyError(RuntimeError):
    """A value the proofs guarantee to be nonzero came out (numerically) zero."""


class SearchError(RuntimeError):
    """Bisection could not find a radius with the required property."""


@dataclass
class BoundReport:
    claim: str
    n: int
    c: float
    samples: int
    seed: int
    sup: float
    inf: float
    argsup: list
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"claim": self.claim, "n": self.n, "c": self.c, "samples": self.samples, "seed": self.seed,
               "sup": self.sup, "inf": self.inf, "argsup": self.argsup, "pass": bool(self.passed)}
        out.update(self.extra)
        return out


# ---------------------------------------------------------------- sampling

def _uniform(dim: int, count: int, seed: int) -> np.ndarray:
    sampler = qmc.Sobol(dim, scramble=True, seed=seed)
    m = max(0, math.ceil(math.log2(max(count, 1))))
    return sampler.random_base2(m)[:count]


def _normal(u: np.ndarray) -> np.ndarray:
    return norm.ppf(np.clip(u, 1e-16, 1 - 1e-16))


def _log_uniform(u: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return np.exp(math.log(lo) + u * (math.log(hi) - math.log(lo)))


def _rel_dev(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    num = qabs(a - b)
    den = np.maximum(qabs(a), qabs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(num == 0, 0.0, num / np.where(den == 0, 1.0, den))


def _sup_report(claim, cfg, ratio, points, seed, stab_tol=None, extra=None, passed=None) -> BoundReport:
    """sup/inf with first-index tie-breaking; stability compares the first half with the whole."""
    ratio = np.asarray(ratio, dtype=float)
    N = len(ratio)
    i = int(np.argmax(ratio))
    extra = dict(extra or {})
    finite = bool(np.all(np.isfinite(ratio)))
    ok = finite if passed is None else passed
    if stab_tol is not None and N >= 2:
        half = float(np.max(ratio[: N // 2]))
        stab = float(ratio[i] / half - 1) if half > 0 else (0.0 if ratio[i] == 0 else math.inf)
        extra["stability"] = stab
        extra["stability_samples"] = [N // 2, N]
        ok = ok and abs(stab) <= stab_tol
    return BoundReport(claim, cfg.n, float(cfg.c), N, seed, float(ratio[i]), float(np.min(ratio)),
                       np.asarray(points[i], dtype=float).tolist(), bool(ok), extra)


def _with_drift(report: BoundReport, drift: float, tol: float) -> BoundReport:
    report.extra["dilation_drift"] = float(drift)
    report.passed = bool(report.passed and drift <= tol)
    return report


def _eval_chunks(fn, total, threads):
    return np.concatenate(chunked_map(fn, total, threads))


# -------------------------------------------------------- form equivalence

def _random_sigma(count: int, seed: int) -> np.ndarray:
    u = _uniform(5, count, seed)
    d = _normal(u[:, :4])
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * _log_uniform(u[:, 4], 1e-3, 1e3)[:, None]


def check_form_equivalence(cfg: KernelConfig, samples: int = 10_000, tol: float = 1e-9, seed: int = 0,
                           evaluators=None, threads: int = 1) -> BoundReport:
    """Max pairwise relative deviation among the three evaluators of s.

    ``evaluators`` replaces the (sum, closed, oracle) triple, for fault injection.
    Points too close to the real axis for the closed form are dropped and counted.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    fs = evaluators or (s_sum_form, s_closed_form, s_derivative_oracle)
    sig = _random_sigma(samples, seed)
    r = np.linalg.norm(sig[:, 1:], axis=1)
    keep = r > cfg.switch_tol * np.linalg.norm(sig, axis=1)
    sig = sig[keep]

    def part(a, b):
        vals = [f(sig[a:b], cfg) for f in fs]
        dev = np.zeros(b - a)
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                dev = np.maximum(dev, _rel_dev(vals[i], vals[j]))
        return dev

    dev = _eval_chunks(part, len(sig), threads)
    rep = _sup_report("form_equivalence", cfg, dev, sig, seed, extra={"tol": tol, "dropped_near_axis": int((~keep).sum())})
    rep.passed = bool(np.all(np.isfinite(dev)) and rep.sup <= tol)
    return rep


def check_form_equivalence_exact(cfg: KernelConfig, samples: int = 100, seed: int = 0) -> BoundReport:
    """Rational-arithmetic comparison; any nonzero difference fails."""
    rng = np.random.default_rng(seed)
    mism, first_bad = 0, None
    pts = []
    for _ in range(samples):
        while True:
            coords = [Fraction(int(rng.integers(-40, 41)), int(rng.integers(1, 13))) for _ in range(4)]
            q = Quaternion(*coords)
            tol = Fraction(cfg.switch_tol)
            if q.imag().norm2() > tol * tol * q.norm2():
                break
        pts.append(q)
        a, b, c = s_sum_form(q, cfg), s_closed_form(q, cfg), s_derivative_oracle(q, cfg)
        if not (a == b == c):
            mism += 1
            first_bad = first_bad or q
    arg = [float(x) for x in (first_bad or pts[0]).coords]
    return BoundReport("form_equivalence_exact", cfg.n, float(cfg.c), samples, seed, float(mism), 0.0, arg,
                       mism == 0, {"mismatches": mism})


# --------------------------------------------------------------- homogeneity

def _random_points(n: int, count: int, seed: int, extra_dims: int = 0):
    """Gaussian group points with a log-uniform scale spread, plus extra uniforms."""
    d = 4 * n - 1
    u = _uniform(d + 1 + extra_dims, count, seed)
    g = dilate(_log_uniform(u[:, d], 0.1, 10.0), GroupPoint.from_coords(_normal(u[:, :d])))
    return g, u[:, d + 1:]


def check_homogeneity(cfg: KernelConfig, samples: int = 10_000, seed: int = 0, Q: int | None = None,
                      threads: int = 1) -> BoundReport:
    """Max relative deviation of K(delta_r g) r^Q from K(g), r log-uniform in [1e-2, 1e2]."""
    Q = cfg.Q if Q is None else Q
    g, u = _random_points(cfg.n, samples, seed, 1)
    r = _log_uniform(u[:, 0], 1e-2, 1e2)

    def part(a, b):
        ga = g[a:b]
        return _rel_dev(K(dilate(r[a:b], ga), cfg) * (r[a:b] ** Q)[:, None], K(ga, cfg))

    dev = _eval_chunks(part, samples, threads)
    pts = np.hstack([g.coords(), r[:, None]])
    rep = _sup_report("homogeneity", cfg, dev, pts, seed, extra={"Q": Q, "tol": 1e-10})
    rep.passed = bool(rep.sup <= 1e-10)
    return rep


# ------------------------------------------------------------- bound scans
#
# A scan is a ratio defined on the unit cube [0, 1]^dim: Sobol points give the
# samples, and the same coordinates let a bounded local search polish the best
# samples.  The last cube coordinate always drives the test dilation.

def _sphere(n: int, count: int, seed: int, extra_dims: int = 0):
    d = 4 * n - 1
    u = _uniform(d + extra_dims, count, seed)
    return sphere_from_normal(_normal(u[:, :d]), n), u[:, d:]


def _refined_sup(ratio, u: np.ndarray, vals: np.ndarray, refine: int, maxfev: int):
    """Max of the sampled values and of Powell searches started at the ``refine`` best samples."""
    i = int(np.argmax(vals))
    best, best_u = float(vals[i]), u[i]

    def neg(x):
        v = ratio(np.clip(x, 1e-12, 1 - 1e-12)[None, :])[0]
        return -float(v) if np.isfinite(v) else 0.0

    order = np.argsort(-vals, kind="stable")[:refine]
    for k in order:
        res = optimize.minimize(neg, u[k], method="Powell", bounds=[(0.0, 1.0)] * u.shape[1],
                                options={"xtol": 1e-10, "ftol": 1e-13, "maxfev": maxfev})
        if -res.fun > best:
            best, best_u = -float(res.fun), np.clip(res.x, 1e-12, 1 - 1e-12)
    return best, best_u


def _scan(claim, cfg, dim, ratio, moved, coords, samples, seed, threads, stab_tol, refine, extra=None,
          chunk=4096, maxfev=3000) -> BoundReport:
    """Shared driver: sample, refine, check stability (prefix N/2 vs N) and dilation drift."""
    u = _uniform(dim, samples, seed)
    vals = np.concatenate(chunked_map(lambda a, b: ratio(u[a:b]), samples, threads, chunk))
    mv = np.concatenate(chunked_map(lambda a, b: moved(u[a:b]), samples, threads, chunk))
    sup, u_star = _refined_sup(ratio, u, vals, refine, maxfev)
    half, u_half = _refined_sup(ratio, u[: samples // 2], vals[: samples // 2], refine, maxfev)
    if half > sup:
        # the half set is a subset of the full one, so its searches count for the full sup too
        sup, u_star = half, u_half
    drift = float(max(np.max(np.abs(mv / vals - 1)), abs(moved(u_star[None])[0] / sup - 1)))
    stab = sup / half - 1 if half > 0 else (0.0 if sup == 0 else math.inf)
    extra = dict(extra or {})
    extra.update({"sampled_sup": float(np.max(vals)), "refine_starts": refine, "stability": float(stab),
                  "stability_samples": [samples // 2, samples], "dilation_drift": drift})
    ok = bool(np.all(np.isfinite(vals)) and math.isfinite(sup) and abs(stab) <= stab_tol and drift <= 1e-10)
    return BoundReport(claim, cfg.n, float(cfg.c), samples, seed, float(sup), float(np.min(vals)),
                       np.asarray(coords(u_star[None])[0], dtype=float).tolist(), ok, extra)


def _sphere_param(n, u):
    d = 4 * n - 1
    return sphere_from_normal(_normal(u[:, :d]), n), _log_uniform(u[:, d], 1e-2, 1e2)


def scan_size_bound(cfg: KernelConfig, samples: int = 20_000, seed: int = 0, stab_tol: float = 0.05,
                    threads: int = 1, refine: int = 4) -> BoundReport:
    """sup of ||g||^Q |K(g)| over the homogeneous unit sphere."""
    n = cfg.n

    def value(g):
        return hnorm(g) ** cfg.Q * qabs(K(g, cfg))

    def ratio(u):
        return value(_sphere_param(n, u)[0])

    def moved(u):
        g, r = _sphere_param(n, u)
        return value(dilate(r, g))

    return _scan("size_bound", cfg, 4 * n, ratio, moved, lambda u: _sphere_param(n, u)[0].coords(),
                 samples, seed, threads, stab_tol, refine)


def scan_gradient_bound(cfg: KernelConfig, samples: int = 20_000, seed: int = 0, exponent: int | None = None,
                        stab_tol: float = 0.05, threads: int = 1, refine: int = 4) -> BoundReport:
    """sup over the sphere and all fields of rho(g, 0)^(Q+1) |Y_j K(g)|."""
    n = cfg.n
    e = cfg.Q + 1 if exponent is None else exponent

    def value(g):
        return hnorm(g) ** e * qabs(YK_all(g, cfg)).max(axis=-1)

    def ratio(u):
        return value(_sphere_param(n, u)[0])

    def moved(u):
        g, r = _sphere_param(n, u)
        return value(dilate(r, g))

    return _scan("gradient_bound", cfg, 4 * n, ratio, moved, lambda u: _sphere_param(n, u)[0].coords(),
                 samples, seed, threads, stab_tol, refine, {"exponent": e})


def _regularity_triples(n: int, c_sep: float, u: np.ndarray):
    d = 4 * n - 1
    scale = _log_uniform(u[:, 3 * d], 0.1, 10.0)
    # g0 on the same scale as the separations keeps K(., h) differences well conditioned
    g0 = dilate(scale, GroupPoint.from_coords(_normal(u[:, :d])))
    v1 = sphere_from_normal(_normal(u[:, d:2 * d]), n)
    v2 = sphere_from_normal(_normal(u[:, 2 * d:3 * d]), n)
    ratio = _log_uniform(u[:, 3 * d + 1], 1e-2, 1.0 / c_sep)
    # rho(g, g0) = scale * ratio, rho(g0, h) = scale
    g = group_mul(g0, dilate(scale * ratio, v1))
    h = group_mul(g0, dilate(scale, v2))
    return g, g0, h, _log_uniform(u[:, 3 * d + 2], 1e-2, 1e2)


def _regularity_ratio(g, g0, h, cfg, variant):
    if variant == "ii":
        num = K(group_mul(group_inv(h), g), cfg) - K(group_mul(group_inv(h), g0), cfg)
    else:
        num = K(group_mul(group_inv(g), h), cfg) - K(group_mul(group_inv(g0), h), cfg)
    return qabs(num) * rho(g0, h) ** (cfg.Q + 1) / rho(g, g0)


def check_regularity(cfg: KernelConfig, c_sep: float = 4.0, samples: int = 20_000, seed: int = 0,
                     variant: str = "ii", stab_tol: float = 0.05, threads: int = 1, refine: int = 4) -> BoundReport:
    """sup of |K(g,h) - K(g0,h)| rho(g0,h)^(Q+1) / rho(g,g0) with rho(g0,h) >= c_sep rho(g,g0).

    K(g, h) = K(h^{-1} g).  ``variant="iii"`` swaps the roles: |K(h,g) - K(h,g0)|.
    """
    if not c_sep > 0:
        raise ValueError("c_sep must be positive")
    if variant not in ("ii", "iii"):
        raise ValueError("variant must be 'ii' or 'iii'")
    n = cfg.n
    d = 4 * n - 1

    def ratio(u):
        g, g0, h, _ = _regularity_triples(n, c_sep, u)
        return _regularity_ratio(g, g0, h, cfg, variant)

    def moved(u):
        g, g0, h, r = _regularity_triples(n, c_sep, u)
        return _regularity_ratio(dilate(r, g), dilate(r, g0), dilate(r, h), cfg, variant)

    def coords(u):
        g, g0, h, _ = _regularity_triples(n, c_sep, u)
        return np.hstack([g.coords(), g0.coords(), h.coords()])

    return _scan(f"regularity_{variant}", cfg, 3 * d + 3, ratio, moved, coords, samples, seed, threads,
                 stab_tol, refine, {"c_sep": c_sep})


def mean_value_check(cfg: KernelConfig, samples: int = 10_000, seed: int = 0, c0: float = 0.5, kappa: float = 4.0,
                     u_samples: int = 64, stab_tol: float = 0.05, threads: int = 1, refine: int = 2) -> BoundReport:
    """rho-surrogate of the mean value inequality.

    Ratio |K(g) - K(g0)| / (rho(g,g0) * max_{j,u} |Y_j K(g0 u)|) with
    rho(g, g0) < c0 ||g0|| / kappa and u drawn from {0} and the spheres of
    radius kappa*rho/2 and kappa*rho.  A sampled max under-estimates the true
    max, so the reported ratio errs on the large side.
    """
    if not 0 < c0 < 1:
        raise ValueError("c0 must lie in (0, 1)")
    n = cfg.n
    d = 4 * n - 1
    w, _ = _sphere(n, u_samples, seed + 1)
    taus = np.repeat([0.5, 1.0], u_samples)
    wt = np.concatenate([w.t, w.t])
    wy = np.concatenate([w.y, w.y])

    def pairs(u):
        g0 = dilate(_log_uniform(u[:, 2 * d], 0.1, 10.0), GroupPoint.from_coords(_normal(u[:, :d])))
        v = sphere_from_normal(_normal(u[:, d:2 * d]), n)
        dist = np.maximum(u[:, 2 * d + 1], 1e-3) * c0 * hnorm(g0) / kappa
        return group_mul(g0, dilate(dist, v)), g0, dist, _log_uniform(u[:, 2 * d + 2], 1e-2, 1e2)

    def value(g, g0, dist):
        m = len(dist)
        num = qabs(K(g, cfg) - K(g0, cfg))
        # every sample against every probe u = delta_{kappa dist tau}(w), in one batch
        scale = kappa * dist[:, None] * taus[None, :]
        probes = GroupPoint(scale[..., None] ** 2 * wt[None], scale[..., None] * wy[None])
        base = GroupPoint(g0.t[:, None, :], g0.y[:, None, :])
        best = qabs(YK_all(group_mul(base, probes), cfg)).max(axis=(-1, -2))
        best = np.maximum(best, qabs(YK_all(g0, cfg)).max(axis=-1))
        return num / (dist * best)

    def ratio(u):
        g, g0, dist, _ = pairs(u)
        return value(g, g0, dist)

    def moved(u):
        g, g0, dist, r = pairs(u)
        return value(dilate(r, g), dilate(r, g0), dist * r)

    def coords(u):
        g, g0, _, _ = pairs(u)
        return np.hstack([g.coords(), g0.coords()])

    return _scan("mean_value", cfg, 2 * d + 3, ratio, moved, coords, samples, seed, threads, stab_tol, refine,
                 {"c0": c0, "kappa": kappa, "u_samples": 2 * u_samples + 1}, chunk=256, maxfev=1500)


# -------------------------------------------------------- derivative checks

def gradient_fd_check(cfg: KernelConfig, samples: int = 1000, seed: int = 0, rel_step: float = 1e-4,
                      tol: float = 1e-5, min_order: float = 1.9, threads: int = 1) -> BoundReport:
    """Analytic Y_j K against central differences along the flows.

    Errors are relative to max_j |Y_j K(g)|.  The observed order comes from
    halving a coarser step (1e-2 rho) three times, where truncation error
    dominates roundoff.
    """
    n = cfg.n
    g, _ = _random_points(n, samples, seed)
    r = hnorm(g)
    fields = [(l, j) for l in range(n - 1) for j in range(1, 5)]
    exact = YK_all(g, cfg)
    scale = qabs(exact).max(axis=-1)

    def fd_error(step):
        err = np.zeros(samples)
        for i, (l, j) in enumerate(fields):
            fd = apply_Y(l, j, lambda p: K(p, cfg), g, step)
            err = np.maximum(err, qabs(fd - exact[:, i]) / scale)
        return err

    steps = [r * 1e-2 / 2 ** k for k in range(4)]
    coarse = [float(np.max(fd_error(s))) for s in steps]
    orders = [math.log2(coarse[k] / coarse[k + 1]) for k in range(3)]
    err = fd_error(r * rel_step)
    rep = _sup_report("gradient_fd", cfg, err, g.coords(), seed,
                      extra={"rel_step": rel_step, "tol": tol, "order": min(orders), "orders": orders,
                             "coarse_errors": coarse})
    rep.passed = bool(rep.sup <= tol and min(orders) >= min_order)
    return rep


def commutator_check(n: int = 2, target: str = "bracket", s0: float = 0.1, halvings: int = 4,
                     seed: int = 0, min_order: float = 2.0) -> BoundReport:
    """Flow-commutator vertical displacement / s^2 against a target, for every (k, j, alpha).

    ``target="bracket"`` compares with [Y_j, Y_k] computed from the coefficient
    fields of the Y's; ``target="literal"`` compares with 2 b^alpha_{kj}.  The
    order is log2 of successive error ratios; an error that is already at
    roundoff level counts as converged.
    """
    if target not in ("bracket", "literal"):
        raise ValueError("target must be 'bracket' or 'literal'")
    rng = np.random.default_rng(seed)
    g = GroupPoint(rng.standard_normal(3), rng.standard_normal(4 * (n - 1)))
    worst, worst_arg, orders = 0.0, None, []
    observed = {}
    for l in range(n - 1):
        for j in range(1, 5):
            for k in range(1, 5):
                want = (lie_bracket(l, j, l, k, n) if target == "bracket"
                        else 2.0 * B_MATRICES[:, k - 1, j - 1])
                errs = []
                for h in range(halvings + 1):
                    s = s0 / 2 ** h
                    out = flow_commutator((l, j), (l, k), s, g)
                    disp = (out.t - g.t) / (s * s)
                    errs.append(float(np.max(np.abs(disp - want))))
                observed[f"{l},{j},{k}"] = disp.tolist()
                for a, b in zip(errs, errs[1:]):
                    orders.append(math.inf if b <= 1e-10 else math.log2(a / b))
                if errs[-1] >= worst:
                    worst, worst_arg = max(worst, errs[-1]), [l, j, k]
    order = min(orders)
    rep = BoundReport(f"commutator_{target}", n, 1.0, 16 * (n - 1), seed, worst, 0.0, worst_arg,
                      bool(worst <= 1e-9 and order >= min_order),
                      {"order": order if math.isfinite(order) else "exact", "displacement_over_s2": observed})
    return rep


# --------------------------------------------------------- lower-bound proof

def a_constant(n: int) -> complex:
    """A = 4/(2i)^n [4n - 1 - i + (-1)^n (i + 1)]."""
    return 4 / (2j) ** n * (4 * n - 1 - 1j + (-1) ** n * (1j + 1))


def s_one_plus_i(n: int, c: float = 1.0) -> complex:
    """s(1 + i) predicted from A: c (2n-2)! i A / 16, as a complex number in the i-slice."""
    return c * math.factorial(2 * n - 2) * 1j * a_constant(n) / 16


def base_point(n: int) -> GroupPoint:
    """g0 = (i / sqrt 2, e_1 / 2^(1/4)), a point of the unit sphere."""
    y = np.zeros(4 * (n - 1))
    y[0] = 2 ** -0.25
    return GroupPoint(np.array([2 ** -0.5, 0.0, 0.0]), y)


@dataclass
class NonvanishingReport:
    g0: GroupPoint
    value: np.ndarray
    norm: float
    s_one_plus_i: np.ndarray
    a_table: dict
    passed: bool
    homogeneity_dev: float = 0.0
    formula_dev: float = 0.0

    def __iter__(self):
        return iter((self.g0, self.value))

    def to_dict(self) -> dict:
        return {"claim": "nonvanishing", "g0": {"t": self.g0.t.tolist(), "y": self.g0.y.tolist()},
                "value": self.value, "norm": self.norm, "s_one_plus_i": self.s_one_plus_i,
                "a_table": self.a_table, "homogeneity_dev": self.homogeneity_dev,
                "formula_dev": self.formula_dev, "pass": self.passed}


def unit_sphere_nonvanishing(cfg: KernelConfig, n_max: int = 10) -> NonvanishingReport:
    g0 = base_point(cfg.n)
    value = K(g0, cfg)
    if qabs(value) <= 1e-10 * abs(cfg.c):
        raise ConsistencyError(f"K(g0) = {value} vanishes numerically")
    nrm = float(hnorm(g0))
    s1i = K(dilate(2 ** 0.25, g0), cfg)
    pred = s_one_plus_i(cfg.n, cfg.c)
    homog = float(_rel_dev(s1i * 2 ** (cfg.Q / 4), value))
    formula = float(_rel_dev(s1i, np.array([pred.real, pred.imag, 0.0, 0.0])))
    table = {}
    for m in range(2, n_max + 1):
        A = a_constant(m)
        direct = s_eval(np.array([1.0, 1.0, 0.0, 0.0]), KernelConfig(m))
        table[str(m)] = {"A": [A.real, A.imag], "abs_A": abs(A), "nonzero": abs(A) > 0,
                         "s_one_plus_i": direct,
                         "formula_rel_dev": float(_rel_dev(direct, np.array([s_one_plus_i(m).real,
                                                                              s_one_plus_i(m).imag, 0, 0])))}
    ok = (abs(nrm - 1) <= 1e-12 and homog <= 1e-12 and formula <= 1e-12
          and all(v["nonzero"] and v["formula_rel_dev"] <= 1e-12 for v in table.values()))
    return NonvanishingReport(g0, value, nrm, s1i, table, bool(ok), homog, formula)


@dataclass
class WitnessResult:
    gstar: GroupPoint
    value: np.ndarray
    rho_dev: np.ndarray
    product_dev: np.ndarray


def lower_bound_witness(g: GroupPoint, R, cfg: KernelConfig) -> WitnessResult:
    """g* = g delta_R(g0^{-1}); checks rho(g, g*) = R and |K(g*^{-1} g)| R^Q = |K(g0)|."""
    R = np.asarray(R, dtype=float)
    if not np.all(R > 0):
        raise ValueError("R must be positive")
    g0 = base_point(cfg.n)
    gstar = group_mul(g, dilate(R, group_inv(g0)))
    value = K(group_mul(group_inv(gstar), g), cfg)
    k0 = qabs(K(g0, cfg))
    return WitnessResult(gstar, value, np.abs(rho(g, gstar) / R - 1), np.abs(qabs(value) * R ** cfg.Q / k0 - 1))


def check_witness(cfg: KernelConfig, samples: int = 1000, seed: int = 0) -> BoundReport:
    """|K(g*^{-1} g)| R^Q against |K(g0)| over random (g, R).

    g has scale lam (log-uniform in [1e-2, 1e2]) and R = lam * nu with nu in
    [0.1, 10]; a much larger ||g|| / R would only measure cancellation in g*^{-1} g.
    """
    d = 4 * cfg.n - 1
    u = _uniform(d + 2, samples, seed)
    lam = _log_uniform(u[:, d], 1e-2, 1e2)
    g = dilate(lam, GroupPoint.from_coords(_normal(u[:, :d])))
    R = lam * _log_uniform(u[:, d + 1], 0.1, 10.0)
    res = lower_bound_witness(g, R, cfg)
    pts = np.hstack([g.coords(), R[:, None]])
    rep = _sup_report("witness", cfg, res.product_dev, pts, seed,
                      extra={"rho_dev": float(np.max(res.rho_dev))})
    rep.passed = bool(rep.sup <= 1e-10 and np.max(res.rho_dev) <= 1e-12)
    return rep


def half_value_radius(cfg: KernelConfig, probes: int = 512, seed: int = 0, iters: int = 40) -> float:
    """Largest eps (bisection, up to 1) with |K(g0 delta_e(w))| > |K(g0)|/2 for sampled w, e <= eps."""
    g0 = base_point(cfg.n)
    k0 = float(qabs(K(g0, cfg)))
    w, _ = _sphere(cfg.n, probes, seed)
    fracs = np.array([0.25, 0.5, 0.75, 1.0])

    def good(eps):
        for f in fracs:
            if np.any(qabs(K(group_mul(g0, dilate(eps * f, w)), cfg)) <= k0 / 2):
                return False
        return True

    if good(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if good(mid) else (lo, mid)
    if lo <= 0:
        raise SearchError("no radius around g0 keeps |K| above half its value")
    return lo


def _unit_ball(n: int, count: int, u: np.ndarray) -> GroupPoint:
    d = 4 * n - 1
    w = sphere_from_normal(_normal(u[:, :d]), n)
    return dilate(np.maximum(u[:, d], 1e-12) ** (1.0 / (4 * n + 2)), w)


def ball_pair_lower_bound(g: GroupPoint, r: float, cfg: KernelConfig, samples: int = 10_000, seed: int = 0,
                          R_factor: float = 0.9) -> BoundReport:
    """inf over g1 in B(g, r), g2 in B(g delta_{Rr}(g0^{-1}), r) of |K(g2^{-1} g1)| rho(g1, g2)^Q.

    R = R_factor / eps0 with eps0 from :func:`half_value_radius`; any factor
    in (1/2, 1) lies in the admissible window (1/(2 eps0), 1/eps0).
    """
    if not r > 0:
        raise ValueError("r must be positive")
    eps0 = half_value_radius(cfg, seed=seed)
    R = R_factor / eps0
    n = cfg.n
    d = 4 * n - 1
    u = _uniform(2 * d + 2, samples, seed)
    b1 = _unit_ball(n, samples, u[:, : d + 1])
    b2 = _unit_ball(n, samples, u[:, d + 1:])
    center2 = group_mul(g, dilate(R * r, group_inv(base_point(n))))
    g1 = group_mul(g, dilate(r, b1))
    g2 = group_mul(center2, dilate(r, b2))
    ratio = qabs(K(group_mul(group_inv(g2), g1), cfg)) * rho(g1, g2) ** cfg.Q
    j = int(np.argmin(ratio))
    rep = _sup_report("ball_pair", cfg, ratio, np.hstack([g1.coords(), g2.coords()]), seed,
                      extra={"eps0": eps0, "R": R, "r": r,
                             "arginf": np.hstack([g1.coords(), g2.coords()])[j].tolist()})
    rep.passed = bool(np.all(np.isfinite(ratio)) and rep.inf > 0)
    return rep


# ------------------------------------------------------------------- suite

CLAIMS = ("form_equivalence", "form_equivalence_exact", "homogeneity", "size_bound", "gradient_fd",
          "gradient_bound", "regularity_ii", "regularity_iii", "mean_value", "commutator", "nonvanishing",
          "witness", "ball_pair")


def run_claim(claim: str, cfg: KernelConfig, seed: int = 0, samples: int | None = None, threads: int = 1) -> dict:
    def ns(default):
        return default if samples is None else samples

    if claim == "form_equivalence":
        rep = check_form_equivalence(cfg, ns(10_000), seed=seed, threads=threads)
    elif claim == "form_equivalence_exact":
        rep = check_form_equivalence_exact(cfg, min(ns(100), 100), seed=seed)
    elif claim == "homogeneity":
        rep = check_homogeneity(cfg, ns(10_000), seed=seed, threads=threads)
    elif claim == "size_bound":
        rep = scan_size_bound(cfg, ns(20_000), seed=seed, threads=threads)
    elif claim == "gradient_fd":
        rep = gradient_fd_check(cfg, min(ns(1000), 1000), seed=seed, threads=threads)
    elif claim == "gradient_bound":
        rep = scan_gradient_bound(cfg, ns(20_000), seed=seed, threads=threads)
    elif claim in ("regularity_ii", "regularity_iii"):
        rep = check_regularity(cfg, samples=ns(20_000), seed=seed, variant=claim.split("_")[1], threads=threads)
    elif claim == "mean_value":
        rep = mean_value_check(cfg, min(ns(4096), 4096), seed=seed, threads=threads)
    elif claim == "commutator":
        rep = commutator_check(cfg.n, "bracket", seed=seed)
    elif claim == "nonvanishing":
        return unit_sphere_nonvanishing(cfg).to_dict()
    elif claim == "witness":
        rep = check_witness(cfg, min(ns(1000), 1000), seed=seed)
    elif claim == "ball_pair":
        g, _ = _random_points(cfg.n, 1, seed)
        rep = ball_pair_lower_bound(g[0], 0.1, cfg, ns(10_000), seed=seed)
    else:
        raise ValueError(f"unknown claim {claim!r}; choose from {', '.join(CLAIMS)}")
    return rep.to_dict()


def verify_all(cfg: KernelConfig, seed: int = 0, samples: int | None = None, threads: int = 1,
               claims=CLAIMS) -> dict:
    reports = [run_claim(c, cfg, seed, samples, threads) for c in claims]
    return {"n": cfg.n, "c": float(cfg.c), "seed": seed, "pass": all(r["pass"] for r in reports),
            "reports": reports}
