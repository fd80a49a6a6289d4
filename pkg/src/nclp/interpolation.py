"""Real interpolation for Hilbertian couples and column/row function spaces.

Contents:

* :class:`HilbertCouple` and the K-functional, both the quadratic surrogate
  ``K_2`` (closed form) and the exact ``K`` (one-dimensional search along
  the curve of optimal decompositions);
* ``(theta, p; K)`` norms by quadrature in ``log t``;
* the operator geometric mean;
* the discretized space ``L_2(l_2; t^-theta)^c_p +_p L_2(l_2; t^(1-theta))^r_p``
  restricted to constant functions (:func:`cq_k_norm`), with its scalar
  constants in closed form;
* the graph decomposition of a subspace of ``X_0 + X_1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special
from scipy.optimize import minimize_scalar

from .errors import ConfigError, DomainError, InvalidExponentError
from .linalg import KERNEL_TOL, as_matrix, check_exponent, conjugate_index, eigh, is_hermitian, psd_power
from .opspace import ExponentTriple, OpVector

KER_SPLIT_TOL = 1e-8
DELTA_FLAG_RANGE = (1e-4, 1e4)


# ---------------------------------------------------------------------------
# couples and K-functional
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HilbertCouple:
    """Two Hilbert norms ``||x||_i^2 = x* G_i x`` on a common space."""

    G0: np.ndarray
    G1: np.ndarray

    def __post_init__(self):
        G0, G1 = as_matrix(self.G0), as_matrix(self.G1)
        if G0.shape != G1.shape or G0.shape[0] != G0.shape[1]:
            raise DomainError("Gram matrices must be square of equal size")
        for G in (G0, G1):
            if not is_hermitian(G):
                raise DomainError("Gram matrices must be Hermitian")
            w = np.linalg.eigvalsh(G)
            if w.min() <= KERNEL_TOL * max(w.max(), 1.0):
                raise DomainError("Gram matrices must be positive definite")
        object.__setattr__(self, "G0", 0.5 * (G0 + G0.conj().T))
        object.__setattr__(self, "G1", 0.5 * (G1 + G1.conj().T))

    @classmethod
    def diagonal(cls, w0, w1) -> "HilbertCouple":
        """Weighted ``l_2`` couple with ``||x||_i = ||w_i x||``."""
        w0 = np.atleast_1d(np.asarray(w0, dtype=float))
        w1 = np.atleast_1d(np.asarray(w1, dtype=float))
        return cls(np.diag(w0 ** 2).astype(complex), np.diag(w1 ** 2).astype(complex))

    @property
    def dim(self) -> int:
        return self.G0.shape[0]

    def norm0(self, x) -> float:
        x = np.asarray(x, dtype=complex)
        return float(np.sqrt(max(np.vdot(x, self.G0 @ x).real, 0.0)))

    def norm1(self, x) -> float:
        x = np.asarray(x, dtype=complex)
        return float(np.sqrt(max(np.vdot(x, self.G1 @ x).real, 0.0)))

    def decomposition(self, x, s: float) -> np.ndarray:
        """``x_0(s) = (G0 + s G1)^-1 s G1 x``, the ``X_0`` part on the optimal curve."""
        x = np.asarray(x, dtype=complex)
        return np.linalg.solve(self.G0 + s * self.G1, s * (self.G1 @ x))

    def breakpoints(self, x) -> tuple[float, float]:
        """``(t_lo, t_hi)``: ``K(t) = t||x||_1`` for ``t <= t_lo``, ``K(t) = ||x||_0`` for ``t >= t_hi``."""
        x = np.asarray(x, dtype=complex)
        n0, n1 = self.norm0(x), self.norm1(x)
        if n0 == 0.0:
            return math.inf, math.inf
        g1x = self.G1 @ x
        g0x = self.G0 @ x
        # dual norms of the subgradients at the two endpoints
        lo = n1 / math.sqrt(np.vdot(g1x, np.linalg.solve(self.G0, g1x)).real)
        hi = math.sqrt(np.vdot(g0x, np.linalg.solve(self.G1, g0x)).real) / n0
        return lo, hi


@dataclass(frozen=True)
class KValue:
    """``K_2`` and the bracket ``[K_2, sqrt(2) K_2]`` containing ``K``; ``exact`` if requested."""

    k2: float
    lower: float
    upper: float
    exact: float | None = None


def _check_t(t: float) -> float:
    t = float(t)
    if not (t > 0) or not math.isfinite(t):
        raise DomainError(f"t must be positive and finite, got {t}")
    return t


def k2_value(c: HilbertCouple, x, t: float) -> float:
    """``K_2(t,x) = (x* (G0^-1 + t^-2 G1^-1)^-1 x)^(1/2)``, evaluated as a parallel sum."""
    t = _check_t(t)
    x = np.asarray(x, dtype=complex)
    tt = t * t
    # (G0^-1 + (t^2 G1)^-1)^-1 = t^2 G1 - t^2 G1 (G0 + t^2 G1)^-1 t^2 G1
    y = tt * (c.G1 @ x)
    val = np.vdot(x, y).real - np.vdot(y, np.linalg.solve(c.G0 + tt * c.G1, y)).real
    return float(math.sqrt(max(val, 0.0)))


def k_exact(c: HilbertCouple, x, t: float, grid: int = 64, tol: float = 1e-12) -> float:
    """Exact ``K(t,x) = inf ||x_0||_0 + t ||x - x_0||_1``.

    Stationarity forces ``G0 x_0 = s G1 x_1`` with ``s >= 0``, so the minimizer
    lies on the curve ``x_0(s)`` (or at an endpoint ``x_0 in {0, x}``). The
    objective is scanned on a log grid in ``s`` and refined by golden section.
    """
    t = _check_t(t)
    x = np.asarray(x, dtype=complex)
    n0, n1 = c.norm0(x), c.norm1(x)
    if n0 == 0.0:
        return 0.0
    lo, hi = c.breakpoints(x)
    if t <= lo:
        return t * n1
    if t >= hi:
        return n0

    def obj(u):
        x0 = c.decomposition(x, math.exp(u))
        return c.norm0(x0) + t * c.norm1(x - x0)

    # the multiplier is s = t ||x_0||_0 / ||x_1||_1
    center = math.log(t * n0 / n1)
    us = np.linspace(center - 40.0, center + 40.0, grid)
    vals = np.array([obj(u) for u in us])
    i = int(np.argmin(vals))
    a, b = us[max(i - 1, 0)], us[min(i + 1, grid - 1)]
    res = minimize_scalar(obj, bracket=None, bounds=(a, b), method="bounded",
                          options={"xatol": tol})
    best = min(vals[i], res.fun, n0, t * n1)
    return float(best)


def k_functional(c: HilbertCouple, x, t: float, exact: bool = False) -> KValue:
    """K-functional of ``x`` at ``t``: the quadratic surrogate with its bracket, optionally exact ``K``."""
    k2 = k2_value(c, x, t)
    ex = k_exact(c, x, t) if exact else None
    return KValue(k2, k2, math.sqrt(2.0) * k2, ex)


# ---------------------------------------------------------------------------
# quadrature in log t
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridConfig:
    """Log-spaced grid ``t_min .. t_max`` with ``n`` points."""

    t_min: float = 1e-8
    t_max: float = 1e8
    n: int = 4001

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max) or not math.isfinite(self.t_max):
            raise ConfigError(f"grid needs 0 < t_min < t_max < inf, got [{self.t_min}, {self.t_max}]")
        if int(self.n) != self.n or self.n < 3:
            raise ConfigError(f"grid needs at least 3 points, got {self.n}")

    def points(self) -> np.ndarray:
        return np.logspace(math.log10(self.t_min), math.log10(self.t_max), int(self.n))

    def log_weights(self) -> np.ndarray:
        """Trapezoid weights for ``dt/t`` on :meth:`points`."""
        h = (math.log(self.t_max) - math.log(self.t_min)) / (self.n - 1)
        w = np.full(int(self.n), h)
        w[0] = w[-1] = 0.5 * h
        return w


def _loglinear_segments(u: np.ndarray, F: np.ndarray) -> float:
    """``int exp(...)`` over ``u`` with ``log F`` interpolated linearly on each cell.

    Exact for piecewise power laws in ``t``; second order otherwise.
    """
    h = np.diff(u)
    a, b = F[:-1], F[1:]
    out = np.empty_like(h)
    pos = (a > 0) & (b > 0)
    la, lb = np.log(np.where(pos, a, 1.0)), np.log(np.where(pos, b, 1.0))
    d = lb - la
    small = np.abs(d) < 1e-8
    out[:] = 0.5 * h * (a + b)
    sel = pos & ~small
    out[sel] = h[sel] * (b[sel] - a[sel]) / d[sel]
    sel = pos & small
    out[sel] = h[sel] * a[sel] * (1.0 + 0.5 * d[sel] + d[sel] ** 2 / 6.0)
    return float(np.sum(out))


def _integrate_log(u: np.ndarray, F: np.ndarray, rule: str) -> float:
    if u.size < 2:
        return 0.0
    if rule == "trapezoid":
        return float(np.sum(0.5 * np.diff(u) * (F[:-1] + F[1:])))
    if rule == "loglinear":
        return _loglinear_segments(u, F)
    if rule == "simpson":
        return float(scipy.integrate.simpson(F, x=u))
    raise ConfigError(f"unknown quadrature rule {rule!r}")


def real_interp_norm(
    c: HilbertCouple,
    x,
    theta: float,
    p: float,
    grid: GridConfig | None = None,
    method: str = "exact",
    rule: str = "simpson",
    min_inner: int = 257,
) -> float:
    """``(theta, p; K)`` norm ``(int_0^inf (t^-theta K(t,x))^p dt/t)^(1/p)``.

    ``method="exact"`` uses the true ``K``: it equals ``t ||x||_1`` below
    ``t_lo`` and ``||x||_0`` above ``t_hi`` (see
    :meth:`HilbertCouple.breakpoints`), where the integral is done in
    closed form; only ``[t_lo, t_hi]`` intersected with the grid is handled
    by quadrature. ``method="quadratic"`` integrates ``K_2`` over the grid
    and adds power-law tails beyond it.

    With ``rule="simpson"`` the interval ``[t_lo, t_hi]`` gets its own
    uniform grid in ``log t`` (at least ``min_inner`` points, and at least
    the density of ``grid``); ``K`` is smooth there, so the error is fourth
    order. ``"loglinear"`` (exact for power laws) and ``"trapezoid"`` use the
    points of ``grid`` that fall inside the interval.
    """
    if not (0 < theta < 1):
        raise InvalidExponentError(f"theta must lie in (0, 1), got {theta}")
    p = check_exponent(p)
    if math.isinf(p):
        raise InvalidExponentError("real_interp_norm needs p < inf")
    grid = grid or GridConfig()
    x = np.asarray(x, dtype=complex)
    n0, n1 = c.norm0(x), c.norm1(x)
    if n0 == 0.0:
        return 0.0
    ts = grid.points()
    alpha, beta = (1.0 - theta) * p, theta * p

    if method == "quadratic":
        F = np.array([(t ** -theta * k2_value(c, x, t)) ** p for t in ts])
        total = _integrate_log(np.log(ts), F, rule)
        # K_2(t) ~ t||x||_1 near 0 and ~ ||x||_0 near infinity
        total += (ts[0] ** -theta * k2_value(c, x, ts[0])) ** p / alpha
        total += (ts[-1] ** -theta * k2_value(c, x, ts[-1])) ** p / beta
        return float(total ** (1.0 / p))
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")

    lo, hi = c.breakpoints(x)
    total = n1 ** p * lo ** alpha / alpha + n0 ** p * hi ** -beta / beta
    if hi > lo * (1.0 + 1e-14):
        if rule == "simpson":
            h = (math.log(grid.t_max) - math.log(grid.t_min)) / (grid.n - 1)
            count = max(min_inner, int(math.ceil(math.log(hi / lo) / h)) + 1)
            pts = np.exp(np.linspace(math.log(lo), math.log(hi), count | 1))
        else:
            a, b = max(lo, grid.t_min), min(hi, grid.t_max)
            inner = ts[(ts > a) & (ts < b)]
            pts = np.concatenate([[lo], inner, [hi]])
        F = np.array([(t ** -theta * k_exact(c, x, t)) ** p for t in pts])
        total += _integrate_log(np.log(pts), F, rule)
    return float(total ** (1.0 / p))


def real_interp_norm_1d(w0: float, w1: float, theta: float, p: float) -> float:
    """Closed form of :func:`real_interp_norm` for the couple ``(w0^2, w1^2)`` and ``|x| = 1``."""
    return w0 ** (1 - theta) * w1 ** theta * (1.0 / (p * theta) + 1.0 / (p * (1.0 - theta))) ** (1.0 / p)


# ---------------------------------------------------------------------------
# geometric mean
# ---------------------------------------------------------------------------

def geometric_mean(G0, G1, theta: float) -> np.ndarray:
    """Weighted geometric mean ``G0^(1/2) (G0^(-1/2) G1 G0^(-1/2))^theta G0^(1/2)``."""
    if not (0 <= theta <= 1):
        raise InvalidExponentError(f"theta must lie in [0, 1], got {theta}")
    G0, G1 = as_matrix(G0), as_matrix(G1)
    for G in (G0, G1):
        w = eigh(G).eigenvalues
        if w.min() <= KERNEL_TOL * max(abs(w).max(), 1e-300):
            raise DomainError("geometric_mean needs positive definite arguments")
    h = psd_power(G0, 0.5)
    hi = psd_power(G0, -0.5)
    M = hi @ G1 @ hi
    out = h @ psd_power(0.5 * (M + M.conj().T), theta) @ h
    return 0.5 * (out + out.conj().T)


# ---------------------------------------------------------------------------
# scalar constants of the K- and J-spaces
# ---------------------------------------------------------------------------

def _min_power_pair(a: float, alpha: float, b: float, beta: float) -> tuple[float, float]:
    """Minimum of ``a u^alpha + b u^-beta`` over ``u > 0`` and the minimizer."""
    u = (beta * b / (alpha * a)) ** (1.0 / (alpha + beta))
    return a * u ** alpha * (1.0 + alpha / beta), u


def scalar_k_constant(theta: float, p: float) -> float:
    """Norm of the constant function ``1`` in ``L_2(t^-theta) +_p L_2(t^(1-theta))``.

    The optimal split is ``f = mu t^2 / (1 + mu t^2)``, which gives
    ``||f||^2 = mu^theta G(2-theta) G(theta) / 2`` and
    ``||1 - f||^2 = mu^(theta-1) G(1-theta) G(1+theta) / 2``; the remaining
    minimization over ``mu`` is explicit.
    """
    g = scipy.special.gamma
    IA = 0.5 * g(2 - theta) * g(theta)
    IB = 0.5 * g(1 - theta) * g(1 + theta)
    if math.isinf(p):
        # max of the two norms: balance mu^theta IA = mu^(theta-1) IB
        return float(math.sqrt(IA ** (1 - theta) * IB ** theta))
    val, _ = _min_power_pair(IA ** (p / 2), theta * p / 2, IB ** (p / 2), (1 - theta) * p / 2)
    return float(val ** (1.0 / p))


def scalar_j_constant(theta: float, p: float) -> float:
    """Quotient norm of ``1`` in ``L_2(t^-theta) cap_p L_2(t^(1-theta))`` modulo mean-zero functions.

    Lagrange conditions give ``f = kappa t^(2 theta) / (1 + nu t^2)``; with
    ``M = int f dt/t = 1`` the two squared norms are Beta integrals in ``nu``.
    """
    g = scipy.special.gamma
    Im = 0.5 * g(theta) * g(1 - theta)            # int t^(2th)/(1+nu t^2) dt/t  * nu^th
    IA = 0.5 * g(theta) * g(2 - theta)            # int t^(2th)/(1+nu t^2)^2 dt/t * nu^th
    IB = 0.5 * g(1 + theta) * g(1 - theta)        # int t^(2+2th)/(1+nu t^2)^2 dt/t * nu^(1+th)
    # kappa = nu^theta / Im; A = kappa^2 nu^theta IA, B = kappa^2 nu^(theta-1) IB
    if math.isinf(p):
        return float(math.sqrt((IA / Im ** 2) ** (1 - theta) * (IB / Im ** 2) ** theta))
    a = (IA / Im ** 2) ** (p / 2)
    b = (IB / Im ** 2) ** (p / 2)
    val, _ = _min_power_pair(a, theta * p / 2, b, (1 - theta) * p / 2)
    return float(val ** (1.0 / p))


def j_constant_via_duality(theta: float, p: float) -> float:
    """Scalar J-constant from ``[C_J(theta, p)]* = C_K(1-theta, p')``."""
    return 1.0 / scalar_k_constant(1.0 - theta, conjugate_index(p))


# ---------------------------------------------------------------------------
# discretized C_{theta,p;K}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KSpaceConfig:
    """Grid and solver settings for :func:`cq_k_norm`."""

    grid: GridConfig = field(default_factory=lambda: GridConfig(1e-6, 1e6, 241))
    max_iter: int = 20000
    rel_tol: float = 1e-13
    eps: float = 1e-14


@dataclass(frozen=True)
class KGridWeights:
    """Per-point weights ``a_j = w_j t_j^-2theta`` (column) and ``b_j = w_j t_j^(2-2theta)`` (row).

    ``tail_c`` and ``tail_r`` integrate the weights beyond the grid, where
    the split is fixed to ``f = x`` above ``t_max`` and ``f = 0`` below ``t_min``.
    """

    a: np.ndarray
    b: np.ndarray
    tail_c: float
    tail_r: float

    @classmethod
    def build(cls, grid: GridConfig, theta: float) -> "KGridWeights":
        t = grid.points()
        w = grid.log_weights()
        a = w * t ** (-2 * theta)
        b = w * t ** (2 - 2 * theta)
        tail_c = grid.t_max ** (-2 * theta) / (2 * theta)
        tail_r = grid.t_min ** (2 - 2 * theta) / (2 - 2 * theta)
        return cls(a, b, tail_c, tail_r)


def scalar_k_constant_grid(theta: float, p: float, grid: GridConfig) -> float:
    """Discrete analogue of :func:`scalar_k_constant` on ``grid``.

    At the optimum ``f_j = mu b_j / (a_j + mu b_j)`` for one multiplier
    ``mu``, so a bounded 1-d search over ``log mu`` solves the problem.
    """
    W = KGridWeights.build(grid, theta)

    def obj(lm):
        mu = math.exp(lm)
        f = mu * W.b / (W.a + mu * W.b)
        A = np.sum(W.a * f ** 2) + W.tail_c
        B = np.sum(W.b * (1 - f) ** 2) + W.tail_r
        return A ** (p / 2) + B ** (p / 2)

    span = 2.0 * (math.log(grid.t_max) - math.log(grid.t_min))
    lms = np.linspace(-span, span, 401)
    vals = np.array([obj(v) for v in lms])
    i = int(np.argmin(vals))
    res = minimize_scalar(obj, bounds=(lms[max(i - 1, 0)], lms[min(i + 1, 400)]),
                          method="bounded", options={"xatol": 1e-12})
    return float(min(res.fun, vals[i]) ** (1.0 / p))


def grid_slack(theta: float, p: float, grid: GridConfig) -> float:
    """Relative discretization error of the scalar constant on ``grid``."""
    return abs(scalar_k_constant_grid(theta, p, grid) / scalar_k_constant(theta, p) - 1.0)


@dataclass(frozen=True)
class CqKResult:
    """Normalized value (scalar constant divided out), raw value and the grid slack."""

    value: float
    raw: float
    constant: float
    eps_grid: float
    iterations: int
    converged: bool

    def __float__(self) -> float:
        return self.value


def _parts(F, xs, W: KGridWeights):
    """Column and row Gram matrices ``C``, ``R`` of the split ``f``, ``g = x - f``."""
    G = xs[None] - F
    C = np.einsum("j,jkab,jkac->bc", W.a, F.conj(), F) + W.tail_c * np.einsum("kab,kac->bc", xs.conj(), xs)
    R = np.einsum("j,jkab,jkcb->ac", W.b, G, G.conj()) + W.tail_r * np.einsum("kab,kcb->ac", xs, xs.conj())
    return 0.5 * (C + C.conj().T), 0.5 * (R + R.conj().T)


def _trace_power(M: np.ndarray, s: float) -> float:
    w = np.clip(np.linalg.eigvalsh(M), 0.0, None)
    return float(np.sum(w ** s))


def cq_k_norm(xs: OpVector, e: ExponentTriple, cfg: KSpaceConfig | None = None) -> CqKResult:
    """Norm of the constant tuple ``xs`` in the discretized ``C_{theta,p;K}``, ``1 <= p <= 2``.

    Minimizes ``Tr C^(p/2) + Tr R^(p/2)`` over grid splits ``x = f_j + g_j``
    where ``C = sum_j a_j sum_k f_jk* f_jk`` and ``R = sum_j b_j sum_k g_jk g_jk*``.
    Both terms are concave functions of the Gram matrices, so linearizing them
    gives a majorizer whose minimizer solves one Sylvester equation per grid
    point and block; in the eigenbases of the weights these are entrywise.
    The value is divided by the scalar constant on the same grid, so that
    ``m = 1`` tuples get their ``l_2`` norm.
    """
    cfg = cfg or KSpaceConfig()
    p, theta = e.p, e.theta
    if not (1 <= p <= 2):
        raise ConfigError("cq_k_norm is implemented for 1 <= p <= 2; use duality for p > 2")
    W = KGridWeights.build(cfg.grid, theta)
    const = scalar_k_constant_grid(theta, p, cfg.grid)
    eps_grid = abs(const / scalar_k_constant(theta, p) - 1.0)
    X = np.asarray(xs.blocks, dtype=complex)
    scale = float(np.max(np.abs(X), initial=0.0))
    if scale == 0.0:
        return CqKResult(0.0, 0.0, const, eps_grid, 0, True)
    X = X / scale
    m_rows, m_cols = X.shape[1], X.shape[2]

    # start from the scalar optimum applied blockwise
    mu = _scalar_multiplier(W, p)
    prof = mu * W.b / (W.a + mu * W.b)
    F = prof[:, None, None, None] * X[None]
    eps_c = cfg.eps * np.eye(m_cols)
    eps_r = cfg.eps * np.eye(m_rows)
    s = p / 2.0
    prev = math.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        C, R = _parts(F, X, W)
        val = _trace_power(C, s) + _trace_power(R, s)
        if abs(prev - val) <= cfg.rel_tol * val:
            converged = True
            break
        prev = val
        gam, U = np.linalg.eigh(C + eps_c)
        rho, V = np.linalg.eigh(R + eps_r)
        gam = np.clip(gam, cfg.eps, None) ** (s - 1.0)
        rho = np.clip(rho, cfg.eps, None) ** (s - 1.0)
        Xt = np.einsum("ai,kab,bl->kil", V.conj(), X, U)
        num = W.b[:, None, None] * rho[None, :, None]
        den = W.a[:, None, None] * gam[None, None, :] + num
        Ft = (num / den)[:, None] * Xt[None]
        F = np.einsum("ia,jkab,lb->jkil", V, Ft, U.conj())
    C, R = _parts(F, X, W)
    raw = scale * (_trace_power(C, s) + _trace_power(R, s)) ** (1.0 / p)
    return CqKResult(raw / const, raw, const, eps_grid, it, converged)


def _scalar_multiplier(W: KGridWeights, p: float) -> float:
    def obj(lm):
        mu = math.exp(lm)
        f = mu * W.b / (W.a + mu * W.b)
        return (np.sum(W.a * f ** 2) + W.tail_c) ** (p / 2) + (np.sum(W.b * (1 - f) ** 2) + W.tail_r) ** (p / 2)

    lms = np.linspace(-80, 80, 321)
    i = int(np.argmin([obj(v) for v in lms]))
    res = minimize_scalar(obj, bounds=(lms[max(i - 1, 0)], lms[min(i + 1, 320)]), method="bounded")
    return math.exp(res.x)


def ratio_bracket(p: float, eps_grid: float) -> tuple[float, float]:
    """Interval ``[2^-|1-2/p| / (1+eps), 2^|1-2/p| (1+eps)]`` for normalized K-norm ratios."""
    c = 2.0 ** abs(1.0 - 2.0 / p)
    return 1.0 / (c * (1.0 + eps_grid)), c * (1.0 + eps_grid)


# ---------------------------------------------------------------------------
# graph decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubspaceSpec:
    """Columns of ``basis`` span ``Y`` inside ``X_0 + X_1`` (first ``d0`` coordinates are ``X_0``)."""

    d0: int
    d1: int
    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis)
        if B.ndim != 2 or B.shape[0] != self.d0 + self.d1:
            raise DomainError(f"basis must have {self.d0 + self.d1} rows")
        if B.shape[1] == 0:
            raise DomainError("basis is empty")
        s = np.linalg.svd(B, compute_uv=False)
        if s.min() <= 1e-10:
            raise DomainError(f"basis is ill-conditioned (smallest singular value {s.min():.3e})")
        object.__setattr__(self, "basis", B.astype(complex))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class GraphDecomposition:
    """``Y = (Y0 + 0) + (0 + Y1) + graph of Delta: Z0 -> Z1`` with ``Delta z0_k = delta_k z1_k``.

    Bases are orthonormal columns in ``X_0`` (``Y0``, ``Z0``) or ``X_1``
    (``Y1``, ``Z1``); ``Y_coords`` holds the orthonormal basis of ``Y`` used
    to express ``A``.
    """

    d0: int
    d1: int
    Y0_basis: np.ndarray
    Y1_basis: np.ndarray
    Z0_basis: np.ndarray
    Z1_basis: np.ndarray
    delta: np.ndarray
    A_eigenvalues: np.ndarray
    Y_basis: np.ndarray
    Y0_coords: np.ndarray
    Y1_coords: np.ndarray
    flags: tuple = ()

    def reconstruct(self) -> np.ndarray:
        """Orthonormal basis of ``span(Y0 + 0, 0 + Y1, (z0_k, delta_k z1_k))``."""
        d0, d1 = self.d0, self.d1
        cols = []
        for y in self.Y0_basis.T:
            cols.append(np.concatenate([y, np.zeros(d1)]))
        for y in self.Y1_basis.T:
            cols.append(np.concatenate([np.zeros(d0), y]))
        for z0, z1, dk in zip(self.Z0_basis.T, self.Z1_basis.T, self.delta):
            cols.append(np.concatenate([z0, dk * z1]))
        M = np.array(cols, dtype=complex).T.reshape(d0 + d1, -1)
        return scipy.linalg.orth(M)

    def projections(self) -> tuple[np.ndarray, np.ndarray]:
        """``R_0``, ``R_1``: orthogonal projections of ``Y`` onto ``Y_0``, ``Y_1`` in ``Y``-coordinates."""
        return self.Y0_coords @ self.Y0_coords.conj().T, self.Y1_coords @ self.Y1_coords.conj().T

    def to_json(self) -> str:
        def enc(M):
            M = np.asarray(M)
            cols = [list(c) for c in M.T]
            if np.all(np.abs(M.imag) <= 1e-15):
                return [[float(v.real) for v in c] for c in cols]
            return [[[float(v.real), float(v.imag)] for v in c] for c in cols]

        return json.dumps({
            "d0": self.d0, "d1": self.d1,
            "Y0_basis": enc(self.Y0_basis), "Y1_basis": enc(self.Y1_basis),
            "Z0_basis": enc(self.Z0_basis), "Z1_basis": enc(self.Z1_basis),
            "delta": [float(v) for v in self.delta],
            "A_eigenvalues": [float(v) for v in self.A_eigenvalues],
            "flags": list(self.flags),
        }, indent=2, sort_keys=True)


def graph_decompose(spec: SubspaceSpec, tol: float = KER_SPLIT_TOL) -> GraphDecomposition:
    """Split ``Y`` into its ``X_0`` part, its ``X_1`` part and a graph.

    With ``V`` an orthonormal basis of ``Y``, ``A = V_0* V_0`` represents
    ``<x, A y> = <P_0 x, P_0 y>``. Eigenvalues ``a <= tol`` span ``Y_1``,
    ``a >= 1 - tol`` span ``Y_0``, and each remaining eigenvector ``v`` gives
    ``z0 = P_0 v / sqrt(a)``, ``z1 = P_1 v / sqrt(1 - a)`` and
    ``delta = sqrt((1 - a) / a)``. Interior eigenvalues are never rounded;
    ``delta`` outside ``[1e-4, 1e4]`` is flagged.
    """
    d0, d1 = spec.d0, spec.d1
    V = scipy.linalg.orth(spec.basis)
    V0 = V[:d0]
    A = V0.conj().T @ V0
    a, E = np.linalg.eigh(0.5 * (A + A.conj().T))
    a = np.clip(a, 0.0, 1.0)
    low, high = a <= tol, a >= 1.0 - tol
    mid = ~(low | high)
    W = V @ E
    Y0 = W[:d0, high]
    Y1 = W[d0:, low]
    am = a[mid]
    Z0 = W[:d0, mid] / np.sqrt(am)
    Z1 = W[d0:, mid] / np.sqrt(1.0 - am)
    delta = np.sqrt((1.0 - am) / am)
    order = np.argsort(delta, kind="stable")
    delta, Z0, Z1 = delta[order], Z0[:, order], Z1[:, order]
    flags = []
    if delta.size and (delta.min() < DELTA_FLAG_RANGE[0] or delta.max() > DELTA_FLAG_RANGE[1]):
        flags.append("extreme_delta")
    return GraphDecomposition(d0, d1, Y0, Y1, Z0, Z1, delta, a, V, E[:, high], E[:, low], tuple(flags))


def principal_angle_error(U: np.ndarray, V: np.ndarray) -> float:
    """Largest principal angle between two column spans (``pi/2`` if dimensions differ)."""
    if U.shape[1] != V.shape[1]:
        return math.pi / 2
    if U.shape[1] == 0:
        return 0.0
    return float(np.max(scipy.linalg.subspace_angles(U, V)))


def amplified_norm(R: np.ndarray, m: int) -> float:
    """Operator norm of ``I_m (x) R``."""
    return float(np.linalg.norm(np.kron(np.eye(m), R), 2))


def lambda_of_delta(delta, p: float):
    """Weights with ``delta = lambda^(1/2 - 1/p)``: ``lambda = delta^(1 / (1/2 - 1/p))``."""
    p = check_exponent(p)
    expo = 0.5 - 1.0 / p
    if expo == 0.0:
        raise InvalidExponentError("lambda_of_delta is undefined at p = 2")
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise DomainError("delta must be positive")
    return delta ** (1.0 / expo)
