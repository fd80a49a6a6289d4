"""Operator-space norms of finite tuples ``x = sum_k x_k (x) e_k``.

A tuple of equal-size matrices is an :class:`OpVector`. The norms implemented
here are

* ``column_norm``:  ``||(sum x_k* x_k)^(1/2)||_p``           (``S_p[C_p]``)
* ``weighted_row_norm``: ``||(sum lam_k^(1-2/p) x_k x_k*)^(1/2)||_p``
* ``intersection_norm``: max of the two, for ``p >= 2``
* ``sum_norm``: inf over ``x = a + b`` of column(a) + weighted_row(b), ``p < 2``
* ``spcq_norm``: the ``S_p[C_q]`` norm, ``p >= 2``, as a supremum over
  positive ``alpha``, ``beta`` in Schatten unit balls
* ``spcq_factorization_norm``: the ``S_p[C_q]`` norm for ``p < 2`` through the
  dual factorization ``x_k = alpha z_k beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, InvalidExponentError
from .linalg import (
    check_exponent,
    conjugate_index,
    eigh,
    schatten_from_singular_values,
    schatten_norm,
)


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


@dataclass(frozen=True)
class ExponentTriple:
    """Exponents ``(p, q, theta)`` tied by ``1/q = (1-theta)/p + theta/p'``.

    ``r`` is the conjugate index of ``p/2`` (only meaningful for ``p >= 2``).
    """

    p: float
    theta: float

    def __post_init__(self):
        p = check_exponent(self.p)
        object.__setattr__(self, "p", p)
        if not (0.0 <= self.theta <= 1.0):
            raise InvalidExponentError(f"theta must lie in [0, 1], got {self.theta}")

    @classmethod
    def from_pq(cls, p: float, q: float) -> "ExponentTriple":
        p = check_exponent(p)
        q = check_exponent(q)
        span = _inv(p) - _inv(conjugate_index(p))
        if span == 0.0:
            raise InvalidExponentError("theta is undetermined at p = 2")
        theta = (_inv(p) - _inv(q)) / span
        if not (-1e-12 <= theta <= 1 + 1e-12):
            raise InvalidExponentError(f"q={q} is not between p={p} and its conjugate")
        return cls(p, min(max(theta, 0.0), 1.0))

    @property
    def p_conj(self) -> float:
        return conjugate_index(self.p)

    @property
    def q(self) -> float:
        inv_q = (1 - self.theta) * _inv(self.p) + self.theta * _inv(self.p_conj)
        return math.inf if inv_q == 0 else 1.0 / inv_q

    @property
    def r(self) -> float:
        if self.p < 2:
            raise InvalidExponentError("r = (p/2)' needs p >= 2")
        return conjugate_index(self.p / 2)

    def dual(self) -> "ExponentTriple":
        """Triple for the dual space: ``S_p[C_q]* = S_{p'}[C_{q'}]`` with the same theta."""
        return ExponentTriple(self.p_conj, self.theta)

    def check(self, tol: float = 1e-12) -> None:
        lhs = _inv(self.q)
        rhs = (1 - self.theta) * _inv(self.p) + self.theta * _inv(self.p_conj)
        if abs(lhs - rhs) > tol:
            raise InvalidExponentError("exponent relation violated")
        lo, hi = sorted((self.p, self.p_conj))
        # strict in exact arithmetic; q rounds onto an endpoint as theta -> 0 or 1
        if lo != hi and 0 < self.theta < 1 and not (lo * (1 - tol) <= self.q <= hi * (1 + tol)):
            raise InvalidExponentError("q must lie between p and p'")


@dataclass(frozen=True)
class OpVector:
    """Tuple ``(x_1, ..., x_n)`` of equal-shape matrices with positive weights."""

    blocks: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        blocks = np.asarray(self.blocks, dtype=complex)
        if blocks.ndim == 2:
            blocks = blocks[None]
        if blocks.ndim != 3:
            raise DomainError(f"blocks must have shape (n, rows, cols), got {blocks.shape}")
        if not np.all(np.isfinite(blocks)):
            raise DomainError("blocks contain non-finite entries")
        n = blocks.shape[0]
        w = np.ones(n) if self.weights is None else np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape != (n,):
            raise DomainError(f"need {n} weights, got {w.shape[0]}")
        if np.any(~(w > 0)) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be positive and finite")
        blocks.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "weights", w)

    @classmethod
    def of(cls, blocks, weights=None) -> "OpVector":
        if isinstance(blocks, (list, tuple)):
            blocks = np.stack([np.atleast_2d(np.asarray(b, dtype=complex)) for b in blocks])
        return cls(blocks, weights)

    @classmethod
    def scalars(cls, values, weights=None) -> "OpVector":
        v = np.asarray(values, dtype=complex).reshape(-1, 1, 1)
        return cls(v, weights)

    @property
    def n(self) -> int:
        return self.blocks.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.blocks.shape[1:]

    def scaled(self, c: complex) -> "OpVector":
        return OpVector(self.blocks * c, self.weights)

    def permuted(self, perm) -> "OpVector":
        perm = np.asarray(perm)
        return OpVector(self.blocks[perm], self.weights[perm])

    def with_blocks(self, blocks) -> "OpVector":
        return OpVector(blocks, self.weights)

    def column_matrix(self) -> np.ndarray:
        """Vertical block stack, shape ``(n * rows, cols)``."""
        n, r, c = self.blocks.shape
        return self.blocks.reshape(n * r, c)

    def row_matrix(self, coeffs=None) -> np.ndarray:
        """Horizontal block stack of ``coeffs_k * x_k``, shape ``(rows, n * cols)``."""
        b = self.blocks if coeffs is None else self.blocks * np.asarray(coeffs)[:, None, None]
        n, r, c = b.shape
        return b.transpose(1, 0, 2).reshape(r, n * c)


# ---------------------------------------------------------------------------
# column / row / intersection
# ---------------------------------------------------------------------------

def row_coefficients(weights: np.ndarray, p: float) -> np.ndarray:
    """``lam_k^((1 - 2/p)/2)``, the factor multiplying ``x_k`` in the row norm."""
    expo = 0.5 * (1.0 - 2.0 * _inv(p))
    coeffs = np.asarray(weights, dtype=float) ** expo
    # at p = 2 the weights drop out exactly (lam^0 = 1)
    assert p != 2 or np.all(coeffs == 1.0)
    return coeffs


def column_norm(xs: OpVector, p: float) -> float:
    return schatten_norm(xs.column_matrix(), p)


def weighted_row_norm(xs: OpVector, p: float) -> float:
    p = check_exponent(p)
    return schatten_norm(xs.row_matrix(row_coefficients(xs.weights, p)), p)


def intersection_norm(xs: OpVector, p: float) -> float:
    p = check_exponent(p)
    if p < 2:
        raise InvalidExponentError("intersection_norm is defined for p >= 2")
    return max(column_norm(xs, p), weighted_row_norm(xs, p))


def dual_intersection_norm(ys: OpVector, p: float) -> float:
    """Norm dual to the sum norm at ``p``: intersection structure at ``p'``.

    The weights enter with the exponent of ``p'``, which inverts the row
    coefficients used at ``p``; no ``p >= 2`` restriction applies here.
    """
    pc = conjugate_index(check_exponent(p))
    return max(column_norm(ys, pc), weighted_row_norm(ys, pc))


# ---------------------------------------------------------------------------
# S_p[C_q], p >= 2: supremum over alpha, beta
# ---------------------------------------------------------------------------

def spcq_eval(xs: OpVector, alpha, beta) -> float:
    """``(sum_k ||alpha x_k beta||_2^2)^(1/2)``."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_2d(np.asarray(beta, dtype=complex))
    rows, cols = xs.shape
    if alpha.shape != (rows, rows) or beta.shape != (cols, cols):
        raise DomainError("alpha/beta sizes do not match the blocks")
    prod = alpha[None] @ xs.blocks @ beta[None]
    return float(np.sqrt(np.sum(np.abs(prod) ** 2)))


def _psd_schatten(eigs: np.ndarray, s: float) -> float:
    return schatten_from_singular_values(np.clip(eigs, 0.0, None), s)


def _best_positive(M: np.ndarray, s: float) -> tuple[np.ndarray, float]:
    """Maximise ``Tr(P M)`` over positive ``P`` in the unit ball of ``S_s``.

    Returns the maximiser and the maximum ``||M||_{s'}``.
    """
    dec = eigh(M)
    lam = np.clip(dec.eigenvalues, 0.0, None)
    U = dec.eigenvectors
    sc = conjugate_index(s)
    top = lam.max(initial=0.0)
    if top == 0.0:
        return _unit_identity(M.shape[0], s), 0.0
    if math.isinf(s):
        return np.eye(M.shape[0], dtype=complex), float(lam.sum())
    if math.isinf(sc):
        i = int(np.argmax(lam))
        return np.outer(U[:, i], U[:, i].conj()), float(top)
    v = (lam / top) ** (sc - 1.0)
    v = v / _psd_schatten(v, s)
    return (U * v) @ U.conj().T, _psd_schatten(lam, sc)


def _psd_sqrt(P: np.ndarray) -> np.ndarray:
    dec = eigh(P)
    return dec.apply(lambda w: np.sqrt(np.clip(w, 0.0, None)))


@dataclass(frozen=True)
class SpcqResult:
    value: float
    alpha: np.ndarray
    beta: np.ndarray
    restart: int
    iterations: int

    def __iter__(self):
        # lets callers write ``value, (alpha, beta) = spcq_norm(...)``
        yield self.value
        yield (self.alpha, self.beta)


def _spcq_exponents(e: ExponentTriple) -> tuple[float, float]:
    """Schatten exponents of ``alpha**2`` and ``beta**2``: ``r/theta`` and ``r/(1-theta)``."""
    r = e.r
    sa = math.inf if e.theta == 0 else r / e.theta
    sb = math.inf if e.theta == 1 else r / (1.0 - e.theta)
    return sa, sb


def _holder_warm_start(x: np.ndarray, e: ExponentTriple) -> tuple[np.ndarray, np.ndarray]:
    """Positive ``A = alpha^2``, ``B = beta^2`` attaining Hölder equality for one block.

    With ``x = U S V*`` take ``A ~ U S^(p/sa) U*`` and ``B ~ V S^(p/sb) V*``;
    then ``alpha x beta ~ U S^(p/2) V*`` and the functional equals ``||x||_p``.
    """
    sa, sb = _spcq_exponents(e)
    rows, cols = x.shape
    U, s, Vh = np.linalg.svd(x)
    if s.size == 0 or s[0] == 0.0:
        return _unit_identity(rows, sa), _unit_identity(cols, sb)
    if math.isinf(e.p):
        return np.outer(U[:, 0], U[:, 0].conj()), np.outer(Vh[0].conj(), Vh[0])

    def side(basis, dim, sch):
        if math.isinf(sch):
            return np.eye(dim, dtype=complex)
        vals = np.zeros(dim)
        vals[: s.size] = (s / s[0]) ** (e.p / sch)
        return (basis * (vals / _psd_schatten(vals, sch))) @ basis.conj().T

    return side(U, rows, sa), side(Vh.conj().T, cols, sb)


def _unit_identity(dim: int, s: float) -> np.ndarray:
    return np.eye(dim, dtype=complex) / _psd_schatten(np.ones(dim), s)


def _random_positive_unit(dim: int, s: float, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    P = Z @ Z.conj().T
    return P / _psd_schatten(np.linalg.eigvalsh(P), s)


def spcq_norm(
    xs: OpVector,
    e: ExponentTriple,
    restarts: int = 16,
    iters: int = 200,
    seed: int = 0,
    tol: float = 1e-14,
    init: np.ndarray | None = None,
) -> SpcqResult:
    """Certified lower bound for ``||sum x_k (x) e_k||_{S_p[C_q]}``, ``p >= 2``.

    The supremum of ``(sum ||alpha x_k beta||_2^2)^(1/2)`` is approached by
    alternating maximisation on ``A = alpha^2`` and ``B = beta^2``: for fixed
    ``A`` the problem is linear in ``B`` over a Schatten ball and has a closed
    form solution, and vice versa. Starting points are the Hölder equality
    pair of the largest block plus ``restarts - 1`` random positive matrices;
    ``init`` (a starting ``A = alpha^2``) adds one more start.
    The returned value is the functional evaluated exactly at the returned
    unit-norm witnesses.
    """
    if e.p < 2:
        raise InvalidExponentError("the supremum formula needs p >= 2")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rows, cols = xs.shape
    sa, sb = _spcq_exponents(e)
    rng = np.random.default_rng(seed)
    X = xs.blocks
    Xh = X.conj().transpose(0, 2, 1)

    def update_B(A):
        return _best_positive(np.einsum("kij,jl,klm->im", Xh, A, X), sb)

    def update_A(B):
        return _best_positive(np.einsum("kij,jl,klm->im", X, B, Xh), sa)

    biggest = int(np.argmax([np.linalg.norm(b) for b in X]))
    best = None
    for rs in range(restarts + (init is not None)):
        if rs == restarts:
            A = np.asarray(init, dtype=complex)
        elif rs == 0:
            A, _ = _holder_warm_start(X[biggest], e)
        else:
            A = _random_positive_unit(rows, sa, rng)
        B, val = update_B(A)
        it = 0
        for it in range(1, iters + 1):
            A, _ = update_A(B)
            B, new = update_B(A)
            if new <= val * (1 + tol):
                val = max(val, new)
                break
            val = new
        alpha, beta = _psd_sqrt(A), _psd_sqrt(B)
        value = spcq_eval(xs, alpha, beta)
        if best is None or value > best.value * (1 + 1e-13):
            best = SpcqResult(value, alpha, beta, rs, it)
    return best


def spcq_upper_bounds(xs: OpVector, e: ExponentTriple) -> dict[str, float]:
    """Hölder-type upper bounds for the ``S_p[C_q]`` norm, ``p >= 2``.

    ``column``: drop alpha (``||alpha||_inf <= 1``) and pair ``beta^2`` with
    ``sum x* x``; ``row``: symmetric; ``interpolation``: the complex
    interpolation inequality ``||x||_{C_q} <= ||x||_{C_p}^(1-theta) ||x||_{R_p}^theta``.
    """
    sa, sb = _spcq_exponents(e)
    unit = OpVector(xs.blocks)
    col_exp = 2 * conjugate_index(sb)
    row_exp = 2 * conjugate_index(sa)
    col = column_norm(unit, col_exp)
    row = schatten_norm(unit.row_matrix(), row_exp)
    interp = column_norm(unit, e.p) ** (1 - e.theta) * schatten_norm(unit.row_matrix(), e.p) ** e.theta
    return {"column": col, "row": row, "interpolation": interp}


# ---------------------------------------------------------------------------
# S_p[C_q], p < 2: factorisation x_k = alpha z_k beta
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorizationResult:
    value: float
    alpha: np.ndarray
    beta: np.ndarray
    z: np.ndarray
    dual: np.ndarray
    restart: int


def _best_inverse_weight(Y: np.ndarray, c: float, reg: float) -> np.ndarray:
    """Minimise ``Tr(P^-1 Y)`` over positive ``P`` with ``||P||_c = 1``: ``P ~ Y^(1/(c+1))``."""
    dec = eigh(Y)
    lam = np.clip(dec.eigenvalues, 0.0, None)
    lam = lam + reg * max(lam.max(initial=0.0), 1e-300)
    v = lam ** (1.0 / (c + 1.0))
    v = v / schatten_from_singular_values(v, c)
    return (dec.eigenvectors * v) @ dec.eigenvectors.conj().T


def spcq_factorization_norm(
    xs: OpVector,
    e: ExponentTriple,
    restarts: int = 8,
    iters: int = 500,
    seed: int = 0,
    tol: float = 1e-13,
    reg: float = 1e-13,
) -> FactorizationResult:
    """Upper bound for ``||sum x_k (x) e_k||_{S_p[C_q]}`` when ``1 <= p < 2``.

    By duality with the supremum formula at ``p' > 2`` (same theta), the norm
    is ``inf ||alpha||_a ||beta||_b (sum ||z_k||_2^2)^(1/2)`` over
    factorisations ``x_k = alpha z_k beta`` with ``a = 2r/theta``,
    ``b = 2r/(1-theta)``, ``r = (p'/2)'``. Alternating minimisation over
    ``A = alpha^2`` and ``B = beta^2`` has closed-form steps. The returned
    value is realised by an explicit factorisation, so it is a true upper
    bound. ``dual`` holds ``A^-1 x_k B^-1``, the natural norming tuple for the
    dual supremum.
    """
    if e.p >= 2:
        raise InvalidExponentError("the factorisation formula is for p < 2")
    ed = e.dual()
    sa, sb = _spcq_exponents(ed)
    if math.isinf(sa) or math.isinf(sb):
        raise InvalidExponentError("theta must lie strictly inside (0, 1)")
    rows, cols = xs.shape
    X = xs.blocks
    Xh = X.conj().transpose(0, 2, 1)
    rng = np.random.default_rng(seed)

    def inv(P):
        return np.linalg.inv(P)

    def objective(Ainv, Binv):
        return float(np.real(np.einsum("ij,kjl,lm,kmi->", Binv, Xh, Ainv, X)))

    best = None
    for rs in range(restarts):
        if rs == 0:
            A = _unit_identity(rows, sa)
        else:
            A = _random_positive_unit(rows, sa, rng)
        Ainv = inv(A)
        B = _best_inverse_weight(np.einsum("kij,jl,klm->im", Xh, Ainv, X), sb, reg)
        Binv = inv(B)
        val = objective(Ainv, Binv)
        for _ in range(iters):
            A = _best_inverse_weight(np.einsum("kij,jl,klm->im", X, Binv, Xh), sa, reg)
            Ainv = inv(A)
            B = _best_inverse_weight(np.einsum("kij,jl,klm->im", Xh, Ainv, X), sb, reg)
            Binv = inv(B)
            new = objective(Ainv, Binv)
            done = new >= val * (1 - tol)
            val = min(val, new)
            if done:
                break
        alpha, beta = _psd_sqrt(A), _psd_sqrt(B)
        ai, bi = inv(alpha), inv(beta)
        z = ai[None] @ X @ bi[None]
        value = (
            schatten_norm(alpha, 2 * sa)
            * schatten_norm(beta, 2 * sb)
            * float(np.sqrt(np.sum(np.abs(z) ** 2)))
        )
        if best is None or value < best.value * (1 - 1e-13):
            dual = Ainv[None] @ X @ Binv[None]
            best = FactorizationResult(value, alpha, beta, z, dual, rs)
    return best


def cq_norm(xs: OpVector, e: ExponentTriple, **kw) -> float:
    """``S_p[C_q]`` norm: supremum formula for ``p >= 2``, factorisation for ``p < 2``."""
    if e.p >= 2:
        return spcq_norm(xs, e, **kw).value
    return spcq_factorization_norm(xs, e, **kw).value


# ---------------------------------------------------------------------------
# sum norm, p < 2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    """Settings for the smoothed solvers behind ``sum_norm`` and the K/J norms.

    ``eps_start``/``eps_stop`` bound the smoothing schedule (relative to the
    squared scale of the data, one decade per stage). ``max_iter`` caps the
    quasi-Newton iterations of one stage, ``polish_iter`` the monotone
    majorise-minimise iterations run at the final eps. A majorise-minimise
    run stops once the relative decrease over ``window`` iterations is below
    ``rel_tol``.
    """

    eps_start: float = 1e-2
    eps_stop: float = 1e-12
    max_iter: int = 2000
    polish_iter: int = 300
    window: int = 50
    rel_tol: float = 1e-9

    def schedule(self) -> list[float]:
        if not (0 < self.eps_stop <= self.eps_start):
            raise ValueError("need 0 < eps_stop <= eps_start")
        stages = int(round(math.log10(self.eps_start / self.eps_stop))) + 1
        return list(np.logspace(math.log10(self.eps_start), math.log10(self.eps_stop), stages))


@dataclass(frozen=True)
class SumNormResult:
    value: float
    a: np.ndarray
    b: np.ndarray
    lower_bound: float
    iterations: int

    def __iter__(self):
        yield self.value
        yield (self.a, self.b)

    @property
    def gap(self) -> float:
        return self.value - self.lower_bound


def _smoothed_gradient(M: np.ndarray, p: float, eps: float) -> tuple[np.ndarray, float]:
    """Gradient ``d/dM (Tr (M + eps)^(p/2))^(1/p)`` and the smoothed value."""
    dec = eigh(M)
    lam = np.clip(dec.eigenvalues, 0.0, None) + eps
    T = float(np.sum(lam ** (p / 2)))
    scale = 0.5 * T ** (1.0 / p - 1.0)
    G = (dec.eigenvectors * (scale * lam ** (p / 2 - 1.0))) @ dec.eigenvectors.conj().T
    return G, T ** (1.0 / p)


def _sylvester_split(x: np.ndarray, coef: np.ndarray, Gc: np.ndarray, Gr: np.ndarray) -> np.ndarray:
    """Solve ``a_k Gc + c_k Gr a_k = c_k Gr x_k`` for every k (``c_k > 0``)."""
    dc = eigh(Gc)
    dr = eigh(Gr)
    V, gam = dc.eigenvectors, np.clip(dc.eigenvalues, 1e-300, None)
    U, rho = dr.eigenvectors, np.clip(dr.eigenvalues, 0.0, None)
    xt = U.conj().T[None] @ x @ V[None]
    num = coef[:, None, None] * rho[None, :, None]
    at = xt * num / (num + gam[None, None, :])
    return U[None] @ at @ V.conj().T[None]


def _sum_objective(xs: OpVector, a: np.ndarray, p: float) -> float:
    return column_norm(xs.with_blocks(a), p) + weighted_row_norm(xs.with_blocks(xs.blocks - a), p)


def _pack(a: np.ndarray) -> np.ndarray:
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


def _unpack(v: np.ndarray, shape) -> np.ndarray:
    h = v.size // 2
    return (v[:h] + 1j * v[h:]).reshape(shape)


def sum_norm(xs: OpVector, p: float, cfg: SolverConfig | None = None) -> SumNormResult:
    """Upper bound for ``inf_{x = a + b} column_norm(a) + weighted_row_norm(b)``, ``1 <= p < 2``.

    The square roots in both terms are smoothed by ``+ eps I``; eps is
    annealed over ``cfg.schedule()`` and each stage is minimised by L-BFGS
    warm-started from the previous one. At the final eps a few
    majorise-minimise steps follow: both terms are concave in their Gram
    matrices, so linearising them gives a quadratic majoriser whose minimiser
    solves one Sylvester equation per block.

    The reported value is the un-smoothed objective at the best iterate and
    is never worse than the trivial splits ``a = x`` and ``a = 0``.
    ``lower_bound`` comes from weak duality with the gradient tuples.
    """
    p = check_exponent(p)
    if p >= 2:
        raise InvalidExponentError("sum_norm is defined for p < 2")
    cfg = cfg or SolverConfig()
    x = xs.blocks
    shape = x.shape
    coef2 = row_coefficients(xs.weights, p) ** 2
    zero = np.zeros_like(x)
    col_full = column_norm(xs, p)
    row_full = weighted_row_norm(xs, p)
    if col_full == 0.0:
        return SumNormResult(0.0, zero, zero, 0.0, 0)
    scale2 = max(col_full, row_full) ** 2
    best_a, best_val = (x.copy(), col_full) if col_full <= row_full else (zero.copy(), row_full)

    def grams(a):
        b = x - a
        C = np.einsum("kji,kjl->il", a.conj(), a)
        R = np.einsum("k,kij,klj->il", coef2, b, b.conj())
        return C, R

    def consider(a):
        nonlocal best_a, best_val
        val = _sum_objective(xs, a, p)
        if val < best_val:
            best_val, best_a = val, a.copy()

    a = 0.5 * x
    iterations = 0
    schedule = cfg.schedule()
    for eps_rel in schedule:
        eps = eps_rel * scale2

        def fun(v):
            a = _unpack(v, shape)
            C, R = grams(a)
            Gc, fc = _smoothed_gradient(C, p, eps)
            Gr, fr = _smoothed_gradient(R, p, eps)
            g = 2 * a @ Gc[None] - 2 * coef2[:, None, None] * (Gr[None] @ (x - a))
            return fc + fr, _pack(g)

        res = minimize(
            fun, _pack(a), jac=True, method="L-BFGS-B",
            options=dict(maxiter=cfg.max_iter, ftol=1e-15, gtol=1e-13, maxcor=30),
        )
        a = _unpack(res.x, shape)
        iterations += int(res.nit)
        consider(a)

    eps = schedule[-1] * scale2
    history = []
    for _ in range(cfg.polish_iter):
        C, R = grams(a)
        Gc, fc = _smoothed_gradient(C, p, eps)
        Gr, fr = _smoothed_gradient(R, p, eps)
        history.append(fc + fr)
        a = _sylvester_split(x, coef2, Gc, Gr)
        iterations += 1
        consider(a)
        if len(history) > cfg.window and history[-cfg.window - 1] - history[-1] <= cfg.rel_tol * history[-1]:
            break

    C, R = grams(best_a)
    Gc, _ = _smoothed_gradient(C, p, eps)
    Gr, _ = _smoothed_gradient(R, p, eps)
    lower = 0.0
    for yb in (2 * best_a @ Gc[None], 2 * coef2[:, None, None] * (Gr[None] @ (x - best_a))):
        dn = dual_intersection_norm(xs.with_blocks(yb), p)
        if dn > 0:
            lower = max(lower, abs(np.vdot(yb, x)) / dn)
    return SumNormResult(best_val, best_a, x - best_a, min(lower, best_val), iterations)
