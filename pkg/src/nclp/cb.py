"""Completely bounded norms of maps between column (and row) spaces.

* :func:`cb_norm_closed`: ``CB(C_p, C_q) = S_t`` with ``1/t = |1/p - 1/q| / 2``
  (and the row/column variants);
* :func:`cb_lower_amplified`: certified lower bounds from the definition,
  ``sup ||(id (x) u)(x)||_{S_p^m[C_q]} / ||x||_{S_p^m[C_p]}``;
* :func:`check_factorization`: worst-case ratio of ``||u(x)||`` against a
  factorization bound ``c f(x*x)^((1-theta)/2) g(xx*)^(theta/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, DomainError, InvalidExponentError
from .linalg import as_matrix, check_exponent, conjugate_index, holder_dual_witness, schatten_norm
from .opspace import ExponentTriple, OpVector, column_norm, spcq_eval, spcq_norm

KINDS = ("cc", "rr", "rc", "cr")


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


@dataclass(frozen=True)
class CbMap:
    """Linear map ``u: C_p^n_in -> C_q^n_out`` given by its ``n_out x n_in`` matrix."""

    u: np.ndarray
    p: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "u", as_matrix(self.u))
        object.__setattr__(self, "p", check_exponent(self.p))
        object.__setattr__(self, "q", check_exponent(self.q))

    @property
    def n_in(self) -> int:
        return self.u.shape[1]

    @property
    def n_out(self) -> int:
        return self.u.shape[0]

    def adjoint(self) -> "CbMap":
        """``u*: C_q' -> C_p'``; same cb norm."""
        return CbMap(self.u.conj().T, conjugate_index(self.q), conjugate_index(self.p))

    def apply(self, xs: np.ndarray) -> np.ndarray:
        """``(id (x) u)`` on a stack of ``n_in`` blocks."""
        return np.einsum("ij,jab->iab", self.u, xs)


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------

def cb_exponent(p: float, q: float, kind: str = "cc") -> float:
    """Schatten exponent ``t`` with ``CB(X_p, Y_q) = S_t``; ``inf`` means the operator norm.

    ``cc``/``rr``: ``1/t = |1/p - 1/q| / 2``; ``rc``/``cr``: ``1/t = |1/p + 1/q - 1| / 2``.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    ip, iq = _inv(check_exponent(p)), _inv(check_exponent(q))
    inv_t = abs(ip - iq) / 2 if kind in ("cc", "rr") else abs(ip + iq - 1.0) / 2
    return math.inf if inv_t == 0 else 1.0 / inv_t


@dataclass(frozen=True)
class CbNorm:
    """Closed-form cb norm; ``path`` is ``"operator"`` when the exponent degenerates (``p = q``)."""

    value: float
    exponent: float
    path: str

    def __float__(self) -> float:
        return self.value


def cb_norm_closed(map: CbMap, kind: str = "cc") -> CbNorm:
    """``||u||_cb = ||u||_{S_t}``; for ``p = q`` (``cc``/``rr``) the operator norm, flagged."""
    t = cb_exponent(map.p, map.q, kind)
    path = "operator" if math.isinf(t) else "schatten"
    return CbNorm(schatten_norm(map.u, t), t, path)


# ---------------------------------------------------------------------------
# amplified lower bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CbOptConfig:
    restarts: int = 64
    outer: int = 30
    power_steps: int = 8
    spcq_restarts: int = 2
    seed: int = 0
    rel_tol: float = 1e-12


@dataclass(frozen=True)
class CbLowerResult:
    """Best certified ratio per amplification level (``levels[m-1]``) and the witness at the top level."""

    value: float
    levels: tuple
    witness: np.ndarray
    via_adjoint: bool

    def __float__(self) -> float:
        return self.value


def _route(map: CbMap) -> tuple[CbMap, bool]:
    """Pick ``u`` or ``u*`` so that the target ``S_p[C_q]`` norm has the supremum formula."""
    def direct(mp):
        if mp.p == mp.q:
            return True
        if mp.p < 2 or mp.p == 2:
            return False
        lo, hi = sorted((mp.p, conjugate_index(mp.p)))
        return lo <= mp.q <= hi

    if direct(map):
        return map, False
    adj = map.adjoint()
    if direct(adj):
        return adj, True
    raise ConfigError(
        f"no certified amplified estimate for p={map.p}, q={map.q}: need q between p and p' "
        "with p >= 2 (or the same for the adjoint)")


class _Level:
    """Evaluator for one amplification level of a routed map."""

    def __init__(self, mp: CbMap, m: int):
        self.mp, self.m = mp, m
        self.same = mp.p == mp.q
        self.e = None if self.same else ExponentTriple.from_pq(mp.p, mp.q)

    def source(self, x):
        return column_norm(OpVector(x), self.mp.p)

    def target(self, x, A=None, restarts=2, seed=0):
        """Returns ``(value, A)`` with ``value`` a certified lower bound of the target norm."""
        y = OpVector(self.mp.apply(x))
        if self.same:
            return column_norm(y, self.mp.p), None
        res = spcq_norm(y, self.e, restarts=restarts, seed=seed, init=A)
        return res.value, res.alpha @ res.alpha

    def power_step(self, x, alpha, beta):
        """Maximize the linearized target over the unit ball of the source (convex maximization)."""
        mp = self.mp
        if self.same:
            # target is a column norm too: use its Hölder witness as the linear functional
            y = mp.apply(x)
            Wy = holder_dual_witness(y.reshape(-1, y.shape[-1]), mp.q).reshape(y.shape)
            G = np.einsum("ij,iab->jab", mp.u.conj(), Wy)
        else:
            a2, b2 = alpha @ alpha, beta @ beta
            y = mp.apply(x)
            G = np.einsum("ij,ab,ibc,cd->jad", mp.u.conj(), a2, y, b2)
        n, m = x.shape[0], x.shape[1]
        stack = G.reshape(n * m, m)
        if not np.any(stack):
            return x
        return holder_dual_witness(stack, conjugate_index(mp.p)).reshape(n, m, m)

    def ratio(self, x, alpha, beta):
        s = self.source(x)
        if s == 0.0:
            return 0.0
        if self.same:
            return column_norm(OpVector(self.mp.apply(x)), self.mp.q) / s
        return spcq_eval(OpVector(self.mp.apply(x)), alpha, beta) / s


def _pad(x: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros((x.shape[0], m, m), dtype=complex)
    out[:, : x.shape[1], : x.shape[2]] = x
    return out


def _pad_square(A: np.ndarray | None, m: int) -> np.ndarray | None:
    if A is None:
        return None
    out = np.zeros((m, m), dtype=complex)
    out[: A.shape[0], : A.shape[1]] = A
    return out


def _climb(level: _Level, x, A, cfg: CbOptConfig, seed: int):
    """Alternate power steps on ``x`` and block maximization on ``(alpha, beta)``."""
    x = x / level.source(x)
    best_val, best_x, best_A = 0.0, x, A
    prev = -1.0
    for k in range(cfg.outer):
        val, A = level.target(x, A, cfg.spcq_restarts, seed + k)
        val /= level.source(x)
        if val > best_val:
            best_val, best_x, best_A = val, x, A
        if val <= prev * (1 + cfg.rel_tol):
            break
        prev = val
        if level.same:
            alpha = beta = None
        else:
            y = OpVector(level.mp.apply(x))
            res = spcq_norm(y, level.e, restarts=1, init=A)
            alpha, beta = res.alpha, res.beta
        for _ in range(cfg.power_steps):
            x_new = level.power_step(x, alpha, beta)
            if level.ratio(x_new, alpha, beta) < level.ratio(x, alpha, beta):
                break
            x = x_new
    return best_val, best_x, best_A


def cb_lower_amplified(map: CbMap, m: int, cfg: CbOptConfig | None = None) -> CbLowerResult:
    """Certified lower bound for ``||u||_cb`` from amplification levels ``1..m``.

    Each level maximizes ``||(id (x) u)(x)||_{S_p^m[C_q]}`` over the unit ball
    of ``S_p^m[C_p]`` (the column norm), with the target measured through the
    supremum formula at explicit witnesses ``alpha, beta``, so every reported
    ratio is attained. When the formula is not available for ``(p, q)`` the
    adjoint map ``C_q' -> C_p'`` is used. Level ``m`` is warm-started from
    the zero-padded optimum of level ``m - 1``, which makes the values
    nondecreasing in ``m``.
    """
    if m < 1:
        raise DomainError("amplification level must be >= 1")
    cfg = cfg or CbOptConfig()
    mp, via_adj = _route(map)
    if not np.any(mp.u):
        return CbLowerResult(0.0, (0.0,) * m, np.zeros((mp.n_in, m, m), dtype=complex), via_adj)
    rng = np.random.default_rng(cfg.seed)
    levels = []
    carry_x, carry_A = None, None
    best_x = np.zeros((mp.n_in, 1, 1), dtype=complex)
    for lev in range(1, m + 1):
        level = _Level(mp, lev)
        best = (0.0, None, None)
        if carry_x is not None:
            x0 = _pad(carry_x, lev)
            A0 = _pad_square(carry_A, lev)
            val0 = levels[-1]
            best = (val0, x0, A0)
            cand = _climb(level, x0, A0, cfg, cfg.seed)
            if cand[0] > best[0]:
                best = cand
        for rs in range(cfg.restarts):
            x0 = rng.standard_normal((mp.n_in, lev, lev)) + 1j * rng.standard_normal((mp.n_in, lev, lev))
            cand = _climb(level, x0, None, cfg, cfg.seed + 1000 * lev + rs)
            if cand[0] > best[0]:
                best = cand
        levels.append(best[0])
        carry_x, carry_A = best[1], best[2]
        best_x = carry_x
    return CbLowerResult(levels[-1], tuple(levels), best_x, via_adj)


# ---------------------------------------------------------------------------
# factorization certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorizationCertificate:
    """Positive ``f``, ``g`` in the unit ball of ``S_{p/2}* = S_{(p/2)'}`` with exponent ``theta`` and constant ``c``."""

    f: np.ndarray
    g: np.ndarray
    theta: float
    c: float


@dataclass(frozen=True)
class RestrictedMap:
    """``u`` on the span of ``basis`` (``k`` matrices ``d x d`` inside ``S_p^d``) into ``C_q^n_out``.

    ``x = sum_j c_j basis[j]`` maps to ``matrix @ c``.
    """

    basis: np.ndarray
    matrix: np.ndarray
    p: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "basis", np.asarray(self.basis, dtype=complex))
        object.__setattr__(self, "matrix", as_matrix(self.matrix))
        object.__setattr__(self, "p", check_exponent(self.p))
        object.__setattr__(self, "q", check_exponent(self.q))
        if self.basis.ndim != 3 or self.basis.shape[1] != self.basis.shape[2]:
            raise DomainError("basis must be a stack of square matrices")
        if self.matrix.shape[1] != self.basis.shape[0]:
            raise DomainError("matrix columns must match the number of basis elements")

    @classmethod
    def column_map(cls, u, p: float, q: float) -> "RestrictedMap":
        """``u: C_p^n -> C_q`` with ``C_p^n`` the first column of ``S_p^n``."""
        u = as_matrix(u)
        n = u.shape[1]
        basis = np.zeros((n, n, n), dtype=complex)
        for j in range(n):
            basis[j, j, 0] = 1.0
        return cls(basis, u, p, q)


@dataclass(frozen=True)
class FactorizationCheck:
    ratio: float
    valid: bool
    witness: np.ndarray | None
    best_constant: float
    reason: str = ""


def _forms(rm: RestrictedMap, cert: FactorizationCertificate):
    E = rm.basis
    W = rm.matrix.conj().T @ rm.matrix
    # F_ij = Tr(f E_i* E_j), G_ij = Tr(g E_j E_i*), so Tr(f x*x) = c*Fc and Tr(g xx*) = c*Gc
    f = np.asarray(cert.f, dtype=complex)
    g = np.asarray(cert.g, dtype=complex)
    F = np.einsum("bc,iac,jab->ij", f, E.conj(), E)
    G = np.einsum("ab,jbc,iac->ij", g, E, E.conj())
    return _herm(W), _herm(F), _herm(G)


def _herm(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)


def _validate_certificate(rm: RestrictedMap, cert: FactorizationCertificate) -> None:
    p = rm.p
    if p < 2:
        raise InvalidExponentError("the factorization bound is stated for 2 <= p <= inf")
    e = ExponentTriple(p, cert.theta)
    if abs(_inv(e.q) - _inv(rm.q)) > 1e-12:
        raise InvalidExponentError(f"theta={cert.theta} does not match p={p}, q={rm.q}")
    r = conjugate_index(p / 2) if p > 2 else math.inf
    for name, M in (("f", cert.f), ("g", cert.g)):
        M = as_matrix(M)
        w = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
        if w.min() < -1e-10 * max(w.max(), 1.0):
            raise DomainError(f"{name} is not positive semidefinite")
        if schatten_norm(M, r) > 1 + 1e-10:
            raise DomainError(f"{name} is not in the unit ball of S_{r}")
    if not (cert.c > 0):
        raise DomainError("constant c must be positive")


def check_factorization(
    rm: RestrictedMap,
    cert: FactorizationCertificate,
    restarts: int = 32,
    seed: int = 0,
    tol: float = 1e-8,
) -> FactorizationCheck:
    """Largest ``||u(x)|| / (c Tr(f x*x)^((1-theta)/2) Tr(g xx*)^(theta/2))`` found.

    All three quantities are Hermitian forms in the coordinates of ``x``.
    A nonzero ``u(x)`` on the kernel of a denominator form makes the
    certificate invalid at once and ``x`` is returned as witness. Otherwise
    the ratio is maximized from Gaussian starting points by L-BFGS on the
    real and imaginary parts. Valid iff the ratio is at most ``1 + tol``.
    """
    _validate_certificate(rm, cert)
    th = cert.theta
    W, F, G = _forms(rm, cert)
    k = W.shape[0]
    wtop = max(np.linalg.eigvalsh(W).max(), 0.0)
    if wtop == 0.0:
        return FactorizationCheck(0.0, True, None, 0.0)

    # kernel test for each denominator factor that actually appears
    for M, used in ((F, th < 1), (G, th > 0)):
        if not used:
            continue
        w, V = np.linalg.eigh(M)
        ker = V[:, w <= 1e-12 * max(w.max(), 1e-300)]
        if ker.shape[1]:
            Wk = ker.conj().T @ W @ ker
            lw, lv = np.linalg.eigh(0.5 * (Wk + Wk.conj().T))
            if lw[-1] > 1e-12 * wtop:
                witness = ker @ lv[:, -1]
                coords = np.tensordot(witness, rm.basis, axes=1)
                return FactorizationCheck(math.inf, False, coords, math.inf, "u(x) != 0 on a kernel of the bound")

    def log_ratio(v):
        c = v[:k] + 1j * v[k:]
        num = np.vdot(c, W @ c).real
        a = np.vdot(c, F @ c).real
        b = np.vdot(c, G @ c).real
        return 0.5 * (math.log(num) - (1 - th) * math.log(a) - th * math.log(b)) - math.log(cert.c)

    def neg(v):
        try:
            return -log_ratio(v)
        except ValueError:
            return math.inf

    rng = np.random.default_rng(seed)
    best, best_v = -math.inf, None
    for _ in range(restarts):
        v0 = rng.standard_normal(2 * k)
        res = minimize(neg, v0, method="L-BFGS-B", options={"maxiter": 500, "ftol": 1e-15, "gtol": 1e-12})
        for v in (v0, res.x):
            val = -neg(v)
            if np.isfinite(val) and val > best:
                best, best_v = val, v
    ratio = math.exp(best)
    c = best_v[:k] + 1j * best_v[k:]
    witness = np.tensordot(c, rm.basis, axes=1)
    valid = ratio <= 1 + tol
    return FactorizationCheck(ratio, valid, None if valid else witness, ratio * cert.c)
