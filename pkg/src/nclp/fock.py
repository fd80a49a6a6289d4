"""Fock-space generators, their algebras, and Khintchine-type comparisons.

Two families of generators built from an orthonormal basis ``e_{+-k}`` and
weights ``lam_k > 0``:

* CAR:  ``f_k = c(e_k) + sqrt(lam_k) c(e_{-k})*`` on the antisymmetric Fock
  space over ``2n`` modes (Jordan-Wigner, dimension ``4^n``, exact);
* free: ``g_k = l(e_k) + sqrt(lam_k) l(e_{-k})*`` on the full Fock space
  truncated at word length ``depth``.

The von Neumann algebra generated by the ``f_k`` is finite dimensional, so
the vacuum state has an exact density ``D`` inside it and ``x rho^(1/p)``
is the matrix ``x D^(1/p)``. Truncation destroys faithfulness of the vacuum
in the free case; free results for ``p != 2`` carry an ``approximate`` mark.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, InvalidExponentError, ResourceError, StateExtractionError
from .linalg import KERNEL_TOL, check_exponent, eigh, psd_power, schatten_norm
from .opspace import OpVector, SolverConfig, intersection_norm, sum_norm

CAR_MAX_MODES = 4
FREE_MAX_AMBIENT = 4000
DEFAULT_WORD_CAP = 64


class ApproximationWarning(UserWarning):
    """Result computed on a truncated (non-faithful) model."""


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FockOperatorSet:
    """Generators ``f_k`` (or ``g_k``) with the creation operators they are built from.

    ``creation[2k]`` creates ``e_{k+1}`` and ``creation[2k+1]`` creates
    ``e_{-(k+1)}``; index 0 of the ambient space is the vacuum.
    """

    kind: str
    lam: np.ndarray
    creation: np.ndarray
    generators: np.ndarray
    depth: int | None = None

    @property
    def n_modes(self) -> int:
        return len(self.lam)

    @property
    def ambient_dim(self) -> int:
        return self.generators.shape[1]

    @property
    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.ambient_dim, dtype=complex)
        v[0] = 1.0
        return v

    @property
    def approximate(self) -> bool:
        return self.kind == "free"


def _check_lam(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size == 0:
        raise DomainError("need at least one weight")
    if np.any(~(lam > 0)) or not np.all(np.isfinite(lam)):
        raise DomainError("weights must be positive and finite")
    return lam


def _assemble(creation: np.ndarray, lam: np.ndarray) -> np.ndarray:
    plus = creation[0::2]
    minus_ann = creation[1::2].conj().transpose(0, 2, 1)
    return plus + np.sqrt(lam)[:, None, None] * minus_ann


def build_car(lam, order=None, max_modes: int = CAR_MAX_MODES) -> FockOperatorSet:
    """CAR generators on ``2n`` Jordan-Wigner sites.

    Sites follow ``order`` (a permutation of the mode labels
    ``e_1, e_-1, ..., e_n, e_-n`` given as indices 0..2n-1), by default the
    interleaved order itself.
    """
    lam = _check_lam(lam)
    n = lam.size
    if n > max_modes:
        raise ResourceError(f"{n} CAR modes exceed the cap of {max_modes} (ambient 4^n)")
    sites = 2 * n
    order = list(range(sites)) if order is None else list(order)
    if sorted(order) != list(range(sites)):
        raise DomainError("order must be a permutation of the 2n mode labels")
    dim = 2 ** sites
    Z = np.diag([1.0, -1.0])
    raise_op = np.array([[0.0, 0.0], [1.0, 0.0]])  # |1><0|
    creation = np.empty((sites, dim, dim), dtype=complex)
    for label in range(sites):
        site = order.index(label)
        op = np.ones((1, 1))
        for j in range(sites):
            factor = Z if j < site else (raise_op if j == site else np.eye(2))
            op = np.kron(op, factor)
        creation[label] = op
    return FockOperatorSet("car", lam, creation, _assemble(creation, lam))


def free_ambient_dim(n: int, depth: int) -> int:
    return sum((2 * n) ** j for j in range(depth + 1))


def build_free(lam, depth: int, max_ambient: int = FREE_MAX_AMBIENT) -> FockOperatorSet:
    """Generalized circular generators on the full Fock space cut at word length ``depth``.

    Left creation ``l(e)`` prepends a letter and annihilates words of maximal
    length; ``l(e)*`` is its adjoint.
    """
    lam = _check_lam(lam)
    if depth < 1:
        raise DomainError("depth must be >= 1")
    n = lam.size
    letters = 2 * n
    dim = free_ambient_dim(n, depth)
    if dim > max_ambient:
        raise ResourceError(f"truncated free Fock space of dimension {dim} exceeds cap {max_ambient}")
    offsets = np.cumsum([0] + [letters ** j for j in range(depth + 1)])
    creation = np.zeros((letters, dim, dim), dtype=complex)
    for level in range(depth):
        count = letters ** level
        src = offsets[level] + np.arange(count)
        for a in range(letters):
            # word w at position i of its level maps to a.w at a * count + i of the next
            dst = offsets[level + 1] + a * count + np.arange(count)
            creation[a, dst, src] = 1.0
    return FockOperatorSet("free", lam, creation, _assemble(creation, lam), depth)


# ---------------------------------------------------------------------------
# generated algebra and vacuum density
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteQuantumAlgebra:
    """Orthonormal (trace inner product) basis of a *-algebra plus a state density.

    ``basis`` is ``None`` when the algebra was too large to enumerate and
    the ambient vector state ``|Omega><Omega|`` stands in for ``D``. ``closed`` records whether product
    closure was verified, ``faithful`` whether ``D`` is invertible on the
    ambient space.
    """

    basis: np.ndarray | None
    density: np.ndarray
    ambient_dim: int
    closed: bool
    defect: float
    faithful: bool
    approximate: bool
    levels: int
    _powers: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.ambient_dim ** 2 if self.basis is None else self.basis.shape[0]

    def density_power(self, s: float) -> np.ndarray:
        if s not in self._powers:
            self._powers[s] = psd_power(self.density, s)
        return self._powers[s]


def _orthonormal_extend(Q: np.ndarray, cands: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Extend the orthonormal rows of ``Q`` by the span of ``cands`` (rows).

    Candidates are projected off ``Q`` (twice, for numerical orthogonality)
    and the remainder goes through a column-pivoted QR; directions whose
    pivot falls below ``tol`` times the largest candidate norm are dropped.
    Returns the enlarged basis, the new rows, and the largest relative
    residual among the dropped directions.
    """
    norms = np.linalg.norm(cands, axis=1)
    scale = norms.max(initial=0.0)
    # products that vanish up to rounding carry no direction
    cands = cands[norms > tol * scale]
    if cands.shape[0] == 0:
        return Q, cands, 0.0
    for _ in range(2):
        cands = cands - (cands @ Q.conj().T) @ Q
    R_q, R, _ = scipy.linalg.qr(cands.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * scale))
    worst = float(diag[rank] / scale) if rank < diag.size else 0.0
    if rank == 0:
        return Q, cands[:0], worst
    new = R_q[:, :rank].T
    new = new - (new @ Q.conj().T) @ Q
    new = np.linalg.qr(new.T)[0].T
    return np.vstack([Q, new]), new, worst


def generated_algebra(
    ops: FockOperatorSet | list,
    word_cap: int | None = None,
    tol: float = 1e-9,
    max_basis: int = 4096,
    vacuum_index: int = 0,
) -> FiniteQuantumAlgebra:
    """Algebra generated by the generators and their adjoints, plus the vacuum density.

    Words are enumerated level by level: level ``L`` left-multiplies the
    basis elements found at level ``L-1`` by every generator and adjoint and
    keeps what is linearly new. Enumeration stops when a level adds nothing
    (the span is then closed under multiplication), when ``word_cap`` is
    reached, or when the basis would exceed ``max_basis``.

    The density is ``D = sum_j <b_j, |Omega><Omega|> b_j``, the unique element
    of the span with ``Tr(D a) = <Omega, a Omega>`` for every ``a`` in it.
    """
    if isinstance(ops, FockOperatorSet):
        gens = list(ops.generators)
        kind = ops.kind
    else:
        gens = [np.asarray(g, dtype=complex) for g in ops]
        kind = "custom"
    word_cap = DEFAULT_WORD_CAP if word_cap is None else word_cap
    if word_cap < 1:
        raise DomainError("word_cap must be >= 1")
    N = gens[0].shape[0] if gens else 1
    letters = gens + [g.conj().T for g in gens]

    if N * N > max_basis and kind == "free":
        # too large to enumerate: use the ambient vector state |Omega><Omega|,
        # which agrees with rho on every word (the result is approximate anyway)
        return _finish(None, N, closed=False, defect=float("nan"), levels=0,
                       vacuum_index=vacuum_index, assume_full=True)

    Q = (np.eye(N, dtype=complex) / math.sqrt(N)).reshape(1, N * N)
    frontier = Q.copy()
    closed = False
    defect = 0.0
    levels = 0
    for level in range(1, word_cap + 1):
        mats = frontier.reshape(-1, N, N)
        cands = np.stack([s @ b for s in letters for b in mats]).reshape(-1, N * N)
        Q, frontier, defect = _orthonormal_extend(Q, cands, tol)
        levels = level
        if frontier.shape[0] == 0 or Q.shape[0] >= N * N:
            closed = True
            break
        if Q.shape[0] > max_basis:
            raise ResourceError(f"algebra basis exceeds {max_basis} elements")
    if not closed:
        # closure defect of the final span under one more multiplication
        mats = frontier.reshape(-1, N, N)
        cands = np.stack([s @ b for s in letters for b in mats]).reshape(-1, N * N)
        res = cands - (cands @ Q.conj().T) @ Q
        rel = np.linalg.norm(res, axis=1) / np.maximum(np.linalg.norm(cands, axis=1), 1e-300)
        defect = float(rel.max(initial=0.0))
        closed = defect < tol
    return _finish(Q.reshape(-1, N, N), N, closed, defect, levels, vacuum_index)


def _finish(basis, N, closed, defect, levels, vacuum_index, assume_full=False) -> FiniteQuantumAlgebra:
    if basis is None:
        D = np.zeros((N, N), dtype=complex)
        D[vacuum_index, vacuum_index] = 1.0
    else:
        coeff = basis[:, vacuum_index, vacuum_index].conj()
        D = np.tensordot(coeff, basis, axes=1)
    D = 0.5 * (D + D.conj().T)
    dec = eigh(D)
    lam = dec.eigenvalues
    top = max(lam.max(initial=0.0), 1e-300)
    if lam.min() < -1e-9:
        raise StateExtractionError(f"vacuum density has negative eigenvalue {lam.min():.3e}")
    lam = np.where(lam > KERNEL_TOL * top, lam, 0.0)
    D = (dec.eigenvectors * lam) @ dec.eigenvectors.conj().T
    faithful = bool(np.all(lam > 0))
    approximate = assume_full or not closed or not faithful
    return FiniteQuantumAlgebra(basis, D, N, closed, defect, faithful, approximate, levels)


def car_vacuum_algebra(ops: FockOperatorSet) -> FiniteQuantumAlgebra:
    """Vacuum density of a CAR system without enumerating the algebra.

    The vacuum is gauge invariant with diagonal two-point function on the
    normalized fermions ``b_k = f_k / sqrt(1 + lam_k)``, so it is the product
    state ``D = prod_k (n_k + lam_k (1 - n_k)) / (2^n prod_k (1 + lam_k))``
    with ``n_k = b_k* b_k``. The factor ``2^n`` is the multiplicity of the
    algebra ``M_(2^n)`` inside the ambient ``M_(4^n)``.
    """
    if ops.kind != "car":
        raise DomainError("closed-form vacuum density needs a CAR system")
    N = ops.ambient_dim
    D = np.eye(N, dtype=complex)
    eye = np.eye(N)
    for f, lk in zip(ops.generators, ops.lam):
        nk = f.conj().T @ f / (1.0 + lk)
        D = D @ (nk + lk * (eye - nk)) / (2.0 * (1.0 + lk))
    D = 0.5 * (D + D.conj().T)
    return FiniteQuantumAlgebra(None, D, N, True, 0.0, True, False, 0)


def regularized(alg: FiniteQuantumAlgebra, delta: float = 1e-12) -> FiniteQuantumAlgebra:
    """Faithful perturbation ``(D + delta I) / (1 + delta N)`` of a non-faithful density."""
    if alg.faithful:
        return alg
    N = alg.ambient_dim
    D = (alg.density + delta * np.eye(N)) / (1.0 + delta * N)
    return FiniteQuantumAlgebra(alg.basis, D, N, alg.closed, alg.defect, True, True, alg.levels)


def state_residual(alg: FiniteQuantumAlgebra, elements, vacuum_index: int = 0) -> float:
    """Largest ``|Tr(D a) - <Omega, a Omega>|`` over ``elements``."""
    worst = 0.0
    for a in elements:
        worst = max(worst, abs(np.trace(alg.density @ a) - a[vacuum_index, vacuum_index]))
    return float(worst)


# ---------------------------------------------------------------------------
# L_p norms
# ---------------------------------------------------------------------------

def tensor_sum(xs: OpVector, ops: FockOperatorSet) -> np.ndarray:
    """``sum_k x_k (x) generator_k`` with the matrix factor first."""
    if xs.n != ops.n_modes:
        raise DomainError(f"{xs.n} blocks but {ops.n_modes} generators")
    return sum(np.kron(x, g) for x, g in zip(xs.blocks, ops.generators))


def lp_norm_state(x, alg: FiniteQuantumAlgebra, p: float, m: int, variant: str = "right") -> float:
    """``||x (I_m (x) D^(1/p))||_p`` for ``x`` in ``M_m (x) A``.

    ``variant="symmetric"`` uses ``D^(1/2p) x D^(1/2p)`` instead.
    """
    p = check_exponent(p)
    N = alg.ambient_dim
    x = np.asarray(x, dtype=complex)
    if x.shape != (m * N, m * N):
        raise DomainError(f"x must be {m * N} x {m * N}")
    if alg.approximate:
        warnings.warn("L_p norm on an approximate (truncated) algebra", ApproximationWarning, stacklevel=2)
    eye = np.eye(m)
    if variant == "right":
        y = x @ np.kron(eye, alg.density_power(1.0 / p))
    elif variant == "symmetric":
        half = np.kron(eye, alg.density_power(0.5 / p))
        y = half @ x @ half
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return schatten_norm(y, p)


# ---------------------------------------------------------------------------
# Khintchine comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KhintchineConfig:
    depth: int = 2
    word_cap: int | None = None
    variant: str = "right"
    delta: float = 1e-12
    max_basis: int = 1024
    lower_slack: float = 1e-8
    upper_slack: float = 1e-5
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass(frozen=True)
class KhintchineReport:
    kind: str
    p: float
    n: int
    m: int
    lam: tuple
    lhs: float
    lower: float | None
    upper: float | None
    ratio_lower: float | None
    ratio_upper: float | None
    approximate: bool
    depth: int | None
    ok: bool
    message: str = ""

    def row(self) -> dict:
        return {
            "kind": self.kind, "p": self.p, "n": self.n, "m": self.m,
            "lam": list(self.lam), "lhs": self.lhs, "lower": self.lower, "upper": self.upper,
            "ratio_lower": self.ratio_lower, "ratio_upper": self.ratio_upper,
            "approximate": self.approximate, "depth": self.depth, "ok": self.ok,
        }


def build_operators(kind: str, lam, depth: int = 2) -> FockOperatorSet:
    if kind in ("car", "antisymmetric"):
        return build_car(lam)
    if kind == "free":
        return build_free(lam, depth)
    raise ValueError(f"unknown kind {kind!r}")


def check_kind_exponent(kind: str, p: float) -> float:
    p = check_exponent(p)
    if kind in ("car", "antisymmetric") and not (1 < p < math.inf):
        raise InvalidExponentError("the CAR comparison holds for 1 < p < inf")
    return p


def prepare_algebra(ops: FockOperatorSet, p: float, cfg: KhintchineConfig) -> FiniteQuantumAlgebra:
    if ops.kind == "car" and ops.ambient_dim ** 2 > cfg.max_basis:
        return car_vacuum_algebra(ops)
    alg = generated_algebra(ops, cfg.word_cap, max_basis=cfg.max_basis)
    if not alg.faithful and p != 2:
        # at p = 2 only D itself enters and the kernel contributes nothing
        alg = regularized(alg, cfg.delta)
    return alg


def khintchine_report(
    xs: OpVector,
    kind: str,
    p: float,
    cfg: KhintchineConfig | None = None,
    ops: FockOperatorSet | None = None,
    alg: FiniteQuantumAlgebra | None = None,
) -> KhintchineReport:
    """Compare ``||sum x_k (x) f_k rho^(1/p)||_p`` with the column/row bounds.

    For ``p >= 2`` the reference is ``intersection_norm`` (a lower bound for
    the Fock-space norm), for ``p < 2`` the ``sum_norm`` upper bound. The
    observed ratios ``lhs/lower`` and ``upper/lhs`` are empirical values of
    the two-sided constants. Checks are hard failures (``ok=False``) only for
    exact algebras; on truncated algebras they are reported but not enforced.
    """
    cfg = cfg or KhintchineConfig()
    p = check_kind_exponent(kind, p)
    kind = "car" if kind == "antisymmetric" else kind
    ops = ops or build_operators(kind, xs.weights, cfg.depth)
    if not np.allclose(ops.lam, xs.weights):
        raise DomainError("operator weights differ from the tuple weights")
    if alg is None:
        alg = prepare_algebra(ops, p, cfg)
    m = xs.shape[0]
    if xs.shape[0] != xs.shape[1]:
        raise DomainError("blocks must be square")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ApproximationWarning)
        lhs = lp_norm_state(tensor_sum(xs, ops), alg, p, m, cfg.variant)
    approximate = alg.approximate and p != 2
    lower = upper = ratio_lower = ratio_upper = None
    problems = []
    if p >= 2:
        lower = intersection_norm(xs, p)
        ratio_lower = lhs / lower if lower > 0 else float("nan")
        if lower > lhs + cfg.lower_slack:
            problems.append(f"lower bound violated: {lower:.12g} > {lhs:.12g}")
    else:
        upper = sum_norm(xs, p, cfg.solver).value
        ratio_upper = upper / lhs if lhs > 0 else float("nan")
        if lhs > upper + cfg.upper_slack:
            problems.append(f"upper bound violated: {lhs:.12g} > {upper:.12g}")
    ok = not problems or approximate
    return KhintchineReport(
        kind, p, xs.n, m, tuple(float(v) for v in xs.weights), lhs, lower, upper,
        ratio_lower, ratio_upper, approximate, ops.depth, ok, "; ".join(problems),
    )


def free_depth_study(xs: OpVector, p: float, depths, cfg: KhintchineConfig | None = None, rtol: float = 1e-3) -> dict:
    """Free-kind lhs at several truncation depths with a convergence flag.

    ``vector_state[d]`` records depths where the algebra was too large and
    the vacuum vector state stood in for the density; such depths never
    count towards convergence.
    """
    cfg = cfg or KhintchineConfig()
    values, vector_state = {}, {}
    for d in depths:
        ops = build_free(xs.weights, d)
        alg = prepare_algebra(ops, p, cfg)
        vector_state[d] = alg.basis is None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ApproximationWarning)
            values[d] = lp_norm_state(tensor_sum(xs, ops), alg, p, xs.shape[0], cfg.variant)
    ds = sorted(values)
    converged = p == 2 or len(ds) < 2
    if not converged and not (vector_state[ds[-1]] or vector_state[ds[-2]]) and values[ds[-2]] > 0:
        converged = abs(values[ds[-1]] - values[ds[-2]]) / values[ds[-2]] <= rtol
    return {"lhs": values, "converged": converged, "vector_state": vector_state}


def complementation_projection_p2(ops: FockOperatorSet, alg: FiniteQuantumAlgebra):
    """Orthogonal projection of ``L_2`` onto ``span{f_k D^(1/2)}``.

    Returns ``(project, vectors)``: a function on ambient matrices and the
    orthonormal family ``f_k D^(1/2)`` (orthonormal because
    ``rho(f_k* f_j) = delta_kj``).
    """
    half = alg.density_power(0.5)
    vecs = np.stack([g @ half for g in ops.generators])

    def project(y):
        coeffs = np.einsum("kij,ij->k", vecs.conj(), y)
        return np.tensordot(coeffs, vecs, axes=1)

    return project, vecs
