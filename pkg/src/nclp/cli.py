"""Command line experiment runner.

Every subcommand reads one JSON config (all fields optional), draws its
random instances from ``Philox`` streams keyed by ``(seed, instance)``, and
writes a CSV or JSON report that embeds the fully resolved config. Reports
contain no timing information unless ``--timing`` is given, so equal
``(config, seed)`` pairs give byte-identical files.

Exit codes: 0 all checks passed, 2 config error, 3 check failure,
4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, is_dataclass

import numpy as np
import scipy.linalg

from . import cb as cbmod
from . import fock, interpolation as interp
from .errors import ConfigError, NclpError, ResourceError
from .linalg import schatten_norm
from .opspace import (
    ExponentTriple,
    OpVector,
    SolverConfig,
    column_norm,
    cq_norm,
    intersection_norm,
    spcq_upper_bounds,
    sum_norm,
    weighted_row_norm,
)

RNG_NAME = "numpy.random.Philox(SeedSequence([seed, instance]))"
EXIT_OK, EXIT_CONFIG, EXIT_ASSERT, EXIT_RESOURCE = 0, 2, 3, 4


def instance_rng(seed: int, idx: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(idx)])))


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------

def _from_dict(cls, data, path: str):
    """Build dataclass ``cls`` from ``data``, rejecting unknown keys."""
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    names = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, val in data.items():
        if key not in names:
            raise ConfigError(f"{path}.{key}: unknown field")
        sub = _NESTED.get((cls, key))
        kwargs[key] = _from_dict(sub, val, f"{path}.{key}") if sub else val
    try:
        obj = cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return obj


def _choices(val, path: str, kind=float) -> list:
    vals = val if isinstance(val, list) else [val]
    if not vals:
        raise ConfigError(f"{path}: empty list")
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise ConfigError(f"{path}: expected numbers, got {v!r}")
        v = float(v) if kind is float else v
        if kind is int:
            if int(v) != v or v < 1:
                raise ConfigError(f"{path}: expected positive integers, got {v!r}")
            v = int(v)
        out.append(v)
    return out


def _lam_spec(val, path: str):
    if isinstance(val, list):
        if not val:
            raise ConfigError(f"{path}: empty weight list")
        if any(not isinstance(v, (int, float)) or v <= 0 for v in val):
            raise ConfigError(f"{path}: weights must be positive numbers")
        return val
    if isinstance(val, dict) and set(val) == {"log_uniform"}:
        lo, hi = val["log_uniform"]
        if not (0 < lo <= hi):
            raise ConfigError(f"{path}.log_uniform: need 0 < lo <= hi")
        return val
    raise ConfigError(f"{path}: expected a weight list or {{\"log_uniform\": [lo, hi]}}")


def _draw_weights(spec, n: int, rng) -> np.ndarray:
    if isinstance(spec, list):
        if len(spec) < n:
            raise ConfigError(f"lam: {len(spec)} weights given but n={n}")
        return np.array(spec[:n], dtype=float)
    lo, hi = spec["log_uniform"]
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


def _draw_blocks(rng, n: int, m: int) -> np.ndarray:
    shape = (n, m, m)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


@dataclass
class NormsConfig:
    instances: int = 10
    n: object = 2
    m: object = 2
    p: object = 3.0
    theta: float = 0.5
    lam: object = field(default_factory=lambda: {"log_uniform": [0.25, 4.0]})
    spcq_restarts: int = 8
    solver: SolverConfig = field(default_factory=SolverConfig)

    def validate(self):
        _instances(self.instances)
        _choices(self.n, "norms.n", int)
        _choices(self.m, "norms.m", int)
        for p in _choices(self.p, "norms.p"):
            if p < 1:
                raise ConfigError("norms.p: exponents must be >= 1")
        if not (0 < self.theta < 1):
            raise ConfigError("norms.theta: must lie in (0, 1)")
        _lam_spec(self.lam, "norms.lam")


@dataclass
class KhintchineCliConfig:
    instances: int = 20
    kind: str = "car"
    n: object = field(default_factory=lambda: [1, 2, 3])
    m: object = field(default_factory=lambda: [1, 2, 3])
    p: object = field(default_factory=lambda: [2.0, 3.0, 4.0, 6.0])
    lam: object = field(default_factory=lambda: {"log_uniform": [0.25, 4.0]})
    depth: int = 2
    depths: list | None = None
    variant: str = "right"
    solver: SolverConfig = field(default_factory=SolverConfig)

    def validate(self):
        _instances(self.instances)
        if self.kind not in ("car", "antisymmetric", "free"):
            raise ConfigError("khintchine.kind: expected 'car' or 'free'")
        _choices(self.n, "khintchine.n", int)
        _choices(self.m, "khintchine.m", int)
        for p in _choices(self.p, "khintchine.p"):
            try:
                fock.check_kind_exponent(self.kind, p)
            except NclpError as exc:
                raise ConfigError(f"khintchine.p: {exc}") from exc
        _lam_spec(self.lam, "khintchine.lam")
        if self.depths is not None:
            if self.kind != "free":
                raise ConfigError("khintchine.depths: only for the free kind")
            _choices(self.depths, "khintchine.depths", int)
        if self.variant not in ("right", "symmetric"):
            raise ConfigError("khintchine.variant: expected 'right' or 'symmetric'")


@dataclass
class GridCli:
    t_min: float = 1e-8
    t_max: float = 1e8
    n: int = 4001

    def build(self) -> interp.GridConfig:
        return interp.GridConfig(self.t_min, self.t_max, self.n)


@dataclass
class CqCli:
    instances: int = 4
    p: object = field(default_factory=lambda: [1.0, 4.0 / 3.0])
    theta: object = field(default_factory=lambda: [0.3, 0.5, 0.7])
    n: object = field(default_factory=lambda: [1, 2, 3])
    m: object = field(default_factory=lambda: [1, 2])
    grid: GridCli = field(default_factory=lambda: GridCli(1e-6, 1e6, 241))


@dataclass
class InterpConfig:
    theta: object = field(default_factory=lambda: [0.25, 0.5, 0.75])
    p: object = field(default_factory=lambda: [1.0, 2.0, 3.0])
    instances: int = 4
    dim: int = 2
    grid: GridCli = field(default_factory=GridCli)
    brute_grid: int = 400
    cq: CqCli = field(default_factory=CqCli)

    def validate(self):
        _instances(self.instances)
        for th in _choices(self.theta, "interp.theta"):
            if not (0 < th < 1):
                raise ConfigError("interp.theta: must lie in (0, 1)")
        for p in _choices(self.p, "interp.p"):
            if not (1 <= p < math.inf):
                raise ConfigError("interp.p: must lie in [1, inf)")
        self.grid.build()
        self.cq.grid.build()
        _instances(self.cq.instances)
        for p in _choices(self.cq.p, "interp.cq.p"):
            if not (1 <= p <= 2):
                raise ConfigError("interp.cq.p: must lie in [1, 2]")


@dataclass
class DecomposeConfig:
    instances: int = 10
    d0: int = 6
    d1: int = 6
    dim: object = field(default_factory=lambda: [1, 2, 3, 4])
    basis: list | None = None
    basis_file: str | None = None
    levels: int = 3

    def validate(self):
        _instances(self.instances)
        _choices(self.dim, "decompose.dim", int)
        if self.basis is not None and self.basis_file is not None:
            raise ConfigError("decompose: give either basis or basis_file")


@dataclass
class CbCliConfig:
    p: object = field(default_factory=lambda: [1.0, 4.0 / 3.0, 2.0, 4.0, math.inf])
    q: object = field(default_factory=lambda: [1.0, 4.0 / 3.0, 2.0, 4.0, math.inf])
    n: int = 3
    maps: str = "identity"
    levels: int = 2
    restarts: int = 8

    def validate(self):
        _choices(self.p, "cb.p")
        _choices(self.q, "cb.q")
        if self.maps not in ("identity", "diagonal", "random"):
            raise ConfigError("cb.maps: expected identity, diagonal or random")
        if self.levels < 0 or self.n < 1:
            raise ConfigError("cb: levels >= 0 and n >= 1 required")


_NESTED = {
    (NormsConfig, "solver"): SolverConfig,
    (KhintchineCliConfig, "solver"): SolverConfig,
    (InterpConfig, "grid"): GridCli,
    (InterpConfig, "cq"): CqCli,
    (CqCli, "grid"): GridCli,
}

COMMANDS = {
    "norms": NormsConfig,
    "khintchine": KhintchineCliConfig,
    "interp": InterpConfig,
    "decompose": DecomposeConfig,
    "cb": CbCliConfig,
}


def _instances(k) -> None:
    if isinstance(k, bool) or not isinstance(k, int) or k < 0:
        raise ConfigError(f"instances must be a nonnegative integer, got {k!r}")


def _jsonable(obj):
    if is_dataclass(obj):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _parse_numbers(obj):
    """Accept ``"inf"`` wherever a number is expected."""
    if isinstance(obj, dict):
        return {k: _parse_numbers(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_parse_numbers(v) for v in obj]
    if obj in ("inf", "Infinity"):
        return math.inf
    return obj


def load_config(text: str | None, command: str):
    """Parse a JSON config for ``command``; a document keyed by command names is also accepted."""
    data = {}
    if text:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = _parse_numbers(data)
    seed = data.pop("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed: expected a nonnegative integer")
    if command == "all":
        unknown = set(data) - set(COMMANDS)
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
        cfgs = {name: _from_dict(cls, data.get(name), name) for name, cls in COMMANDS.items()}
    else:
        if command in data and len(data) == 1:
            data = data[command]
        cfgs = {command: _from_dict(COMMANDS[command], data, command)}
    for cfg in cfgs.values():
        cfg.validate()
    return seed, cfgs


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class Report:
    command: str
    seed: int
    config: dict
    rows: list
    failures: list = field(default_factory=list)
    structured: list | None = None

    @property
    def ok(self) -> bool:
        return not self.failures


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    buf.write(f"# nclp {report.command}\n")
    buf.write(f"# rng: {RNG_NAME}\n")
    buf.write(f"# seed: {report.seed}\n")
    buf.write("# config: " + json.dumps(_jsonable(report.config), sort_keys=True) + "\n")
    buf.write(f"# failures: {len(report.failures)}\n")
    cols = []
    for row in report.rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    if cols:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in report.rows:
            w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def to_doc(report: Report) -> dict:
    doc = {
        "command": report.command,
        "rng": RNG_NAME,
        "seed": report.seed,
        "config": _jsonable(report.config),
        "rows": _jsonable(report.rows),
        "failures": _jsonable(report.failures),
    }
    if report.structured is not None:
        doc["decompositions"] = report.structured
    return doc


def to_json(report: Report) -> str:
    return json.dumps(to_doc(report), indent=2, sort_keys=True) + "\n"


def _map(fn, args, jobs: int):
    """Apply ``fn`` to ``args`` in order; results do not depend on ``jobs``."""
    if jobs <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, args))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def _norms_instance(args):
    cfg, seed, idx = args
    rng = instance_rng(seed, idx)
    n = int(rng.choice(_choices(cfg.n, "n", int)))
    m = int(rng.choice(_choices(cfg.m, "m", int)))
    p = float(rng.choice(_choices(cfg.p, "p")))
    lam = _draw_weights(cfg.lam, n, rng)
    xs = OpVector.of(_draw_blocks(rng, n, m), lam)
    e = ExponentTriple(p, cfg.theta)
    row = {"id": idx, "n": n, "m": m, "p": p, "theta": cfg.theta, "q": e.q,
           "column": column_norm(xs, p), "row": weighted_row_norm(xs, p)}
    problems = []
    if p >= 2:
        row["intersection"] = intersection_norm(xs, p)
        row["sum"] = None
        row["sum_lower"] = None
    else:
        res = sum_norm(xs, p, cfg.solver)
        row["intersection"] = None
        row["sum"] = res.value
        row["sum_lower"] = res.lower_bound
        if res.lower_bound > res.value * (1 + 1e-9) + 1e-12:
            problems.append("sum_norm lower bound exceeds value")
    if p == 2:
        # C_q = l_2 at p = 2 for every theta
        spcq = float(np.sqrt(sum(np.linalg.norm(b) ** 2 for b in xs.blocks)))
    elif p > 2:
        spcq = cq_norm(xs, e, restarts=cfg.spcq_restarts)
        ub = min(spcq_upper_bounds(xs, e).values())
        if spcq > ub * (1 + 1e-9):
            problems.append("spcq exceeds its Hölder upper bound")
    else:
        spcq = cq_norm(xs, e)
    row["spcq"] = spcq
    if n == 1:
        row["schatten"] = schatten_norm(xs.blocks[0], p)
        if abs(spcq - row["schatten"]) > 1e-6 * max(1.0, row["schatten"]):
            problems.append("n=1 spcq differs from the Schatten norm")
    else:
        row["schatten"] = None
    row["ok"] = not problems
    return row, [f"norms[{idx}]: {msg}" for msg in problems]


def run_norms(cfg: NormsConfig, seed: int = 0, jobs: int = 1) -> Report:
    out = _map(_norms_instance, [(cfg, seed, i) for i in range(cfg.instances)], jobs)
    rows = [r for r, _ in out]
    failures = [f for _, fs in out for f in fs]
    return Report("norms", seed, cfg, rows, failures)


# ---------------------------------------------------------------------------
# khintchine
# ---------------------------------------------------------------------------

def _khintchine_instance(args):
    cfg, seed, idx = args
    rng = instance_rng(seed, idx)
    n = int(rng.choice(_choices(cfg.n, "n", int)))
    m = int(rng.choice(_choices(cfg.m, "m", int)))
    p = float(rng.choice(_choices(cfg.p, "p")))
    lam = _draw_weights(cfg.lam, n, rng)
    xs = OpVector.of(_draw_blocks(rng, n, m), lam)
    kcfg = fock.KhintchineConfig(depth=cfg.depth, variant=cfg.variant, solver=cfg.solver)
    rep = fock.khintchine_report(xs, cfg.kind, p, kcfg)
    row = {"id": idx}
    row.update(rep.row())
    problems = [] if rep.ok else [rep.message]
    if p == 2:
        l2 = float(np.sqrt(sum(np.linalg.norm(b) ** 2 for b in xs.blocks)))
        row["l2"] = l2
        if abs(rep.lhs - l2) > 1e-9 * max(1.0, l2):
            problems.append(f"p=2 value {rep.lhs!r} differs from l2 norm {l2!r}")
    else:
        row["l2"] = None
    if cfg.depths:
        study = fock.free_depth_study(xs, p, cfg.depths, kcfg)
        for d in sorted(study["lhs"]):
            row[f"lhs_depth{d}"] = study["lhs"][d]
            row[f"vector_state_depth{d}"] = study["vector_state"][d]
        row["depth_converged"] = study["converged"]
    row["ok"] = not problems
    return row, [f"khintchine[{idx}]: {msg}" for msg in problems]


def run_khintchine(cfg: KhintchineCliConfig, seed: int = 0, jobs: int = 1) -> Report:
    out = _map(_khintchine_instance, [(cfg, seed, i) for i in range(cfg.instances)], jobs)
    rows = [r for r, _ in out]
    failures = [f for _, fs in out for f in fs]
    if rows:
        lows = [r["ratio_lower"] for r in rows if r["ratio_lower"] is not None and math.isfinite(r["ratio_lower"])]
        ups = [r["ratio_upper"] for r in rows if r["ratio_upper"] is not None and math.isfinite(r["ratio_upper"])]
        rows.append({
            "id": "summary",
            "ratio_lower": max(lows) if lows else None,
            "ratio_upper": max(ups) if ups else None,
            "min_ratio_lower": min(lows) if lows else None,
            "min_ratio_upper": min(ups) if ups else None,
            "ok": not failures,
        })
    return Report("khintchine", seed, cfg, rows, failures)


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

def _brute_k2(c: interp.HilbertCouple, x: np.ndarray, t: float, grid: int) -> float:
    """``K_2`` by scanning real 2-d splits ``x_0`` on a box around the optimum (real data only)."""
    x0_opt = c.decomposition(x, t * t).real
    span = 2.0 * max(np.abs(x).max(), 1e-12)
    best = math.inf
    center = x0_opt
    for width in (span, span / 40, span / 1600):
        a = np.linspace(center[0] - width, center[0] + width, grid)
        b = np.linspace(center[1] - width, center[1] + width, grid)
        A, B = np.meshgrid(a, b, indexing="ij")
        X0 = np.stack([A, B], axis=-1)
        X1 = x[None, None, :] - X0
        G0, G1 = c.G0.real, c.G1.real
        val = np.einsum("ijk,kl,ijl->ij", X0, G0, X0) + t * t * np.einsum("ijk,kl,ijl->ij", X1, G1, X1)
        k = np.unravel_index(np.argmin(val), val.shape)
        best = min(best, float(val[k]))
        center = X0[k]
    return math.sqrt(max(best, 0.0))


def run_interp(cfg: InterpConfig, seed: int = 0, jobs: int = 1) -> Report:
    rows, failures = [], []
    grid = cfg.grid.build()
    # 1-d calibration against the closed form
    for th in _choices(cfg.theta, "theta"):
        for p in _choices(cfg.p, "p"):
            c = interp.HilbertCouple.diagonal([1.0], [1.0])
            val = interp.real_interp_norm(c, [1.0], th, p, grid)
            ref = interp.real_interp_norm_1d(1.0, 1.0, th, p)
            ok = abs(val - ref) <= 1e-6 * ref
            rows.append({"id": f"calib-{th}-{p}", "check": "calibration", "theta": th, "p": p,
                         "value": val, "reference": ref, "ok": ok})
            if not ok:
                failures.append(f"interp calibration theta={th} p={p}: {val!r} vs {ref!r}")
    # K_2 against a brute-force grid on random real 2-d couples
    for i in range(cfg.instances):
        rng = instance_rng(seed, i)
        L0 = rng.standard_normal((2, 2))
        L1 = rng.standard_normal((2, 2))
        c = interp.HilbertCouple(L0 @ L0.T + 0.2 * np.eye(2), L1 @ L1.T + 0.2 * np.eye(2))
        x = rng.standard_normal(2)
        t = float(np.exp(rng.uniform(-1.5, 1.5)))
        kv = interp.k_functional(c, x, t, exact=True)
        brute = _brute_k2(c, x, t, cfg.brute_grid)
        ok = abs(kv.k2 - brute) <= 1e-4 * max(1.0, brute) and kv.lower - 1e-12 <= kv.exact <= kv.upper + 1e-12
        rows.append({"id": f"k2-{i}", "check": "k2_bruteforce", "t": t, "value": kv.k2,
                     "reference": brute, "exact": kv.exact, "ok": ok})
        if not ok:
            failures.append(f"interp k2[{i}]: {kv.k2!r} vs brute {brute!r}")
    # discretized K-space against the S_p[C_q] reference
    cq = cfg.cq
    kgrid = cq.grid.build()
    for i in range(cq.instances):
        rng = instance_rng(seed, 10_000 + i)
        p = float(rng.choice(_choices(cq.p, "p")))
        th = float(rng.choice(_choices(cq.theta, "theta")))
        n = int(rng.choice(_choices(cq.n, "n", int)))
        m = int(rng.choice(_choices(cq.m, "m", int)))
        xs = OpVector.of(_draw_blocks(rng, n, m))
        e = ExponentTriple(p, th)
        res = interp.cq_k_norm(xs, e, interp.KSpaceConfig(grid=kgrid))
        ref = float(np.sqrt(sum(np.linalg.norm(b) ** 2 for b in xs.blocks))) if p == 2 else cq_norm(xs, e)
        lo, hi = interp.ratio_bracket(p, res.eps_grid)
        ratio = res.value / ref
        ok = lo <= ratio <= hi
        rows.append({"id": f"cq-{i}", "check": "cq_k_ratio", "theta": th, "p": p, "n": n, "m": m,
                     "value": res.value, "reference": ref, "ratio": ratio, "eps_grid": res.eps_grid,
                     "ok": ok})
        if not ok:
            failures.append(f"interp cq[{i}]: ratio {ratio!r} outside [{lo!r}, {hi!r}]")
    return Report("interp", seed, cfg, rows, failures)


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------

def _read_basis(cfg: DecomposeConfig):
    data = cfg.basis
    if cfg.basis_file is not None:
        try:
            with open(cfg.basis_file, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"decompose.basis_file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"decompose.basis_file line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        data = doc["basis"] if isinstance(doc, dict) else doc
    if data is None:
        return None
    try:
        cols = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"decompose.basis: {exc}") from exc
    if cols.ndim != 2 or cols.shape[1] != cfg.d0 + cfg.d1:
        raise ConfigError(f"decompose.basis: expected columns of length {cfg.d0 + cfg.d1}")
    return cols.T


def _decompose_one(spec: interp.SubspaceSpec, levels: int):
    dec = interp.graph_decompose(spec)
    err = interp.principal_angle_error(dec.reconstruct(), scipy.linalg.orth(spec.basis))
    R0, R1 = dec.projections()
    rnorm = max([interp.amplified_norm(R, m) for R in (R0, R1) for m in range(1, levels + 1)] + [0.0])
    return dec, err, rnorm


def run_decompose(cfg: DecomposeConfig, seed: int = 0, jobs: int = 1) -> Report:
    rows, failures, structured = [], [], []
    given = _read_basis(cfg)
    specs = []
    if given is not None:
        specs.append(("given", interp.SubspaceSpec(cfg.d0, cfg.d1, given)))
    else:
        for i in range(cfg.instances):
            rng = instance_rng(seed, i)
            k = int(rng.choice(_choices(cfg.dim, "dim", int)))
            specs.append((i, interp.SubspaceSpec(cfg.d0, cfg.d1, rng.standard_normal((cfg.d0 + cfg.d1, k)))))
    for ident, spec in specs:
        dec, err, rnorm = _decompose_one(spec, cfg.levels)
        ok = err <= 1e-8 and rnorm <= 1 + 1e-10
        rows.append({"id": ident, "dim": spec.dim, "dim_Y0": dec.Y0_basis.shape[1],
                     "dim_Y1": dec.Y1_basis.shape[1], "dim_Z": dec.delta.size,
                     "delta": list(dec.delta), "angle_error": err, "projection_norm": rnorm,
                     "flags": list(dec.flags), "ok": ok})
        structured.append(json.loads(dec.to_json()))
        if not ok:
            failures.append(f"decompose[{ident}]: angle {err!r}, projection norm {rnorm!r}")
    return Report("decompose", seed, cfg, rows, failures, structured)


# ---------------------------------------------------------------------------
# cb
# ---------------------------------------------------------------------------

def _cb_matrix(cfg: CbCliConfig, seed: int, idx: int) -> np.ndarray:
    if cfg.maps == "identity":
        return np.eye(cfg.n)
    rng = instance_rng(seed, idx)
    if cfg.maps == "diagonal":
        return np.diag(rng.uniform(0.1, 1.0, cfg.n))
    return (rng.standard_normal((cfg.n, cfg.n)) + 1j * rng.standard_normal((cfg.n, cfg.n))) / math.sqrt(2)


def _cb_instance(args):
    cfg, seed, idx, p, q = args
    u = _cb_matrix(cfg, seed, idx)
    mp = cbmod.CbMap(u, p, q)
    closed = cbmod.cb_norm_closed(mp)
    row = {"id": idx, "p": p, "q": q, "n": cfg.n, "closed_form": closed.value, "path": closed.path}
    problems = []
    if cfg.maps == "identity":
        expo = abs(_inv(p) - _inv(q)) / 2
        row["identity_formula"] = cfg.n ** expo
        if abs(closed.value - row["identity_formula"]) > 1e-12 * row["identity_formula"]:
            problems.append("identity map differs from n^(|p-q|/(2pq))")
    if cfg.levels:
        try:
            low = cbmod.cb_lower_amplified(mp, cfg.levels, cbmod.CbOptConfig(restarts=cfg.restarts, seed=seed + idx))
            levels = low.levels
        except ConfigError:
            levels = (None,) * cfg.levels
        for m, v in enumerate(levels, 1):
            row[f"lower_m{m}"] = v
        top = levels[-1]
        row["ratio"] = None if top is None else top / closed.value if closed.value else None
        if top is not None and top > closed.value + 1e-6:
            problems.append(f"amplified lower bound {top!r} exceeds closed form {closed.value!r}")
    row["ok"] = not problems
    return row, [f"cb[{idx}] p={p} q={q}: {msg}" for msg in problems]


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def run_cb(cfg: CbCliConfig, seed: int = 0, jobs: int = 1) -> Report:
    pairs = [(p, q) for p in _choices(cfg.p, "p") for q in _choices(cfg.q, "q")]
    out = _map(_cb_instance, [(cfg, seed, i, p, q) for i, (p, q) in enumerate(pairs)], jobs)
    return Report("cb", seed, cfg, [r for r, _ in out], [f for _, fs in out for f in fs])


RUNNERS = {
    "norms": run_norms,
    "khintchine": run_khintchine,
    "interp": run_interp,
    "decompose": run_decompose,
    "cb": run_cb,
}


def run(command: str, seed: int, cfgs: dict, jobs: int = 1) -> list[Report]:
    names = list(RUNNERS) if command == "all" else [command]
    return [RUNNERS[name](cfgs[name], seed, jobs) for name in names]


def render(reports: list[Report], fmt: str) -> str:
    if fmt == "json":
        if len(reports) == 1:
            return to_json(reports[0])
        doc = {"reports": [to_doc(r) for r in reports]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    return "\n".join(to_csv(r) for r in reports)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nclp", description="Seeded numerical checks for column/row L_p structures.")
    ap.add_argument("command", choices=list(RUNNERS) + ["all"])
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", help="output path (default stdout)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    ap.add_argument("--timing", action="store_true", help="append wall time (breaks byte reproducibility)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = None
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
        seed, cfgs = load_config(text, args.command)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            seed = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        start = time.perf_counter()
        reports = run(args.command, seed, cfgs, args.jobs)
        if args.timing:
            elapsed = time.perf_counter() - start
            for r in reports:
                for row in r.rows:
                    row["wall_time_total"] = elapsed
        text_out = render(reports, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NclpError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text_out)
    else:
        sys.stdout.write(text_out)
    failures = [f for r in reports for f in r.failures]
    if failures:
        print(json.dumps({"failures": failures}), file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
