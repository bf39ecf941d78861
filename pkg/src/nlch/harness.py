"""Experiment orchestration: identity suites, consistency studies, single runs,
eps- and delta-sweeps, and the reproducibility manifest."""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .diagnostics import CSV_HEADER, eps_convergence_report
from .errors import ConfigParse, DegenerateInput, InvalidParameter, MismatchedRuns
from .grid import Grid, atomic_write, face_norm2, grad, integrate, snapshot_binary, snapshot_text
from .kernel import build_kernel, convolve
from .mobility import MobilityProfile, entropy_property_suite, phi
from .nonlocal_ops import (
    apply_B,
    bbm_energy,
    consistency_error,
    duality_gap,
    poincare_ratio,
    product_rule_residual,
)
from .potential import mollify_check
from .solver import Trajectory, make_initial, simulate

DEFAULT_EPS = (0.2, 0.1, 0.05)
DEFAULT_DELTA = (0.2, 0.1, 0.05)


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    kind: str = "<="  # how value compares with threshold
    upper: float | None = None  # upper end when kind == "in"

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        thr = f"[{self.threshold:g}, {self.upper:g}]" if self.kind == "in" else f"{self.threshold:.3g}"
        return f"{self.name:<34} {self.value:>13.4e} {self.kind:>2} {thr:<11} {flag}"


def parse_list(text: str | None, default) -> list[float]:
    if text is None:
        return list(default)
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigParse(f"cannot parse number list {text!r}") from exc


def thread_cap() -> int:
    raw = os.environ.get("NLCH_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        val = int(raw)
    except ValueError as exc:
        raise ConfigParse(f"NLCH_THREADS must be an integer, got {raw!r}") from exc
    return max(1, val)


def _clean(obj):
    """JSON-safe copy: non-finite floats become None, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, obj) -> None:
    atomic_write(path, (json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n").encode())


def write_csv(path: Path, header: str, rows) -> None:
    buf = io.StringIO()
    buf.write(header + "\n")
    for row in rows:
        buf.write(",".join("nan" if v is None else (repr(float(v)) if not isinstance(v, str) else v)
                           for v in row) + "\n")
    atomic_write(path, buf.getvalue().encode())


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, spec: dict, extra: dict, wall: float) -> None:
    files = {}
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name != "manifest.json" and not p.name.startswith("."):
            files[str(p.relative_to(out))] = sha256(p)
    manifest = dict(command=command, version=__version__, config=spec, files=files,
                    timing=dict(wall_seconds=wall), **extra)
    write_json(out / "manifest.json", manifest)


# --- identity suites ------------------------------------------------------------


def operator_identity_checks(grid: Grid, kernel, pairs: int = 100, seed: int = 0) -> list[Check]:
    """Duality, product rule, PSD, constant annihilation and fast/direct agreement."""
    rng = np.random.default_rng(seed)
    eps = kernel.eps
    c_max = math.sqrt(float(np.max(kernel.weights))) / (math.sqrt(2.0) * eps)
    dual = prod = conv = 0.0
    psd = math.inf
    for _ in range(pairs):
        f = rng.standard_normal(grid.shape)
        g = rng.standard_normal(grid.shape)
        mf, mg = float(np.max(np.abs(f))), float(np.max(np.abs(g)))
        dual = max(dual, duality_gap(kernel, f, g) / (2.0 * mf * mg / eps**2))
        prod = max(prod, product_rule_residual(kernel, f, g) / (c_max * mf * mg))
        q = integrate(grid, apply_B(kernel, f, path="direct") * f)
        psd = min(psd, q / (2.0 * mf * mf / eps**2))
        direct = convolve(kernel, f, path="direct")
        fast = convolve(kernel, f, path="fft")
        conv = max(conv, float(np.max(np.abs(fast - direct)) / np.max(np.abs(direct))))
    const = 0.0
    for c in (0.0, 1.0, -2.5, 0.3, 1e3 / 7.0):
        f = np.full(grid.shape, c)
        for path in ("fft", "direct"):
            const = max(const, float(np.max(np.abs(apply_B(kernel, f, path=path)))))
    tag = f"d={grid.dim} n={grid.n}"
    return [
        Check(f"duality_gap/scale [{tag}]", dual, 1e-12, dual <= 1e-12),
        Check(f"product_rule/scale [{tag}]", prod, 1e-13, prod <= 1e-13),
        Check(f"psd_witness/scale [{tag}]", psd, -1e-12, psd >= -1e-12, ">="),
        Check(f"B[const] max [{tag}]", const, 1e-13, const <= 1e-13),
        Check(f"fft_vs_direct rel [{tag}]", conv, 1e-12, conv <= 1e-12),
    ]


@dataclass
class ConsistencyRow:
    eps: float
    D_eff: float
    err_operator: float
    err_bbm: float
    err_poincare: float | None
    order_operator: float | str | None = None
    order_bbm: float | str | None = None
    order_poincare: float | str | None = None


def _order(e_prev, e, r):
    if e_prev is None or e is None:
        return None
    if e_prev == 0.0 and e == 0.0:
        return "exact"
    if e_prev <= 0.0 or e <= 0.0:
        return None
    return math.log(e_prev / e) / math.log(r)


def _fourier_poincare(grid: Grid, u: np.ndarray, D: float) -> float:
    U = np.fft.fftn(u)
    q = np.meshgrid(*([np.fft.fftfreq(grid.n, d=1.0 / grid.n)] * grid.dim), indexing="ij")
    k2 = sum((2.0 * np.pi * qa) ** 2 for qa in q)
    p = np.abs(U) ** 2
    return 2.0 * D * float(np.sum(k2 * p)) / float(np.sum(p) - p.flat[0])


def consistency_table(profile: str, eps_list, grid: Grid, u: np.ndarray) -> list[ConsistencyRow]:
    """Errors of B_eps vs -D_eff lap, bbm vs (D_eff/2)||grad u||^2 and the
    Poincare ratio vs its Fourier limit, with observed orders between rows."""
    rows = []
    g2 = face_norm2(grid, grad(grid, u))
    for eps in sorted(eps_list, reverse=True):
        k = build_kernel(profile, eps, grid)
        ea = consistency_error(k, u)
        eb = abs(bbm_energy(k, u) - 0.5 * k.D2 * g2)
        try:
            ec = abs(poincare_ratio(k, u) - _fourier_poincare(grid, u, k.D2))
        except DegenerateInput:
            ec = None
        rows.append(ConsistencyRow(eps, k.D2, ea, eb, ec))
    for prev, row in zip(rows, rows[1:]):
        r = prev.eps / row.eps
        row.order_operator = _order(prev.err_operator, row.err_operator, r)
        row.order_bbm = _order(prev.err_bbm, row.err_bbm, r)
        row.order_poincare = _order(prev.err_poincare, row.err_poincare, r)
    return rows


def smooth_probe(grid: Grid) -> np.ndarray:
    return 1.0 + 0.5 * np.sin(2.0 * np.pi * grid.coords()[0])


def consistency_checks(profile: str, eps_list=DEFAULT_EPS, n: int = 1024) -> list[Check]:
    grid = Grid(1, n)
    rows = consistency_table(profile, eps_list, grid, smooth_probe(grid))
    checks = []
    for row in rows[1:]:
        for label, order in (("operator", row.order_operator), ("bbm", row.order_bbm)):
            val = float(order) if isinstance(order, float) else float("nan")
            checks.append(Check(f"order {label} eps={row.eps:g}", val, 1.8, 1.8 <= val <= 2.2, "in", 2.2))
    return checks


def validate_suite(spec: dict) -> list[Check]:
    cfg = cfgmod.build(spec)
    checks = operator_identity_checks(cfg.grid, cfg.kernel, pairs=20)
    checks += consistency_checks(spec["kernel"]["profile"])
    deltas = sorted(set(DEFAULT_DELTA) | ({cfg.delta} if cfg.delta > 0 else set()), reverse=True)
    for name, (val, ok) in entropy_property_suite(deltas).items():
        thr = 1e-6 if name == "P1" else (1e-12 if name == "P2" else 0.0)
        checks.append(Check(f"phi_delta {name}", val, thr, bool(ok), "<=" if name in ("P1", "P2") else ">="))
    rep = mollify_check(cfg.potential, 0.1)
    checks.append(Check("mollify_check worst slack", rep.worst_slack, 0.0, rep.worst_slack >= 0.0, ">="))
    return checks


# --- runs -----------------------------------------------------------------------


def _snap_name(t: float) -> str:
    return f"snap_{t:.10g}.dat"


def write_trajectory(out: Path, tr: Trajectory, binary: bool, snapshots: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    body = CSV_HEADER + "\n" + "".join(r.csv_row() + "\n" for r in tr.records)
    atomic_write(out / "diag.csv", body.encode())
    if snapshots:
        for t, u in zip(tr.times, tr.fields):
            data = snapshot_binary(tr.grid, u, t) if binary else snapshot_text(tr.grid, u, t)
            atomic_write(out / _snap_name(t), data)


def _run_member(args):
    spec, overrides, out_dir = args
    cfg = cfgmod.build(spec, **overrides)
    tr = simulate(cfg)
    if out_dir is not None:
        write_trajectory(Path(out_dir), tr, spec["output"]["binary"], spec["output"]["snapshots"])
    return dict(grid=(cfg.grid.dim, cfg.grid.n), times=tr.times, fields=tr.fields, records=tr.records,
                accepts=tr.accepts, rejects=tr.rejects, steps=tr.steps, D_eff=cfg.kernel.D2,
                model=cfg.model.kind, delta=cfg.delta, eps=cfg.eps)


def run_members(tasks: list) -> list[dict]:
    """Run independent simulations, in worker processes when NLCH_THREADS > 1."""
    workers = min(len(tasks), thread_cap())
    if workers <= 1:
        return [_run_member(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_member, tasks))


def _as_traj(res: dict) -> Trajectory:
    tr = Trajectory(grid=Grid(*res["grid"]), times=list(res["times"]), fields=list(res["fields"]),
                    records=list(res["records"]))
    tr.accepts, tr.rejects, tr.steps = res["accepts"], res["rejects"], res["steps"]
    return tr


def run_report(spec: dict, res: dict) -> dict:
    recs = res["records"]
    E = [r.E_eps if res["model"] != "local_deg" else r.E_local for r in recs]
    return dict(
        config=spec,
        model=res["model"],
        eps=res["eps"],
        delta=res["delta"],
        D_eff=res["D_eff"],
        steps=res["steps"],
        accepts=res["accepts"],
        rejects=res["rejects"],
        energy_ledger=abs(recs[-1].diss_E),
        entropy_ledger=abs(recs[-1].diss_S) if math.isfinite(recs[-1].diss_S) else None,
        energy_nonincreasing=bool(all(b <= a + 1e-10 * (1 + abs(a)) for a, b in zip(E, E[1:]))),
        mass_drift=abs(recs[-1].mass - recs[0].mass) / max(abs(recs[0].mass), 1e-300),
        min_u=min(r.min_u for r in recs),
        final=asdict(recs[-1]),
    )


def cmd_run(spec: dict, out: Path) -> dict:
    t0 = time.perf_counter()
    out.mkdir(parents=True, exist_ok=True)
    res = _run_member((spec, {}, str(out)))
    report = run_report(spec, res)
    write_json(out / "report.json", report)
    write_manifest(out, "run", spec, dict(
        D_eff=res["D_eff"], grid=dict(dim=spec["grid"]["dim"], n=spec["grid"]["n"]),
        counters=dict(steps=res["steps"], accepts=res["accepts"], rejects=res["rejects"]),
    ), time.perf_counter() - t0)
    return report


def cmd_sweep_eps(spec: dict, eps_list, out: Path | None) -> list:
    if not eps_list:
        raise ConfigParse("empty eps list")
    if len(set(eps_list)) != len(eps_list):
        raise MismatchedRuns("eps list contains repeated values")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidParameter("eps list must be strictly descending")
    t0 = time.perf_counter()
    sub = (lambda name: str(out / name)) if out is not None else (lambda name: None)
    tasks = [(spec, dict(kind="local"), sub("local"))]
    tasks += [(spec, dict(eps=e, kind="nonlocal"), sub(f"eps_{e:g}")) for e in eps_list]
    results = run_members(tasks)
    local = _as_traj(results[0])
    runs = {e: _as_traj(r) for e, r in zip(eps_list, results[1:])}
    rows = eps_convergence_report(runs, local)
    if out is not None:
        write_csv(out / "eps_report.csv", "eps,D_eff,distance,order",
                  [(r.eps, res["D_eff"], r.distance, r.order) for r, res in zip(rows, results[1:])])
        dists = [r.distance for r in rows]
        write_json(out / "report.json", dict(
            config=spec, local_D_eff=results[0]["D_eff"], rows=[asdict(r) for r in rows],
            strictly_decreasing=all(b < a for a, b in zip(dists, dists[1:])),
        ))
        write_manifest(out, "sweep-eps", spec, dict(
            D_eff={f"{e:g}": r["D_eff"] for e, r in zip(eps_list, results[1:])},
            counters={r["model"] + f"_{r['eps']:g}": dict(steps=r["steps"], accepts=r["accepts"],
                                                           rejects=r["rejects"]) for r in results},
        ), time.perf_counter() - t0)
    return rows


@dataclass
class DeltaRow:
    delta: float
    dist_to_degenerate: float
    cauchy_to_next: float | None
    coincides_with_degenerate: bool
    Phi_delta_u0: float
    P4_bound_u0: float


def cmd_sweep_delta(spec: dict, delta_list, out: Path | None) -> list[DeltaRow]:
    if not delta_list:
        raise ConfigParse("empty delta list")
    if any(b >= a for a, b in zip(delta_list, delta_list[1:])):
        raise InvalidParameter("delta list must be strictly descending")
    for d in delta_list:
        MobilityProfile(d)
    t0 = time.perf_counter()
    sub = (lambda name: str(out / name)) if out is not None else (lambda name: None)
    tasks = [(spec, dict(kind="nonlocal", delta=0.0), sub("degenerate"))]
    tasks += [(spec, dict(kind="nonlocal", delta=d), sub(f"delta_{d:g}")) for d in delta_list]
    # the degenerate member must not be rerouted through T_delta
    spec_deg = dict(spec, model=dict(spec["model"], route_via_reg=False))
    tasks[0] = (spec_deg,) + tasks[0][1:]
    results = run_members(tasks)
    deg = _as_traj(results[0])
    trs = [_as_traj(r) for r in results[1:]]
    g = deg.grid

    def l2(a, b):
        return [math.sqrt(integrate(g, (x - y) ** 2)) for x, y in zip(a.fields, b.fields)]

    u0 = deg.fields[0]
    rows = []
    per_time = {}
    for i, (d, tr) in enumerate(zip(delta_list, trs)):
        dist = l2(tr, deg)
        per_time[f"{d:g}"] = dist
        cauchy = max(l2(tr, trs[i + 1])) if i + 1 < len(trs) else None
        m = MobilityProfile(d)
        rows.append(DeltaRow(
            delta=d,
            dist_to_degenerate=max(dist),
            cauchy_to_next=cauchy,
            coincides_with_degenerate=all(np.array_equal(x, y) for x, y in zip(tr.fields, deg.fields)),
            Phi_delta_u0=integrate(g, m.phi_delta(u0)),
            P4_bound_u0=integrate(g, phi(np.maximum(u0, 0.0)) + d / (2.0 * (1.0 - d)) * u0**2 + 3.0),
        ))
    if out is not None:
        write_csv(out / "delta_report.csv",
                  "delta,dist_to_degenerate,cauchy_to_next,coincides,Phi_delta_u0,P4_bound_u0",
                  [(r.delta, r.dist_to_degenerate, r.cauchy_to_next, str(r.coincides_with_degenerate).lower(),
                    r.Phi_delta_u0, r.P4_bound_u0) for r in rows])
        cauchy = [r.cauchy_to_next for r in rows if r.cauchy_to_next is not None]
        write_json(out / "report.json", dict(
            config=spec, rows=[asdict(r) for r in rows], dist_per_output=per_time, times=deg.times,
            cauchy_decreasing=all(b < a for a, b in zip(cauchy, cauchy[1:])),
        ))
        write_manifest(out, "sweep-delta", spec, dict(
            counters={f"{r['model']}_{r['delta']:g}": dict(steps=r["steps"], accepts=r["accepts"],
                                                            rejects=r["rejects"]) for r in results},
        ), time.perf_counter() - t0)
    return rows


def cmd_consistency(spec: dict, eps_list, out: Path | None) -> list[ConsistencyRow]:
    cfg = cfgmod.build(spec)
    u = make_initial(cfg)
    rows = consistency_table(spec["kernel"]["profile"], eps_list, cfg.grid, u)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "consistency.csv",
                  "eps,D_eff,err_operator,err_bbm,err_poincare,order_operator,order_bbm,order_poincare",
                  [(r.eps, r.D_eff, r.err_operator, r.err_bbm, r.err_poincare,
                    *(o if isinstance(o, (str, type(None))) else float(o)
                      for o in (r.order_operator, r.order_bbm, r.order_poincare))) for r in rows])
        write_json(out / "report.json", dict(config=spec, rows=[asdict(r) for r in rows]))
    return rows
