"""``cliffdyn <command> --config <path> [--seed S] [--out DIR]``.

Exit status: 0 when every asserted invariant passes, 1 when one fails, 2 for
usage or configuration errors.  The JSON report (``report.json``) holds no
wall-clock data so that repeated runs are byte-identical; timings go to
``timing.json`` next to it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import algebra, ensemble, matmech, particle, spinors, verify, worldsheet
from .errors import CliffdynError, ConfigError, DegenerateError

SCHEMA_VERSION = 1
COMMANDS = ("resolve", "particle", "ensemble", "matmech", "string", "verify")

DEFAULTS = {
    "resolve": {"n": 3, "matrix_real": None, "matrix_imag": None},
    "particle": {"x": [0.0, 0.0, 0.0, 0.0], "p": [1.0, 0.0, 0.0, 0.0], "mu0": 0.0, "m": 1.0,
                 "einbein": {"kind": "constant", "value": 0.5}, "tau_span": [0.0, 2.0], "steps": 200},
    "ensemble": {"N": 4, "mu": 0.8, "m": 1.0, "einbein": {"kind": "constant", "value": 0.5},
                 "tau_span": [0.0, 1.0], "steps": 50, "xs": None, "ps": None, "random_unitary": True},
    "matmech": {"N": 64, "k": 1.0, "m": 20.0, "tau_span": [0.0, 1.0], "steps": 20, "alpha": [0.8, 0.3],
                "samples": 10000, "workers": 4},
    "string": {"n_tau": 32, "n_sigma": 32, "m": 1.3, "tau_span": [0.0, 1.0], "sigma_span": [0.0, 1.0],
               "mu0": 1.0},
    "verify": {"selection": None},
}


def _fmt(v):
    """Round-trippable 17-significant-digit floats inside JSON-compatible data."""
    if isinstance(v, dict):
        return {k: _fmt(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_fmt(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(f"{float(v):.17g}") if np.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return _fmt(v.tolist())
    return v


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("CLIFFDYN_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


# ----------------------------------------------------------------------
# configuration


def _positive(cfg, key, problems, integer=False, minimum=None):
    v = cfg.get(key)
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)
    if integer:
        ok = ok and float(v).is_integer()
    if ok and minimum is not None:
        ok = v >= minimum
    elif ok:
        ok = v > 0
    if not ok:
        bound = f">= {minimum}" if minimum is not None else "> 0"
        problems.append(f"{key}: expected {'an integer' if integer else 'a number'} {bound}, got {v!r}")


def _span(cfg, key, problems):
    v = cfg.get(key)
    if not (isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v) and v[1] > v[0]):
        problems.append(f"{key}: expected [start, end] with end > start, got {v!r}")


def _vector(cfg, key, problems, length=4, allow_none=False):
    v = cfg.get(key)
    if v is None and allow_none:
        return
    arr = np.asarray(v, dtype=object)
    if arr.shape[-1:] != (length,) or not all(isinstance(x, (int, float)) for x in arr.ravel()):
        problems.append(f"{key}: expected numeric vector(s) of length {length}, got {v!r}")


def load_config(command: str, path=None) -> dict:
    if command not in COMMANDS:
        raise ConfigError(f"command: unknown {command!r}, expected one of {', '.join(COMMANDS)}")
    cfg = dict(DEFAULTS[command])
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config: file {path} not found")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})")
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be a JSON object")
        raw.pop("command", None)
        seed = raw.pop("seed", None)
        unknown = sorted(set(raw) - set(cfg))
        if unknown:
            raise ConfigError([f"{k}: unknown field for {command}" for k in unknown])
        cfg.update(raw)
        if seed is not None:
            cfg["seed"] = seed
    validate(command, cfg)
    return cfg


def validate(command: str, cfg: dict):
    problems = []
    if command == "resolve":
        _positive(cfg, "n", problems, integer=True)
        if not problems and 4 * cfg["n"] > algebra.MAX_GENERATORS:
            problems.append(f"n: 4n must not exceed {algebra.MAX_GENERATORS}")
        for key in ("matrix_real", "matrix_imag"):
            v = cfg.get(key)
            if v is not None and np.asarray(v).shape != (cfg["n"], cfg["n"]):
                problems.append(f"{key}: expected an n x n array")
    elif command == "particle":
        _vector(cfg, "x", problems)
        _vector(cfg, "p", problems)
        _positive(cfg, "m", problems)
        _positive(cfg, "steps", problems, integer=True)
        _span(cfg, "tau_span", problems)
        if not isinstance(cfg.get("mu0"), (int, float)):
            problems.append(f"mu0: expected a number, got {cfg.get('mu0')!r}")
        try:
            particle.EinbeinProfile.from_dict(cfg.get("einbein", {}))
        except (TypeError, ValueError, KeyError) as exc:
            problems.append(f"einbein: {exc}")
    elif command == "ensemble":
        _positive(cfg, "N", problems, integer=True)
        _positive(cfg, "m", problems)
        _positive(cfg, "steps", problems, integer=True)
        _span(cfg, "tau_span", problems)
        _vector(cfg, "xs", problems, allow_none=True)
        _vector(cfg, "ps", problems, allow_none=True)
        if not isinstance(cfg.get("mu"), (int, float)):
            problems.append(f"mu: expected a number, got {cfg.get('mu')!r}")
        try:
            particle.EinbeinProfile.from_dict(cfg.get("einbein", {}))
        except (TypeError, ValueError, KeyError) as exc:
            problems.append(f"einbein: {exc}")
    elif command == "matmech":
        _positive(cfg, "N", problems, integer=True, minimum=2)
        _positive(cfg, "k", problems)
        _positive(cfg, "m", problems)
        _positive(cfg, "steps", problems, integer=True)
        _positive(cfg, "samples", problems, integer=True)
        _positive(cfg, "workers", problems, integer=True)
        _span(cfg, "tau_span", problems)
        _vector(cfg, "alpha", problems, length=2)
    elif command == "string":
        _positive(cfg, "n_tau", problems, integer=True, minimum=3)
        _positive(cfg, "n_sigma", problems, integer=True, minimum=3)
        _positive(cfg, "m", problems)
        _positive(cfg, "mu0", problems)
        _span(cfg, "tau_span", problems)
        _span(cfg, "sigma_span", problems)
        if not problems and max(cfg["n_tau"], cfg["n_sigma"]) > 256:
            problems.append("n_tau/n_sigma: grids are limited to 256 nodes per side")
    elif command == "verify":
        sel = cfg.get("selection")
        if sel is not None:
            if isinstance(sel, str):
                sel = [sel]
                cfg["selection"] = sel
            bad = [s for s in sel if s not in verify.SUITES]
            if bad:
                problems.append(f"selection: unknown suites {bad}, expected any of {list(verify.SUITES)}")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append(f"seed: expected a non-negative integer, got {seed!r}")
    if problems:
        raise ConfigError(problems)


# ----------------------------------------------------------------------
# pipelines; each returns (checks, outputs, summary)


def _chk(name, value, bound, kind="max", suite=None):
    return verify.CheckResult(suite or "run", name, float(value), float(bound), kind)


def run_resolve(cfg, rng, out: Path):
    n = int(cfg["n"])
    if cfg.get("matrix_real") is None:
        H = verify.random_hermitian(n, rng)
    else:
        H = np.asarray(cfg["matrix_real"], float) + 1j * np.asarray(cfg.get("matrix_imag") or np.zeros((n, n)), float)
    ctx = algebra.make_algebra(n)
    c = spinors.resolve_hermitian(H, ctx)
    r1, r2 = spinors.gram_residuals(c, H, ctx)
    data = {"schema_version": SCHEMA_VERSION, "n": n, "H_real": H.real, "H_imag": H.imag,
            "coefficients_real": c.real, "coefficients_imag": c.imag,
            "eigenvalues": np.linalg.eigvalsh(0.5 * (H + H.conj().T))}
    path = out / "resolve.json"
    _atomic_write(path, json.dumps(_fmt(data), indent=2, sort_keys=True))
    return [_chk("gram_reconstruction", r1, 1e-10), _chk("unstarred_gram", r2, 1e-10)], [path.name], {}


def run_particle(cfg, rng, out: Path):
    ctx = algebra.make_algebra(spinors.PAIRS_PER_PARTICLE)
    m = float(cfg["m"])
    pp = spinors.resolve_phase_point(cfg["x"], cfg["p"], cfg["mu0"], ctx)
    eb = particle.EinbeinProfile.from_dict(cfg["einbein"])
    traj = particle.evolve(pp, eb, m, cfg["tau_span"], int(cfg["steps"]))
    path = out / "trajectory.csv"
    particle.write_trajectory_csv(traj, path)
    checks = [
        _chk("noether_charge_drift", max(ch.size for ch in traj.charges()), 1e-9),
        _chk("mu_closed_form", np.max(np.abs(traj.mu - traj.mu_exact(traj.tau))), 1e-9),
    ]
    if traj.on_shell:
        checks.append(_chk("mass_shell", abs(traj.mass_shell_residual), 1e-9))
    try:
        tp = particle.turning_point(traj)
    except DegenerateError:
        tp = None
    return checks, [path.name], {"on_shell": traj.on_shell, "turning_point": tp}


def run_ensemble(cfg, rng, out: Path):
    N = int(cfg["N"])
    xs = rng.standard_normal((N, 4)) if cfg.get("xs") is None else np.asarray(cfg["xs"], float)
    ps = np.array([verify.timelike(rng, cfg["m"]) for _ in range(N)]) if cfg.get("ps") is None else np.asarray(cfg["ps"], float)
    if xs.shape != (N, 4) or ps.shape != (N, 4):
        raise ConfigError("xs/ps: expected N rows of four-vectors")
    st = ensemble.build_ensemble(xs, ps, cfg["mu"])
    if cfg.get("random_unitary", True):
        st = ensemble.apply_gauge(st, ensemble.random_unitary(N, rng))
    eb = particle.EinbeinProfile.from_dict(cfg["einbein"])
    run = ensemble.evolve_ensemble(st, eb, cfg["m"], cfg["tau_span"], int(cfg["steps"]))
    csv_path, json_path = out / "tracks.csv", out / "tracks.json"
    obs = ensemble.assemble(st)
    _, tracks = ensemble.gauge_back(obs)
    M = st.noether_matrix()
    target = cfg["mu"] * np.einsum("AB,ij->ABij", np.eye(2), np.eye(N))
    ensemble.write_tracks(run, csv_path, json_path, extra={"recovered_tracks": _fmt(tracks)})
    checks = [
        _chk("hermiticity", obs.hermiticity_residual(), 1e-12),
        _chk("commutators", obs.max_commutator(), 1e-8),
        _chk("noether_matrix", np.max(np.abs(M - target)), 1e-10),
        _chk("charges", max(float(np.max(np.abs(ensemble.ensemble_charges(st)[0]))), abs(ensemble.ensemble_charges(st)[1])), 1e-9),
    ]
    return checks, [csv_path.name, json_path.name], {}


def run_matmech(cfg, rng, out: Path):
    N, k, m = int(cfg["N"]), float(cfg["k"]), float(cfg["m"])
    pair = matmech.build_truncated_pair(N, k)
    s = matmech.coherent_state(N, complex(*cfg["alpha"]))
    series = matmech.heisenberg_evolve(pair, m, cfg["tau_span"], int(cfg["steps"]))
    csv_path, hist_path = out / "expectation.csv", out / "histogram.json"
    matmech.write_expectation_csv(pair, s, m, cfg["tau_span"], int(cfg["steps"]), csv_path)
    hist = matmech.born_sample(s, pair.X, int(cfg["samples"]), seed=int(rng.integers(2**31)),
                               workers=int(cfg["workers"]), threads=thread_cap())
    matmech.write_histogram_json(hist, hist_path)
    d = pair.defect()
    d[-1, -1] = 0
    checks = [
        _chk("commutator_off_corner", np.max(np.abs(d)), 1e-12),
        _chk("heisenberg_closed_form_interior", series.interior_error(), 1e-8),
        _chk("born_chi_square_pvalue", hist.chi_square()[1], 0.01, kind="min"),
    ]
    return checks, [csv_path.name, hist_path.name], {"interior_supported": s.interior_supported()}


def run_string(cfg, rng, out: Path):
    m = float(cfg["m"])
    tau = np.linspace(*cfg["tau_span"], int(cfg["n_tau"]))
    sig = np.linspace(*cfg["sigma_span"], int(cfg["n_sigma"]))
    xs = np.stack([0 * sig, np.cos(sig), np.sin(sig), 0.3 * sig], 1)
    v = np.stack([0.2 * np.sin(sig), 0.1 * sig, 0 * sig], 1)
    ps = np.concatenate([np.sqrt(m * m + np.sum(v * v, 1))[:, None], v], 1)
    sheet = worldsheet.reduced_evolve(xs, ps, cfg["mu0"] * (1.0 + 0.2 * (sig - sig[0])), m, tau, sig)
    res = sheet.residuals()
    field = worldsheet.random_smooth_field(algebra.make_algebra(4), int(rng.integers(2**31)),
                                           n=min(int(cfg["n_tau"]), int(cfg["n_sigma"])))
    geo = worldsheet.induced_geometry(field)
    ident = worldsheet.identity_report(field, m)
    csv_path, json_path = out / "worldsheet.csv", out / "worldsheet.json"
    worldsheet.write_worldsheet(field, geo, m, csv_path, json_path,
                                extra={"reduced_residuals": _fmt(res), "identities": _fmt(ident)})
    checks = [
        _chk("metric_hermiticity", ident["hermiticity"], 1e-12),
        _chk("metric_recomposition", ident["recomposition"], 1e-12),
        _chk("momentum_square", ident["momentum_square"], 1e-8),
        _chk("pairing", ident["pairing"], 1e-8),
        _chk("first_order_vs_second_order", ident["first_order_vs_second_order"], 1e-8),
        _chk("reduced_mass_shell", res["mass_shell"], 1e-6),
        _chk("reduced_dx_dtau", res["dx_dtau"], 1e-8),
        _chk("reduced_column_vs_particle", worldsheet.column_vs_particle(sheet, 0), 1e-8),
    ]
    return checks, [csv_path.name, json_path.name], {}


def run_verify(cfg, rng, out: Path, seed: int):
    results = verify.verify_all(cfg.get("selection"), seed=seed)
    return results, [], {"invariant_count": len(results)}


PIPELINES = {"resolve": run_resolve, "particle": run_particle, "ensemble": run_ensemble,
             "matmech": run_matmech, "string": run_string}


def run(command: str, cfg: dict, seed: int, out: Path) -> dict:
    """Execute one pipeline and write ``report.json``; returns the report."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    if command == "verify":
        checks, outputs, summary = run_verify(cfg, rng, out, seed)
    else:
        checks, outputs, summary = PIPELINES[command](cfg, rng, out)
    elapsed = time.perf_counter() - t0
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "config": {k: v for k, v in cfg.items() if k != "seed"},
        "checks": [c.to_dict() for c in checks],
        "outputs": outputs + ["report.json"],
        "summary": summary,
        "passed": all(c.passed for c in checks),
    }
    _atomic_write(out / "report.json", json.dumps(_fmt(report), indent=2, sort_keys=True) + "\n")
    _atomic_write(out / "timing.json", json.dumps({"wall_clock_seconds": elapsed}) + "\n")
    return report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cliffdyn", description="Clifford-space particle, ensemble and string dynamics")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON configuration file (defaults are used when omitted)")
    ap.add_argument("--seed", type=int, default=None, help="overrides the seed from the config (default 0)")
    ap.add_argument("--out", default="cliffdyn_out", help="output directory")
    ap.add_argument("--quiet", action="store_true", help="print only the final status line")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args.command, args.config)
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        if seed < 0:
            raise ConfigError(f"seed: expected a non-negative integer, got {seed}")
        report = run(args.command, cfg, seed, Path(args.out))
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    except CliffdynError as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        for c in report["checks"]:
            mark = "PASS" if c["passed"] else "FAIL"
            op = "<=" if c["kind"] == "max" else ">="
            print(f"{mark}  {c['suite']:<18} {c['name']:<34} {c['value']:.3e} {op} {c['bound']:.0e}")
    n_fail = sum(not c["passed"] for c in report["checks"])
    print(f"{args.command}: {len(report['checks']) - n_fail}/{len(report['checks'])} checks passed; report in {args.out}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
