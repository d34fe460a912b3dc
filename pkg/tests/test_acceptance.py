"""Acceptance criteria 1-9, each reported as one PASS/FAIL line.

The lines appear in the ``acceptance criteria`` section of the pytest
terminal summary.  Run ``python3 tests/test_acceptance.py`` to print them
without pytest.
"""

import json
import subprocess
import sys
import time

import numpy as np
from scipy.optimize import linear_sum_assignment

from cliffdyn import algebra, ensemble, matmech, particle, spinors, worldsheet
from cliffdyn.errors import NotGaugeableError
from cliffdyn.verify import random_hermitian, signature_hermitian, timelike


def line(k, ok, detail):
    return f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"


def criterion_1():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    rec = unstar = 0.0
    for n in range(1, 7):
        ctx = algebra.make_algebra(n)
        sigs = [(a, b) for a in range(n + 1) for b in range(n - a + 1)]
        for t in range(200):
            npos, nneg = sigs[t % len(sigs)]
            H = signature_hermitian(n, npos, nneg, rng) if t < 100 else random_hermitian(n, rng)
            r1, r2 = spinors.gram_residuals(spinors.resolve_hermitian(H, ctx), H, ctx)
            rec, unstar = max(rec, r1), max(unstar, r2)
    dt = time.perf_counter() - t0
    ok = rec < 1e-10 and unstar < 1e-10 and dt < 10
    return ok, f"resolve_hermitian gram={rec:.2e} unstarred={unstar:.2e} (<1e-10), {dt:.2f}s (<10s)"


def criterion_2():
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        ctx = algebra.make_algebra(1 + i % 4)
        a, b = algebra.random_cvector(ctx, rng), algebra.random_cvector(ctx, rng)
        worst = max(worst, abs(algebra.inner(a, b) - algebra.anticommutator_inner(a, b)))
    dt = time.perf_counter() - t0
    return worst < 1e-12 and dt < 5, f"inner vs anticommutator {worst:.2e} (<1e-12), {dt:.2f}s (<5s)"


def criterion_3():
    rng = np.random.default_rng(103)
    worst = max(spinors.four_vector_rule_residual(random_hermitian(2, rng)) for _ in range(100))
    return worst < 1e-12, f"four-vector rule {worst:.2e} (<1e-12)"


def criterion_4():
    rng = np.random.default_rng(104)
    ctx = algebra.make_algebra(5)
    shell = charge = mu_err = rk_err = 0.0
    for eb in (particle.EinbeinProfile.constant(0.8), particle.EinbeinProfile.linear(0.5, 0.3),
               particle.EinbeinProfile.tabulated([0, 2, 5, 10], [0.4, 1.0, 0.7, 0.9])):
        m = rng.uniform(0.5, 2.0)
        pp = spinors.resolve_phase_point(rng.standard_normal(4), timelike(rng, m), rng.uniform(-1, 1), ctx)
        traj = particle.evolve(pp, eb, m, (0.0, 10.0), 1000)
        p = traj.p
        shell = max(shell, abs(float(p @ spinors.ETA @ p) - m * m))
        charge = max(charge, max(ch.size for ch in traj.charges()))
        mu_err = max(mu_err, float(np.max(np.abs(traj.mu - traj.mu_exact(traj.tau)))))
        if eb.kind != "tabulated":  # RK4 is exact only for a smooth einbein
            rk = particle.rk4_evolve(pp, eb, (0.0, 10.0), 1000)
            rk_err = max(rk_err, float(np.max(np.abs(rk - traj.c))))
    pp = spinors.resolve_phase_point(np.zeros(4), [1.0, 0, 0, 0], 0.0, ctx)
    sym = particle.evolve(pp, particle.EinbeinProfile.constant(0.5), 1.0, (-5.0, 5.0), 1000, tau_start=0.0)
    cover = particle.double_cover_residual(sym, 0.0, np.linspace(0.01, 5.0, 100))
    ok = shell < 1e-9 and charge < 1e-9 and mu_err < 1e-9 and rk_err < 1e-8 and cover < 1e-10
    return ok, (f"mass-shell {shell:.1e} charges {charge:.1e} mu {mu_err:.1e} (<1e-9), "
                f"rk4 {rk_err:.1e} (<1e-8), double cover {cover:.1e} (<1e-10)")


def criterion_5():
    rng = np.random.default_rng(105)
    ctx = algebra.make_algebra(5)
    worst = 0.0
    for _ in range(5):
        pp = spinors.resolve_phase_point(rng.standard_normal(4), timelike(rng, 1.0), rng.uniform(0.2, 1.0), ctx)
        a = particle.evolve(pp, particle.EinbeinProfile.constant(0.5), 1.0, (0.0, 4.0), 400)
        b = particle.evolve(pp, particle.EinbeinProfile.linear(0.1, 0.4), 1.0, (0.0, 4.0), 400)
        top = min(particle.proper_time(a)[-1], particle.proper_time(b)[-1])
        tb = np.linspace(0.0, top, 201)
        # evaluate each run at its own parameter values tau(tau_bar), found by inverting its einbein
        xa = a.x_at(particle.proper_time_reparametrize(a, tau_bar=tb).tau)
        xb = b.x_at(particle.proper_time_reparametrize(b, tau_bar=tb).tau)
        worst = max(worst, float(np.max(np.abs(xa - xb))))
    return worst < 1e-7, f"x(tau_bar) agreement {worst:.2e} (<1e-7)"


def criterion_6():
    rng = np.random.default_rng(106)
    act = noe = gb = 0.0
    recovered = True
    eb = particle.EinbeinProfile.constant(0.7)
    for N in (2, 5, 8):
        xs = rng.standard_normal((N, 4))
        ps = np.array([timelike(rng) for _ in range(N)])
        st = ensemble.build_ensemble(xs, ps, 0.6, phi=np.diag(rng.uniform(0.5, 2, N)))
        base = ensemble.action_value(st, eb, 1.0, (0, 1), 100)
        target = 0.6 * np.einsum("AB,ij->ABij", np.eye(2), np.eye(N))
        truth = np.concatenate([xs, ps], 1)
        for _ in range(50 if N == 8 else 10):
            U = ensemble.random_unitary(N, rng)
            g = ensemble.apply_gauge(st, U)
            act = max(act, abs(ensemble.action_value(g, eb, 1.0, (0, 1), 100) - base) / max(1, abs(base)))
            noe = max(noe, float(np.max(np.abs(g.noether_matrix() - target))))
            try:
                V, tracks = ensemble.gauge_back(ensemble.assemble(g))
            except NotGaugeableError:
                recovered = False
                continue
            r, c = linear_sum_assignment(np.linalg.norm(truth[:, None] - tracks[None], axis=-1))
            gb = max(gb, float(np.max(np.abs(truth[r] - tracks[c]))))
    ok = act < 1e-9 and noe < 1e-10 and gb < 1e-7 and recovered
    return ok, f"action {act:.1e} (<1e-9), noether {noe:.1e} (<1e-10), gauge_back {gb:.1e} (<1e-7)"


def criterion_7():
    comm = 0.0
    for N in (2, 4, 8, 16, 32):
        d = matmech.build_truncated_pair(N).defect()
        d[-1, -1] = 0
        comm = max(comm, float(np.max(np.abs(d))))
    pair = matmech.build_truncated_pair(64)
    m = 20.0
    series = matmech.heisenberg_evolve(pair, m, (0.0, 1.0), 20)
    heis = series.interior_error()
    gauge = matmech.PictureGauge.schrodinger(matmech.free_hamiltonian(pair, m), pair.k)
    rng = np.random.default_rng(107)
    pic = ehr = 0.0
    for _ in range(5):
        s = matmech.coherent_state(64, complex(*rng.uniform(-1, 1, 2)))
        for X, st in zip(series.X, matmech.evolve_state_series(s, gauge, (0.0, 1.0), 20)):
            pic = max(pic, abs(matmech.expectation(s, X) - matmech.expectation(st, pair.X)))
        small = matmech.build_truncated_pair(32)
        s32 = matmech.coherent_state(32, complex(*rng.uniform(-1, 1, 2)))
        ehr = max(ehr, max(matmech.ehrenfest_residual(small, s32, 5.0, t) for t in (0.0, 0.5, 1.0)))
    p16 = matmech.build_truncated_pair(16)
    hist = matmech.born_sample(matmech.coherent_state(16, 1.2 + 0.3j), p16.X, 10_000, seed=2013, workers=4)
    pval = hist.chi_square()[1]
    so13 = matmech.spacetime_so13_residual(8)
    ok = comm <= 1e-12 and heis < 1e-8 and pic < 1e-8 and ehr < 1e-6 and pval > 0.01 and so13 < 1e-8
    return ok, (f"commutator off-corner {comm:.1e} (<=1e-12), heisenberg {heis:.1e}, pictures {pic:.1e} (<1e-8), "
                f"ehrenfest {ehr:.1e} (<1e-6), born p={pval:.3f} (>0.01), so13 {so13:.1e} (<1e-8)")


def criterion_8():
    worst = {"hermiticity": 0.0, "recomposition": 0.0, "momentum_square": 0.0, "pairing": 0.0}
    for seed in range(5):
        rep = worldsheet.identity_report(worldsheet.random_smooth_field(algebra.make_algebra(4), 800 + seed, n=32), 1.0)
        for k in worst:
            worst[k] = max(worst[k], rep[k])
    m = 1.3
    sig = np.linspace(0, 1, 32)
    xs = np.stack([0 * sig, np.cos(sig), np.sin(sig), 0.3 * sig], 1)
    v = np.stack([0.2 * np.sin(sig), 0.1 * sig, 0 * sig], 1)
    ps = np.concatenate([np.sqrt(m * m + np.sum(v * v, 1))[:, None], v], 1)
    sheet = worldsheet.reduced_evolve(xs, ps, 1.0 + 0.2 * sig, m, np.linspace(0, 1, 32), sig)
    cols = max(worldsheet.column_vs_particle(sheet, j) for j in range(32))
    shell = sheet.residuals()["mass_shell"]
    ok = (worst["hermiticity"] < 1e-12 and worst["recomposition"] < 1e-12 and worst["momentum_square"] < 1e-8
          and worst["pairing"] < 1e-8 and cols < 1e-8 and shell < 1e-6)
    return ok, (f"hermiticity {worst['hermiticity']:.1e} recomposition {worst['recomposition']:.1e} (<1e-12), momentum square {worst['momentum_square']:.1e} "
                f"pairing {worst['pairing']:.1e} (<1e-8), columns {cols:.1e} (<1e-8), mass shell {shell:.1e} (<1e-6)")


def criterion_9(tmp_dir):
    reports, times = [], []
    for i in range(2):
        out = f"{tmp_dir}/verify{i}"
        t0 = time.perf_counter()
        code = subprocess.run([sys.executable, "-m", "cliffdyn.cli", "verify", "--out", out, "--quiet"],
                              capture_output=True).returncode
        times.append(time.perf_counter() - t0)
        with open(f"{out}/report.json", "rb") as fh:
            reports.append(fh.read())
    same = reports[0] == reports[1]
    checks = json.loads(reports[0])["checks"]
    ok = code == 0 and same and max(times) < 300
    return ok, (f"cliffdyn verify {sum(c['passed'] for c in checks)}/{len(checks)} checks, "
                f"{max(times):.1f}s (<300s), identical reports: {same}")


def _run(k, record, *args):
    ok, detail = globals()[f"criterion_{k}"](*args)
    record(line(k, ok, detail))
    assert ok, detail


def test_criterion_1(record):
    _run(1, record)


def test_criterion_2(record):
    _run(2, record)


def test_criterion_3(record):
    _run(3, record)


def test_criterion_4(record):
    _run(4, record)


def test_criterion_5(record):
    _run(5, record)


def test_criterion_6(record):
    _run(6, record)


def test_criterion_7(record):
    _run(7, record)


def test_criterion_8(record):
    _run(8, record)


def test_criterion_9(record, tmp_path):
    _run(9, record, tmp_path)


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        for k in range(1, 10):
            ok, detail = globals()[f"criterion_{k}"](*((d,) if k == 9 else ()))
            print(line(k, ok, detail))
