import numpy as np
import pytest

from cliffdyn import algebra, particle, spinors, worldsheet
from cliffdyn.errors import CapacityError, DegenerateMetricError, FrameError, ValidationError
from cliffdyn.verify import timelike


@pytest.fixture(scope="module")
def field():
    return worldsheet.random_smooth_field(algebra.make_algebra(4), 11, n=32)


def test_identities_on_random_field(field):
    rep = worldsheet.identity_report(field, 1.0)
    assert rep["hermiticity"] < 1e-12
    assert rep["recomposition"] < 1e-12
    assert rep["momentum_square"] < 1e-8 and rep["pairing"] < 1e-8 and rep["hamiltonian"] < 1e-8
    assert rep["first_order_vs_second_order"] < 1e-8


def test_geometry_fields(field):
    geo = worldsheet.induced_geometry(field)
    assert np.all(geo.WW > 0)
    np.testing.assert_allclose(geo.h, np.swapaxes(geo.h, -1, -2))
    np.testing.assert_allclose(geo.dstar_raw, geo.weight[None, ..., None, None] * geo.dstar)


def test_derivatives_match_finite_differences(field):
    fd = np.gradient(field.c, field.tau, axis=0, edge_order=2)
    err = np.max(np.abs(fd[2:-2] - field.derivatives()[0][2:-2]))
    assert err < 1e-2 * np.max(np.abs(fd))


def test_degenerate_metric_reported():
    ctx = algebra.make_algebra(2)
    t = np.linspace(0, 1, 6)
    c = np.zeros((6, 6, 2, ctx.generator_count), dtype=complex)
    c[..., 0, :] = ctx.f_basis[0]
    grid = worldsheet.WorldsheetGrid(t, t, c, ctx)
    with pytest.raises(DegenerateMetricError) as exc:
        worldsheet.induced_geometry(grid)
    assert len(exc.value.nodes) == 36


def test_mode_gram_and_pseudo_unitary(rng):
    sig = np.linspace(-1, 1, 25)
    g = worldsheet.eigen_modes(sig, 3.0)
    ctx = algebra.make_algebra(2 * g.shape[1], verification=False)
    ms = worldsheet.build_modes(g, ctx, sig, 3.0, signs=(1, -1))
    assert ms.gram_deviation() < 1e-10
    D = ms.delta.matrix(sig)
    A = rng.standard_normal((25, 25))
    U = worldsheet.pseudo_unitary(D, 0.05 * (A + A.T))
    np.testing.assert_allclose(U @ D @ U.conj().T, D, atol=1e-10)
    assert ms.transformed(U).gram_deviation() < 1e-10
    with pytest.raises(CapacityError):
        worldsheet.build_modes(g, algebra.make_algebra(1), sig, 3.0)


def test_gaussian_packets_approximate_delta():
    sig = np.linspace(-1, 1, 81)
    g = worldsheet.gaussian_packets(sig, np.linspace(-1.5, 1.5, 301), 4.0)
    D = worldsheet.DeltaSequence(4.0).matrix(sig)
    assert np.max(np.abs(g @ g.T - D)) < 1e-3 * np.max(D)


def test_lifted_particle_satisfies_constraint(rng):
    ctx = algebra.make_algebra(5)
    pp = spinors.resolve_phase_point(rng.standard_normal(4), timelike(rng, 1.0), 0.4, ctx)
    traj = particle.evolve(pp, particle.EinbeinProfile.constant(1.0), 1.0, (0, 1), 8)
    c, ds = worldsheet.lift_trajectory(traj, 5)
    r = worldsheet.constraint_and_noether(c, ds, ctx)
    assert r["constraint"] < 1e-10 and r["noether"] < 1e-10 and r["currents"] < 1e-10


def reduced(n=16, m=1.0):
    sig = np.linspace(0, 1, n)
    xs = np.stack([0 * sig, np.cos(sig), np.sin(sig), sig], 1)
    v = np.stack([0.1 * sig, 0 * sig, 0.2 + 0 * sig], 1)
    ps = np.concatenate([np.sqrt(m * m + np.sum(v * v, 1))[:, None], v], 1)
    return worldsheet.reduced_evolve(xs, ps, 0.5 + sig, m, np.linspace(0, 1, n), sig)


def test_reduced_sheet_residuals():
    sheet = reduced()
    r = sheet.residuals()
    assert r["mass_shell"] < 1e-9 and r["dx_dtau"] < 1e-8 and r["noether"] < 1e-9
    assert r["h11_mu1"] < 1e-9 and r["dilaton_rhs"] < 1e-6 and r["ww_cube_root"] < 1e-6
    for j in (0, 8, 15):
        assert worldsheet.column_vs_particle(sheet, j) < 1e-8


def test_reduced_sheet_validation():
    sig = np.linspace(0, 1, 4)
    xs = np.zeros((4, 4))
    ps = np.tile([1.0, 0, 0, 0], (4, 1))
    with pytest.raises(FrameError):
        worldsheet.reduced_evolve(xs, ps, 0.0, 1.0, sig, sig)
    with pytest.raises(ValidationError):
        worldsheet.reduced_evolve(xs, ps, 1.0, 2.0, sig, sig)


def test_export(field, tmp_path):
    geo = worldsheet.induced_geometry(field)
    worldsheet.write_worldsheet(field, geo, 1.0, tmp_path / "w.csv", tmp_path / "w.json")
    assert len((tmp_path / "w.csv").read_text().splitlines()) == 32 * 32 + 1
