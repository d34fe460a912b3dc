import numpy as np
import pytest

from cliffdyn import algebra, particle, spinors
from cliffdyn.errors import DegenerateError, EinbeinError, TurningPointError, ValidationError
from cliffdyn.verify import timelike


@pytest.fixture(scope="module")
def ctx():
    return algebra.make_algebra(5)


def start(ctx, rng, m=1.0, mu=0.5):
    return spinors.resolve_phase_point(rng.standard_normal(4), timelike(rng, m), mu, ctx)


@pytest.mark.parametrize("eb", [
    particle.EinbeinProfile.constant(0.7),
    particle.EinbeinProfile.linear(0.5, 0.2),
    particle.EinbeinProfile.tabulated([0, 1, 2], [0.3, 0.9, 0.4]),
    particle.EinbeinProfile.proper(0.8, 1.2),
])
def test_einbein_integral_and_inverse(eb):
    from scipy.integrate import quad

    for t in (0.3, 1.1, 1.9):
        assert abs(eb.integral(0.0, t) - quad(lambda s: float(eb(s)), 0.0, t, points=[1.0])[0]) < 1e-10
        E = float(eb.integral(0.0, t))
        assert abs(eb.inverse_integral(0.0, E, (0.0, 2.0)) - t) < 1e-10
    assert particle.EinbeinProfile.from_dict(eb.to_dict()) == eb


def test_einbein_validation():
    with pytest.raises(ValidationError):
        particle.EinbeinProfile("cubic")
    with pytest.raises(ValidationError):
        particle.EinbeinProfile.tabulated([0, 0], [1, 1])
    with pytest.raises(EinbeinError):
        particle.EinbeinProfile.linear(1.0, -1.0).check_positive(0.0, 2.0)


def test_invariants_along_trajectory(ctx, rng):
    pp = start(ctx, rng, m=1.3, mu=0.7)
    traj = particle.evolve(pp, particle.EinbeinProfile.linear(0.5, 0.2), 1.3, (0.0, 2.0), 1000)
    p = traj.p
    assert abs(float(p @ spinors.ETA @ p) - 1.3**2) < 1e-9
    assert max(ch.size for ch in traj.charges()[::50]) < 1e-9
    assert np.max(np.abs(traj.mu - traj.mu_exact(traj.tau))) < 1e-9
    rk = particle.rk4_evolve(pp, traj.einbein, (0.0, 2.0), 1000)
    assert np.max(np.abs(rk - traj.c)) < 1e-8


def test_straight_line_worldline(ctx, rng):
    pp = start(ctx, rng)
    traj = particle.evolve(pp, particle.EinbeinProfile.constant(1.0), 1.0, (0.0, 1.0), 10)
    dx = np.diff(traj.x, axis=0)
    # x(tau) is quadratic in E; the direction of motion stays along p
    for d in dx:
        assert np.linalg.norm(np.cross(d[1:], traj.p[1:])) < 1e-10 * max(1, np.linalg.norm(d))


def test_quadratic_from_zero_mu(ctx):
    pp = spinors.resolve_phase_point(np.zeros(4), [1.0, 0, 0, 0], 0.0, ctx)
    traj = particle.evolve(pp, particle.EinbeinProfile.constant(0.5), 1.0, (0.0, 2.0), 20)
    np.testing.assert_allclose(traj.x[:, 0], traj.tau**2 / 4, atol=1e-12)
    assert particle.turning_point(traj) == 0.0


def test_double_cover(ctx):
    pp = spinors.resolve_phase_point(np.zeros(4), [1.0, 0, 0, 0], 0.0, ctx)
    traj = particle.evolve(pp, particle.EinbeinProfile.constant(0.5), 1.0, (-2, 2), 100, tau_start=0.0)
    assert particle.double_cover_residual(traj, 0.0, np.linspace(0.1, 2, 15)) < 1e-10


def test_turning_point_bisection(ctx, rng):
    pp = start(ctx, rng, mu=-0.5)
    traj = particle.evolve(pp, particle.EinbeinProfile.constant(1.0), 1.0, (0.0, 2.0), 50)
    tp = particle.turning_point(traj)
    assert abs(traj.mu_exact(tp)) < 1e-9
    with pytest.raises(TurningPointError) as exc:
        particle.proper_time_reparametrize(traj)
    lo, hi = exc.value.interval
    assert lo <= tp <= hi


def test_reparametrization_invariance(ctx, rng):
    pp = start(ctx, rng)
    a = particle.evolve(pp, particle.EinbeinProfile.constant(0.5), 1.0, (0.0, 2.0), 200)
    b = particle.evolve(pp, particle.EinbeinProfile.tabulated([0, 1, 3], [0.2, 0.6, 0.3]), 1.0, (0.0, 3.0), 300)
    top = min(particle.proper_time(a)[-1], particle.proper_time(b)[-1])
    tb = np.linspace(0, top, 50)
    xa = a.x_at(particle.proper_time_reparametrize(a, tau_bar=tb).tau)
    xb = b.x_at(particle.proper_time_reparametrize(b, tau_bar=tb).tau)
    assert np.max(np.abs(xa - xb)) < 1e-7


def test_action_matches_closed_form(ctx, rng):
    pp = start(ctx, rng)
    traj = particle.evolve(pp, particle.EinbeinProfile.constant(0.5), 1.0, (0.0, 1.0), 100)
    L = particle.first_order_lagrangian(traj)
    assert np.ptp(L) < 1e-10  # constant einbein and momentum
    assert abs(particle.action_value(traj) - L[0]) < 1e-10


def test_evolve_rejects_bad_input(ctx, rng):
    pp = start(ctx, rng)
    with pytest.raises(ValidationError):
        particle.evolve(pp, particle.EinbeinProfile.constant(1.0), -1.0, (0, 1), 10)
    with pytest.raises(EinbeinError):
        particle.evolve(pp, particle.EinbeinProfile.constant(-1.0), 1.0, (0, 1), 10)


def test_lightlike_reparam_degenerate(ctx):
    pp = spinors.resolve_phase_point(np.zeros(4), [1.0, 1.0, 0, 0], 0.5, ctx)
    traj = particle.evolve(pp, particle.EinbeinProfile.constant(1.0), 1.0, (0, 1), 10)
    assert not traj.on_shell
    with pytest.raises(DegenerateError):
        particle.proper_time_reparametrize(traj)


def test_csv_output(ctx, rng, tmp_path):
    traj = particle.evolve(start(ctx, rng), particle.EinbeinProfile.constant(1.0), 1.0, (0, 1), 5)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0].startswith("tau,tau_bar,x0") and len(rows) == 7
