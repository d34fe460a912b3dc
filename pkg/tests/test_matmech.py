import numpy as np
import pytest

from cliffdyn import matmech
from cliffdyn.errors import DimensionError, ValidationError


@pytest.mark.parametrize("N", [2, 4, 8, 16, 32])
def test_commutator_off_corner(N):
    pair = matmech.build_truncated_pair(N, k=0.7)
    d = pair.defect()
    assert abs(d[-1, -1] + 1j * 0.7 * N) < 1e-12  # [X,P] = ik(1 - N e_NN)
    d[-1, -1] = 0
    assert np.max(np.abs(d)) < 1e-12
    assert pair.hermiticity_residual() < 1e-14
    assert np.trace(pair.commutator()) == pytest.approx(0, abs=1e-10)


def test_pair_validation():
    with pytest.raises(DimensionError):
        matmech.build_truncated_pair(1)
    with pytest.raises(ZeroDivisionError):
        matmech.build_truncated_pair(4, k=0.0)
    with pytest.raises(ValidationError):
        matmech.build_truncated_pair(4, k=-1.0)


def test_heisenberg_closed_form_interior():
    pair = matmech.build_truncated_pair(64)
    series = matmech.heisenberg_evolve(pair, 20.0, (0.0, 1.0), 10)
    assert series.interior_error() < 1e-8
    rk = matmech.heisenberg_rk4(pair, 20.0, (0.0, 1.0), 200)
    assert np.max(np.abs(rk[-1] - series.X[-1])) < 1e-8


def test_picture_equivalence():
    N, m = 48, 10.0
    pair = matmech.build_truncated_pair(N)
    s = matmech.coherent_state(N, 0.6 - 0.2j)
    series = matmech.heisenberg_evolve(pair, m, (0.0, 1.0), 5)
    gauge = matmech.PictureGauge.schrodinger(matmech.free_hamiltonian(pair, m), pair.k)
    for X, st in zip(series.X, matmech.evolve_state_series(s, gauge, (0.0, 1.0), 5)):
        assert abs(matmech.expectation(s, X) - matmech.expectation(st, pair.X)) < 1e-10


def test_custom_gauge_preserves_norm(rng):
    A = rng.standard_normal((6, 6))
    G = A + A.T
    gauge = matmech.PictureGauge.custom(lambda t: np.cos(t) * G, 6)
    s = matmech.StateVector.normalized(rng.standard_normal(6))
    out = matmech.evolve_state(s, gauge, (0, 2), 200)
    assert abs(out.norm - 1) < 1e-12


def test_ehrenfest():
    pair = matmech.build_truncated_pair(32)
    s = matmech.coherent_state(32, 0.5 + 0.5j)
    assert matmech.ehrenfest_residual(pair, s, 5.0, 0.3) < 1e-6


def test_coherent_state_support():
    s = matmech.coherent_state(32, 0.5)
    assert abs(s.norm - 1) < 1e-14 and s.interior_supported()
    assert not matmech.coherent_state(8, 3.0).interior_supported()
    with pytest.raises(ValidationError):
        matmech.StateVector.normalized(np.zeros(3))


def test_measure_projects():
    pair = matmech.build_truncated_pair(8)
    s = matmech.coherent_state(8, 0.8)
    value, post = matmech.measure(s, pair.X, 5)
    assert abs(matmech.expectation(post, pair.X) - value) < 1e-10
    again, _ = matmech.measure(post, pair.X, 99)
    assert again == value


def test_born_sampling_reproducible():
    pair = matmech.build_truncated_pair(16)
    s = matmech.coherent_state(16, 1.2 + 0.3j)
    a = matmech.born_sample(s, pair.X, 10_000, seed=7, workers=4, threads=1)
    b = matmech.born_sample(s, pair.X, 10_000, seed=7, workers=4, threads=4)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert a.samples == 10_000
    assert a.chi_square()[1] > 0.01


def test_born_rejects_wrong_distribution():
    pair = matmech.build_truncated_pair(8)
    s = matmech.coherent_state(8, 1.0)
    h = matmech.born_sample(s, pair.X, 10_000, seed=1)
    skewed = matmech.BornHistogram(h.values, np.roll(h.probabilities, 1), h.counts, 1, 1)
    assert skewed.chi_square()[1] < 1e-6


def test_spacetime_so13():
    assert matmech.spacetime_so13_residual(6) < 1e-8


def test_angular_momentum_conserved():
    assert matmech.angular_drift(64, 1.0, 20.0, (0.0, 1.0)) < 1e-7


def test_nonrelativistic_limit():
    states = [matmech.coherent_state(32, a) for a in (0.2, 0.3j, -0.1, 0.25 + 0.1j)]
    rep = matmech.nonrel_limit_check(32, states, 20.0, (0, 1), 10)
    assert rep.spatial_deviation < 1e-7
    assert abs(rep.dt_dtau - rep.dt_dtau_expected) < 1e-7
    assert rep.norm_drift < 1e-12


def test_exports(tmp_path):
    pair = matmech.build_truncated_pair(16)
    s = matmech.coherent_state(16, 0.4)
    matmech.write_expectation_csv(pair, s, 5.0, (0, 1), 4, tmp_path / "e.csv")
    assert len((tmp_path / "e.csv").read_text().splitlines()) == 6
    matmech.write_histogram_json(matmech.born_sample(s, pair.X, 100, 0), tmp_path / "h.json")
    assert '"counts"' in (tmp_path / "h.json").read_text()
