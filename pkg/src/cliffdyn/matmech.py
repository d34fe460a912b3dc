"""Truncated canonical pairs and the k != 0 (quantum) regime.

A finite matrix pair cannot satisfy [X, P] = ik exactly; the ladder
construction used here gets every entry right except the bottom-right
corner.  Quantitative checks are therefore restricted to an interior block
(the first ``N - N//4`` basis states by default), and states count as
interior-supported when their amplitude on the excluded top quarter is
below 1e-8.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.stats import chisquare

from .ensemble import so13_residual
from .errors import DimensionError, ValidationError
from .spinors import ETA, is_hermitian

INTERIOR_TOL = 1e-8
EIGEN_CLUSTER = 1e-9


def interior_size(N: int) -> int:
    return N - N // 4


def lowering(N: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1)


@dataclass(frozen=True, eq=False)
class CanonicalPair:
    N: int
    k: float
    X: np.ndarray
    P: np.ndarray
    eta: int = 1  # sign of this axis in the metric, +1 for time

    def commutator(self) -> np.ndarray:
        return self.X @ self.P - self.P @ self.X

    def defect(self) -> np.ndarray:
        """[X, P] - ik 1."""
        return self.commutator() - 1j * self.k * np.eye(self.N)

    @property
    def defect_mask(self) -> np.ndarray:
        mask = np.zeros((self.N, self.N), dtype=bool)
        mask[-1, -1] = True
        return mask

    @property
    def interior(self) -> np.ndarray:
        return np.arange(interior_size(self.N))

    def hermiticity_residual(self) -> float:
        return float(max(np.max(np.abs(self.X - self.X.conj().T)), np.max(np.abs(self.P - self.P.conj().T))))


def build_truncated_pair(N: int, k: float = 1.0, eta: int = 1, p_offset: float = 0.0) -> CanonicalPair:
    """Ladder pair; ``p_offset`` shifts P by a multiple of 1, which keeps [X, P]."""
    if not isinstance(N, (int, np.integer)) or N < 2:
        raise DimensionError(f"truncation dimension must be an integer >= 2, got {N!r}")
    k = float(k)
    if k == 0:
        raise ZeroDivisionError("k = 0 is the classical regime; use the ensemble module")
    if k < 0:
        raise ValidationError("k must be positive (its sign is carried by the axis metric)")
    a = lowering(N)
    X = np.sqrt(k / 2) * (a + a.T).astype(complex)
    P = -1j * np.sqrt(k / 2) * (a - a.T) + float(p_offset) * np.eye(N)
    return CanonicalPair(int(N), k, X, P, int(eta))


def free_hamiltonian(pair: CanonicalPair, m: float) -> np.ndarray:
    """One-axis share of (P^mu P_mu - m^2)/2m, i.e. (eta P^2 - m^2)/2m."""
    return (pair.eta * (pair.P @ pair.P) - m * m * np.eye(pair.N)) / (2.0 * m)


def hermitian_propagator(G, t) -> np.ndarray:
    """exp(i G t) for Hermitian G, via the eigendecomposition."""
    lam, V = np.linalg.eigh(G)
    return (V * np.exp(1j * lam * t)) @ V.conj().T


# ----------------------------------------------------------------------
# Heisenberg picture


@dataclass(frozen=True, eq=False)
class HeisenbergSeries:
    tau_bar: np.ndarray
    X: np.ndarray  # (n, N, N)
    P: np.ndarray
    pair: CanonicalPair
    mass: float

    def closed_form(self) -> np.ndarray:
        """X(0) + tau_bar eta P / m, valid off the truncation corner."""
        return self.X[0][None] + (self.pair.eta * self.tau_bar / self.mass)[:, None, None] * self.P[None]

    def interior_error(self, size=None) -> float:
        n = size or interior_size(self.pair.N)
        d = self.X - self.closed_form()
        return float(np.max(np.abs(d[:, :n, :n])))


def heisenberg_evolve(pair: CanonicalPair, m: float, tau_span, steps: int) -> HeisenbergSeries:
    """dX/dtau_bar = (i/k)[H, X] with the free H, solved by the exact propagator."""
    if pair.k == 0:
        raise ZeroDivisionError("Heisenberg equation needs k != 0")
    t0, t1 = map(float, tau_span)
    tau = np.linspace(t0, t1, int(steps) + 1)
    H = free_hamiltonian(pair, m)
    lam, V = np.linalg.eigh(H)
    Xv = V.conj().T @ pair.X @ V
    out = np.empty((tau.size, pair.N, pair.N), dtype=complex)
    for i, t in enumerate(tau - t0):
        ph = np.exp(1j * lam * t / pair.k)
        out[i] = V @ (ph[:, None] * Xv * ph.conj()[None, :]) @ V.conj().T
    return HeisenbergSeries(tau, out, pair.P, pair, float(m))


def heisenberg_rk4(pair: CanonicalPair, m: float, tau_span, steps: int) -> np.ndarray:
    """Independent RK4 integration of the Heisenberg equation (cross-check path)."""
    H = free_hamiltonian(pair, m)
    t0, t1 = map(float, tau_span)
    h = (t1 - t0) / steps
    X = pair.X.copy()
    out = [X]

    def f(Y):
        return (1j / pair.k) * (H @ Y - Y @ H)

    for _ in range(int(steps)):
        k1 = f(X)
        k2 = f(X + 0.5 * h * k1)
        k3 = f(X + 0.5 * h * k2)
        k4 = f(X + h * k3)
        X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(X)
    return np.array(out)


# ----------------------------------------------------------------------
# states and pictures


@dataclass(frozen=True, eq=False)
class PictureGauge:
    """Gamma(tau) for state evolution: heisenberg (0), schrodinger (-H/k) or custom."""

    kind: str
    N: int
    hamiltonian: np.ndarray | None = None
    k: float = 1.0
    fn: object = None

    @classmethod
    def heisenberg(cls, N):
        return cls("heisenberg", N)

    @classmethod
    def schrodinger(cls, H, k=1.0):
        H = np.asarray(H, dtype=complex)
        if not is_hermitian(H, 1e-12 * max(1.0, np.max(np.abs(H)))):
            raise ValidationError("Hamiltonian must be Hermitian")
        if k == 0:
            raise ZeroDivisionError("Schrodinger gauge needs k != 0")
        return cls("schrodinger", H.shape[0], hamiltonian=H, k=float(k))

    @classmethod
    def custom(cls, fn, N):
        return cls("custom", N, fn=fn)

    def gamma(self, tau) -> np.ndarray:
        if self.kind == "heisenberg":
            return np.zeros((self.N, self.N), dtype=complex)
        if self.kind == "schrodinger":
            return -self.hamiltonian / self.k
        return np.asarray(self.fn(tau), dtype=complex)


@dataclass(frozen=True, eq=False)
class StateVector:
    s: np.ndarray
    gauge: PictureGauge | None = None

    def __post_init__(self):
        s = np.asarray(self.s, dtype=complex).reshape(-1)
        object.__setattr__(self, "s", s)

    @classmethod
    def normalized(cls, v, gauge=None):
        v = np.asarray(v, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValidationError("zero vector cannot be normalized")
        return cls(v / nrm, gauge)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.s))

    def top_weight(self) -> float:
        """Largest amplitude on the excluded top quarter of the basis."""
        N = self.s.size
        return float(np.max(np.abs(self.s[interior_size(N):]), initial=0.0))

    def interior_supported(self, tol=INTERIOR_TOL) -> bool:
        return self.top_weight() < tol


def coherent_state(N: int, alpha: complex) -> StateVector:
    """Truncated coherent state, renormalized."""
    n = np.arange(N)
    logfact = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, N)))])
    amp = np.exp(-0.5 * logfact) * np.power(complex(alpha), n) if alpha != 0 else (n == 0).astype(complex)
    return StateVector.normalized(amp)


def evolve_state(state: StateVector, gauge: PictureGauge, tau_span, steps: int = 1) -> StateVector:
    """Solve (d/dtau - i Gamma)|s> = 0 from tau_span[0] to tau_span[1]."""
    return evolve_state_series(state, gauge, tau_span, steps)[-1]


def evolve_state_series(state: StateVector, gauge: PictureGauge, tau_span, steps: int = 1) -> list:
    t0, t1 = map(float, tau_span)
    tau = np.linspace(t0, t1, int(steps) + 1)
    s = state.s
    out = [StateVector(s, gauge)]
    if gauge.kind == "heisenberg":
        return out * len(tau)
    if gauge.kind == "schrodinger":
        G = gauge.gamma(t0)
        lam, V = np.linalg.eigh(G)
        c0 = V.conj().T @ s
        return [StateVector(V @ (np.exp(1j * lam * (t - t0)) * c0), gauge) for t in tau]
    for a, b in zip(tau[:-1], tau[1:]):
        G = gauge.gamma(0.5 * (a + b))
        s = expm(1j * G * (b - a)) @ s
        out.append(StateVector(s, gauge))
    return out


def expectation(state: StateVector, A) -> float:
    A = np.asarray(A)
    if not is_hermitian(A, 1e-12 * max(1.0, float(np.max(np.abs(A))))):
        raise ValidationError("observable must be Hermitian")
    v = np.vdot(state.s, A @ state.s)
    return float(v.real)


def ehrenfest_residual(pair: CanonicalPair, state: StateVector, m: float, tau_bar: float, span: float = 1.0) -> float:
    """|d<X>/dtau_bar - <(i/k)[H, X]>| at tau_bar, central difference of step 1e-4 * span."""
    h = 1e-4 * span
    H = free_hamiltonian(pair, m)

    def X_at(t):
        W = hermitian_propagator(H, t / pair.k)
        return W @ pair.X @ W.conj().T

    lhs = (expectation(state, X_at(tau_bar + h)) - expectation(state, X_at(tau_bar - h))) / (2 * h)
    Xt = X_at(tau_bar)
    rhs = np.vdot(state.s, (1j / pair.k) * (H @ Xt - Xt @ H) @ state.s).real
    return float(abs(lhs - rhs))


# ----------------------------------------------------------------------
# measurement


def eigen_clusters(A, gap=EIGEN_CLUSTER):
    """Eigenvalues of Hermitian A grouped into (value, orthonormal basis) clusters."""
    lam, V = np.linalg.eigh(np.asarray(A))
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    groups, start = [], 0
    for i in range(1, lam.size + 1):
        if i == lam.size or lam[i] - lam[i - 1] > gap * scale:
            groups.append((float(np.mean(lam[start:i])), V[:, start:i]))
            start = i
    return groups


def born_probabilities(state: StateVector, A):
    groups = eigen_clusters(A)
    probs = np.array([float(np.sum(np.abs(B.conj().T @ state.s) ** 2)) for _, B in groups])
    return np.array([v for v, _ in groups]), probs / probs.sum(), groups


def measure(state: StateVector, A, rng_seed) -> tuple:
    """Sample an eigenvalue with Born weight and project (Lueders rule) onto its eigenspace."""
    values, probs, groups = born_probabilities(state, A)
    rng = np.random.default_rng(rng_seed)
    r = int(rng.choice(values.size, p=probs))
    B = groups[r][1]
    post = B @ (B.conj().T @ state.s)
    return values[r], StateVector.normalized(post, state.gauge)


@dataclass(frozen=True)
class BornHistogram:
    values: np.ndarray
    probabilities: np.ndarray
    counts: np.ndarray
    seed: int
    workers: int

    @property
    def samples(self) -> int:
        return int(self.counts.sum())

    def chi_square(self, min_expected: float = 5.0):
        """(statistic, p-value); bins with small expectation are pooled."""
        exp = self.probabilities * self.samples
        keep = exp >= min_expected
        obs_k, exp_k = list(self.counts[keep]), list(exp[keep])
        if np.any(~keep):
            obs_k.append(self.counts[~keep].sum())
            exp_k.append(exp[~keep].sum())
        obs_k, exp_k = np.array(obs_k, float), np.array(exp_k, float)
        if obs_k.size < 2:
            return 0.0, 1.0
        exp_k *= obs_k.sum() / exp_k.sum()
        res = chisquare(obs_k, exp_k)
        return float(res.statistic), float(res.pvalue)

    def to_dict(self):
        return {
            "schema_version": 1,
            "seed": self.seed,
            "workers": self.workers,
            "values": [float(f"{v:.17g}") for v in self.values],
            "probabilities": [float(f"{p:.17g}") for p in self.probabilities],
            "counts": [int(c) for c in self.counts],
        }


def born_sample(state: StateVector, A, samples: int, seed: int, workers: int = 1,
                threads: int | None = None) -> BornHistogram:
    """Repeated measurements on fresh copies of ``state``.

    Each worker draws from its own child of ``SeedSequence(seed)`` and the
    counts are merged in worker order, so the result depends on (seed,
    workers) only; ``threads`` caps how many workers run at once.
    """
    values, probs, _ = born_probabilities(state, A)
    children = np.random.SeedSequence(seed).spawn(workers)
    share = [samples // workers + (1 if w < samples % workers else 0) for w in range(workers)]

    def draw(w):
        rng = np.random.default_rng(children[w])
        return np.bincount(rng.choice(values.size, size=share[w], p=probs), minlength=values.size)

    pool_size = max(1, min(workers, threads or workers))
    if pool_size > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            parts = list(pool.map(draw, range(workers)))
    else:
        parts = [draw(w) for w in range(workers)]
    return BornHistogram(values, probs, np.sum(parts, axis=0), int(seed), int(workers))


# ----------------------------------------------------------------------
# four axes


@dataclass(frozen=True, eq=False)
class SpacetimePairs:
    """Four canonical pairs X^mu, P_mu acting on a tensor product of four copies."""

    N: int
    k: float
    X: list  # sparse, contravariant X^mu
    P_lower: list  # sparse P_mu with [X^mu, P_nu] = ik delta off the corners

    @property
    def dim(self) -> int:
        return self.N**4

    @property
    def P_upper(self) -> list:
        return [ETA[m, m] * self.P_lower[m] for m in range(4)]

    def interior_index(self) -> np.ndarray:
        n = interior_size(self.N)
        idx = np.indices((n,) * 4).reshape(4, -1)
        return np.ravel_multi_index(tuple(idx), (self.N,) * 4)

    def angular_tensor(self):
        X, P = self.X, self.P_upper
        return [[(X[m] @ P[n] - X[n] @ P[m]).tocsr() for n in range(4)] for m in range(4)]


def build_spacetime_pairs(N: int, k: float = 1.0) -> SpacetimePairs:
    base = build_truncated_pair(N, k)
    eye = sp.identity(N, format="csr", dtype=complex)
    X, P = [], []
    for axis in range(4):
        fx = [eye] * 4
        fp = [eye] * 4
        fx[axis] = sp.csr_matrix(base.X)
        fp[axis] = sp.csr_matrix(base.P)
        kx, kp = fx[0], fp[0]
        for f1, f2 in zip(fx[1:], fp[1:]):
            kx = sp.kron(kx, f1, format="csr")
            kp = sp.kron(kp, f2, format="csr")
        X.append(kx)
        P.append(kp)
    return SpacetimePairs(int(N), float(k), X, P)


def spacetime_so13_residual(N: int = 8, k: float = 1.0) -> float:
    sys = build_spacetime_pairs(N, k)
    J = sys.angular_tensor()
    return so13_residual(J, k, index=sys.interior_index())


def angular_drift(N: int, k: float, m: float, tau_span, steps: int = 4) -> float:
    """max drift of J^{mu nu} over the interior block under free Heisenberg evolution.

    The free Hamiltonian splits into commuting one-axis terms, so each X^mu
    evolves on its own axis and J^{mu nu}(tau) - J^{mu nu}(0) is a sum of two
    Kronecker products of interior blocks.
    """
    n = interior_size(N)
    worst = 0.0
    series = {}
    for axis in range(4):
        pair = build_truncated_pair(N, k, eta=int(ETA[axis, axis]))
        series[axis] = heisenberg_evolve(pair, m, tau_span, steps)
    for mu in range(4):
        for nu in range(mu + 1, 4):
            Pmu = ETA[mu, mu] * series[mu].P[:n, :n]
            Pnu = ETA[nu, nu] * series[nu].P[:n, :n]
            for t in range(1, len(series[mu].tau_bar)):
                dXmu = (series[mu].X[t] - series[mu].X[0])[:n, :n]
                dXnu = (series[nu].X[t] - series[nu].X[0])[:n, :n]
                # factor order (mu, nu); P's on different axes commute
                diff = np.kron(dXmu, Pnu) - np.kron(Pmu, dXnu)
                worst = max(worst, float(np.max(np.abs(diff))))
    return worst


# ----------------------------------------------------------------------
# non-relativistic limit


@dataclass(frozen=True)
class NonrelReport:
    dt_dtau: float
    dt_dtau_expected: float
    spatial_deviation: float
    norm_drift: float

    def to_dict(self):
        return {k: float(v) for k, v in self.__dict__.items()}


def nonrel_limit_check(N: int, states, m: float, tau_span=(0.0, 1.0), steps: int = 20, k: float = 1.0,
                       p0_offset: float | None = None) -> NonrelReport:
    """Compare spatial evolution under H and under H~ = (Px^2+Py^2+Pz^2)/2m.

    ``states`` holds four per-axis states (t, x, y, z); the product state
    evolves factor by factor because H is a sum of commuting one-axis terms.
    The spatial share of H is -H~ (up to a constant), so the Schrodinger
    equation for H~ is integrated with effective hbar = -k.  The time-axis
    momentum is shifted by ``p0_offset`` (default m) so that <P^0> is near m.
    """
    off = m if p0_offset is None else p0_offset
    pairs = [build_truncated_pair(N, k, eta=int(ETA[a, a]), p_offset=off if a == 0 else 0.0) for a in range(4)]
    states = [s if isinstance(s, StateVector) else StateVector.normalized(s) for s in states]
    t0, t1 = map(float, tau_span)
    tau = np.linspace(t0, t1, int(steps) + 1)

    # time axis
    H0 = free_hamiltonian(pairs[0], m)
    traj0 = evolve_state_series(states[0], PictureGauge.schrodinger(H0, k), tau_span, steps)
    t_exp = np.array([expectation(s, pairs[0].X) for s in traj0])
    dt_dtau = float(np.polyfit(tau - t0, t_exp, 1)[0])
    expected = expectation(states[0], pairs[0].P) / m

    worst, drift = 0.0, 0.0
    for a in (1, 2, 3):
        H = free_hamiltonian(pairs[a], m)
        Ht = (pairs[a].P @ pairs[a].P) / (2 * m)
        rel = evolve_state_series(states[a], PictureGauge.schrodinger(H, k), tau_span, steps)
        nr = evolve_state_series(states[a], PictureGauge.schrodinger(Ht, -k), tau_span, steps)
        for s1, s2 in zip(rel, nr):
            for A in (pairs[a].X, pairs[a].P):
                worst = max(worst, abs(expectation(s1, A) - expectation(s2, A)))
            drift = max(drift, abs(s1.norm - 1.0), abs(s2.norm - 1.0))
    return NonrelReport(dt_dtau, expected, worst, drift)


# ----------------------------------------------------------------------
# export


def write_expectation_csv(pair: CanonicalPair, state: StateVector, m: float, tau_span, steps: int, path):
    series = heisenberg_evolve(pair, m, tau_span, steps)
    span = float(tau_span[1]) - float(tau_span[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau_bar", "X", "P", "ehrenfest_residual"])
        for t, X in zip(series.tau_bar, series.X):
            r = ehrenfest_residual(pair, state, m, t - series.tau_bar[0], span)
            w.writerow([f"{t:.17g}", f"{expectation(state, X):.17g}", f"{expectation(state, pair.P):.17g}", f"{r:.17g}"])


def write_histogram_json(hist: BornHistogram, path):
    with open(path, "w") as fh:
        json.dump(hist.to_dict(), fh, indent=2, sort_keys=True)
