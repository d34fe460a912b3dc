"""N particles in mutually orthogonal Clifford sectors and their U(N) mixing.

Kets ``C[i, A]`` hold c_i^A and bras ``D[i, A]`` hold d*_{iA}.  A gauge
transformation acts as ``C -> U C`` and ``D -> conj(U) D`` (the bra
transforms with U^dagger from the right), so that

    X^{AB'}_{ij} = c_i^A . c_j*^B'        -> U X U^dagger
    P_{AB'}_{ij} = d*_{jA} . d_{iB'}       -> U P U^dagger
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import linear_sum_assignment

from . import particle
from .algebra import AlgebraContext, make_algebra
from .errors import NotGaugeableError, ValidationError
from .spinors import ETA, SIGMA, lower_index, raise_, resolve_phase_point, PAIRS_PER_PARTICLE

UNITARY_TOL = 1e-12
COMMUTATOR_TOL = 1e-8
DEGENERACY_GAP = 1e-8
JOINT_DIAG_SEED = 20131128


def _components(s):
    """tr(sigma_mu S)/2 entrywise for a spinor-valued matrix S[A, B, i, j]."""
    return 0.5 * np.einsum("mba,ab...->m...", SIGMA, s)


def commutator(a, b):
    return a @ b - b @ a


def is_unitary(U, tol=UNITARY_TOL) -> bool:
    U = np.asarray(U)
    return U.ndim == 2 and U.shape[0] == U.shape[1] and np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) <= tol


def random_unitary(N, rng) -> np.ndarray:
    z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(N, rng, scale=1.0) -> np.ndarray:
    z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return scale * 0.5 * (z + z.conj().T)


@dataclass(frozen=True, eq=False)
class MatrixObservables:
    X: np.ndarray  # (4, N, N), contravariant X^mu
    P: np.ndarray  # (4, N, N), contravariant P^mu

    @property
    def N(self):
        return self.X.shape[-1]

    @property
    def P_lower(self):
        return np.einsum("mn,n...->m...", ETA, self.P)

    def family(self):
        return np.concatenate([self.X, self.P])

    def hermiticity_residual(self) -> float:
        f = self.family()
        return float(np.max(np.abs(f - np.conj(np.swapaxes(f, -1, -2)))))

    def max_commutator(self) -> float:
        f = self.family()
        return float(max(np.max(np.abs(commutator(a, b))) for a in f for b in f))

    def mass_matrix(self):
        """P^mu P_mu."""
        return np.einsum("mij,mjk->ik", self.P_lower, self.P)

    def transform(self, U):
        Ud = U.conj().T
        return MatrixObservables(U @ self.X @ Ud, U @ self.P @ Ud)


@dataclass(frozen=True, eq=False)
class EnsembleState:
    C: np.ndarray  # (N, 2, 4n)
    D: np.ndarray  # (N, 2, 4n) bra components d*_{iA}
    context: AlgebraContext
    frame: np.ndarray  # accumulated U
    phi: np.ndarray  # (N, N) Hermitian weights

    @property
    def N(self):
        return self.C.shape[0]

    def noether_matrix(self) -> np.ndarray:
        """M[A, B, i, j] = C_i^A . D_{jB}; equals mu delta^A_B 1 under the Noether condition."""
        return np.einsum("iAk,jBk->ABij", self.C * self.context.weights, self.D)

    def cross_particle_residual(self) -> float:
        """Largest inner product between different particles in the diagonal frame."""
        ctx = self.context
        rows = np.concatenate([self.C, np.conj(self.C), self.D, np.conj(self.D)], axis=1)  # (N, 8, dim)
        g = np.einsum("iak,jbk->ijab", rows * ctx.weights, rows)
        mask = ~np.eye(self.N, dtype=bool)
        return float(np.max(np.abs(g[mask]), initial=0.0))


def build_ensemble(xs, ps, mu: float, phi=None, ctx: AlgebraContext | None = None) -> EnsembleState:
    """Resolve N particles sharing one mu, each in its own block of five pairs."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ps = np.atleast_2d(np.asarray(ps, dtype=float))
    if xs.shape != ps.shape or xs.shape[1] != 4:
        raise ValidationError("xs and ps must both have shape (N, 4)")
    N = xs.shape[0]
    ctx = ctx or make_algebra(PAIRS_PER_PARTICLE * N, verification=False)
    C, D = [], []
    for i in range(N):
        pp = resolve_phase_point(xs[i], ps[i], mu, ctx, block=i)
        C.append(pp.c.components)
        D.append(pp.d_star.components)
    phi = np.eye(N) if phi is None else np.asarray(phi, dtype=complex)
    return EnsembleState(np.array(C), np.array(D), ctx, np.eye(N, dtype=complex), np.array(phi, dtype=complex))


def particle_phase_point(state: EnsembleState, i: int):
    from .spinors import PhasePoint

    return PhasePoint.from_arrays(state.C[i], state.D[i], state.context)


def assemble(state: EnsembleState) -> MatrixObservables:
    w = state.context.weights
    Xs = np.einsum("iAk,jBk->ABij", state.C * w, np.conj(state.C))
    Ps_low = np.einsum("jAk,iBk->ABij", state.D * w, np.conj(state.D))
    Ps = np.einsum("ac,cdij,bd->abij", [[0, 1], [-1, 0]], Ps_low, [[0, 1], [-1, 0]])
    return MatrixObservables(_components(Xs), _components(Ps))


def apply_gauge(state: EnsembleState, U) -> EnsembleState:
    U = np.asarray(U, dtype=complex)
    if U.shape != (state.N, state.N) or not is_unitary(U):
        raise ValidationError("gauge transformation must be an N x N unitary matrix")
    C = np.einsum("ih,hAk->iAk", U, state.C)
    D = np.einsum("ih,hAk->iAk", np.conj(U), state.D)
    return replace(state, C=C, D=D, frame=U @ state.frame, phi=U @ state.phi @ U.conj().T)


def ensemble_charges(state: EnsembleState):
    """(J_AB, j) with the weights Phi inserted."""
    w = state.context.weights
    C_low = lower_index(state.C)
    M = np.einsum("iAk,jBk->ABij", C_low * w, state.D)  # C_{iA} . D_{jB}
    S = M + np.swapaxes(M, 0, 1)
    J = np.einsum("ji,ABij->AB", state.phi, S)
    T = np.einsum("ji,AAij->", state.phi, state.noether_matrix())
    j = 1j * (T - np.conj(T))
    return J, float(j.real)


# ----------------------------------------------------------------------
# evolution and the trace action


def _flow(state: EnsembleState) -> np.ndarray:
    """P^{AE'} acting on the ket D_E'; the velocity is e(tau) times this."""
    w = state.context.weights
    Ps_low = np.einsum("jAk,iBk->ABij", state.D * w, np.conj(state.D))
    Ps = raise_(np.moveaxis(Ps_low, (0, 1), (-2, -1)))  # (N, N, 2, 2)
    return np.einsum("ijAE,jEk->iAk", Ps, np.conj(state.D))


@dataclass(frozen=True, eq=False)
class EnsembleRun:
    tau: np.ndarray
    states: list
    velocities: np.ndarray  # (n, N, 2, 4n)
    einbein: particle.EinbeinProfile
    mass: float


def evolve_ensemble(state: EnsembleState, einbein, m: float, tau_span, steps: int) -> EnsembleRun:
    t0, t1 = map(float, tau_span)
    einbein.check_positive(t0, t1)
    tau = np.linspace(t0, t1, int(steps) + 1)
    flow = _flow(state)
    E = einbein.integral(t0, tau)
    states = [replace(state, C=state.C + e * flow) for e in E]
    vel = einbein(tau)[:, None, None, None] * flow[None]
    return EnsembleRun(tau, states, vel, einbein, float(m))


def trace_lagrangian(run: EnsembleRun) -> np.ndarray:
    """Tr(Phi (dC/dtau . D + h.c. - H)) along the run."""
    out = []
    m = run.mass
    for k, st in enumerate(run.states):
        w = st.context.weights
        K = np.einsum("iAk,jAk->ij", run.velocities[k] * w, st.D)
        obs = assemble(st)
        H = float(run.einbein(run.tau[k])) * (obs.mass_matrix() - m * m * np.eye(st.N))
        out.append(np.trace(st.phi @ (K + K.conj().T - H)))
    return np.array(out)


def action_value(state: EnsembleState, einbein, m: float, tau_span, steps: int = 200) -> float:
    run = evolve_ensemble(state, einbein, m, tau_span, steps)
    return float(simpson(trace_lagrangian(run).real, x=run.tau))


def weighted_particle_action(state: EnsembleState, einbein, m, tau_span, steps: int = 200) -> float:
    """Sum of phi_i times single-particle actions (diagonal frame only)."""
    phi = np.real(np.diag(state.phi))
    total = 0.0
    for i in range(state.N):
        traj = particle.evolve(particle_phase_point(state, i), einbein, m, tau_span, steps)
        total += phi[i] * particle.action_value(traj)
    return total


# ----------------------------------------------------------------------
# gauge connection


@dataclass(frozen=True, eq=False)
class GaugeConnection:
    """Gamma(tau), an N x N Hermitian-matrix valued function.

    kinds: ``zero``, ``constant`` (``matrix``), ``schrodinger`` (-H/k for a
    Hamiltonian ``matrix``) and ``custom`` (callable ``fn``).
    """

    kind: str
    N: int
    matrix: np.ndarray | None = None
    k: float = 1.0
    fn: object = None

    @classmethod
    def zero(cls, N):
        return cls("zero", N)

    @classmethod
    def constant(cls, G):
        G = np.asarray(G, dtype=complex)
        return cls("constant", G.shape[0], matrix=G)

    @classmethod
    def schrodinger(cls, H, k=1.0):
        H = np.asarray(H, dtype=complex)
        if k == 0:
            raise ZeroDivisionError("Schrodinger gauge needs k != 0")
        return cls("schrodinger", H.shape[0], matrix=H, k=float(k))

    @classmethod
    def custom(cls, fn, N):
        return cls("custom", N, fn=fn)

    def __call__(self, tau) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros((self.N, self.N), dtype=complex)
        if self.kind == "constant":
            return self.matrix
        if self.kind == "schrodinger":
            return -self.matrix / self.k
        return np.asarray(self.fn(tau), dtype=complex)

    @property
    def is_constant(self):
        return self.kind != "custom"

    def transformed(self, U_fn, dU_fn) -> "GaugeConnection":
        """Gamma -> U Gamma U^dagger - i (dU/dtau) U^dagger for a tau-dependent U."""
        def fn(tau):
            U = U_fn(tau)
            return U @ self(tau) @ U.conj().T - 1j * dU_fn(tau) @ U.conj().T
        return GaugeConnection.custom(fn, self.N)


def covariant_derivative(V, gamma: GaugeConnection, tau: float, dV=None, h: float = 1e-5) -> np.ndarray:
    """(d/dtau - i Gamma) V at ``tau``; V (and dV) are callables of tau."""
    if dV is not None:
        dv = np.asarray(dV(tau))
    else:
        dv = (np.asarray(V(tau + h)) - np.asarray(V(tau - h))) / (2 * h)
    v = np.asarray(V(tau))
    return dv - 1j * np.tensordot(gamma(tau), v, axes=(1, 0))


# ----------------------------------------------------------------------
# gauging back and tracks


def _clusters(values, gap):
    order = np.argsort(values, kind="stable")
    groups = [[order[0]]]
    for a, b in zip(order[:-1], order[1:]):
        if values[b] - values[a] > gap:
            groups.append([b])
        else:
            groups[-1].append(b)
    return groups


def joint_diagonalize(family, seed=JOINT_DIAG_SEED, gap=DEGENERACY_GAP) -> np.ndarray:
    """Unitary V with V^dagger F V diagonal for every commuting Hermitian F."""
    family = np.asarray(family, dtype=complex)
    rng = np.random.default_rng(seed)
    N = family.shape[-1]

    def solve(fam, depth):
        n = fam.shape[-1]
        if n == 1 or depth > len(family):
            return np.eye(n, dtype=complex)
        coef = rng.standard_normal(fam.shape[0])
        M = np.tensordot(coef, fam, axes=1)
        M = 0.5 * (M + M.conj().T)
        lam, V = np.linalg.eigh(M)
        scale = max(1.0, float(np.max(np.abs(lam))))
        out = np.zeros((n, n), dtype=complex)
        col = 0
        for grp in _clusters(lam, gap * scale):
            Vg = V[:, grp]
            if len(grp) > 1:
                sub = np.einsum("ia,kij,jb->kab", Vg.conj(), fam, Vg)
                Vg = Vg @ solve(sub, depth + 1)
            out[:, col:col + len(grp)] = Vg
            col += len(grp)
        return out

    return solve(family, 0) if N > 1 else np.eye(1, dtype=complex)


def gauge_back(obs: MatrixObservables, tol=COMMUTATOR_TOL, seed=JOINT_DIAG_SEED, check=1e-7):
    """Unitary U with U^dagger X^mu U, U^dagger P^mu U diagonal, and the tracks.

    Returns ``(U, tracks)`` where ``tracks[i]`` holds (x^0..x^3, p^0..p^3) of
    track i.  Raises :class:`NotGaugeableError` when the family fails to
    commute.
    """
    fam = obs.family()
    worst = obs.max_commutator()
    if worst > tol:
        raise NotGaugeableError(worst)
    U = joint_diagonalize(fam, seed=seed)
    D = np.einsum("ia,kij,jb->kab", U.conj(), fam, U)
    off = D - np.einsum("kaa,ab->kab", D, np.eye(obs.N))
    resid = float(np.max(np.abs(off)))
    if resid > check:
        raise NotGaugeableError(resid, f"joint diagonalization residual {resid:.3e} exceeds {check:g}")
    tracks = np.real(np.einsum("kaa->ak", D))
    return U, tracks


def match_tracks(prev_vectors, vectors) -> np.ndarray:
    """Column permutation of ``vectors`` maximizing overlap with ``prev_vectors``."""
    overlap = np.abs(prev_vectors.conj().T @ vectors) ** 2
    _, cols = linear_sum_assignment(-overlap)
    return cols


def track_series(X_series):
    """Eigenvalues of a sequence of Hermitian matrices, following tracks by eigenvector continuity."""
    vals, vecs = [], None
    for X in X_series:
        lam, V = np.linalg.eigh(X)
        if vecs is not None:
            perm = match_tracks(vecs, V)
            lam, V = lam[perm], V[:, perm]
        vals.append(lam)
        vecs = V
    return np.array(vals)


def angular_tensor(obs: MatrixObservables) -> np.ndarray:
    """J^{mu nu} = X^mu P^nu - X^nu P^mu, shape (4, 4, N, N)."""
    XP = np.einsum("mij,njk->mnik", obs.X, obs.P)
    return XP - np.swapaxes(XP, 0, 1)


def so13_rhs(J, k, mu, nu, rho, sig):
    e = ETA
    return -1j * k * (e[nu, rho] * J[mu][sig] - e[mu, rho] * J[nu][sig]
                      - e[nu, sig] * J[mu][rho] + e[mu, sig] * J[nu][rho])


def so13_residual(J, k: float, index=None, matmul=None) -> float:
    """max over index quadruples of |[J^{mu nu}, J^{rho sigma}] - structure term|.

    The structure term carries the sign fixed by [X^mu, P_nu] = i k delta;
    ``index`` restricts the comparison to a sub-block of rows/columns.
    """
    mm = matmul or (lambda a, b: a @ b)
    worst = 0.0
    pairs = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    for mu, nu in pairs:
        for rho, sig in pairs:
            comm = mm(J[mu][nu], J[rho][sig]) - mm(J[rho][sig], J[mu][nu])
            diff = comm - so13_rhs(J, k, mu, nu, rho, sig)
            if hasattr(diff, "toarray"):
                diff = diff.tocsr()
                if index is not None:
                    diff = diff[index][:, index]
                diff = diff.toarray() if diff.shape[0] else np.zeros((0, 0))
            elif index is not None:
                diff = diff[np.ix_(index, index)]
            worst = max(worst, float(np.max(np.abs(diff), initial=0.0)))
    return worst


# ----------------------------------------------------------------------
# export


def write_tracks(run: EnsembleRun, out_csv, out_json, extra=None):
    X0 = [assemble(s).X for s in run.states]
    series = {mu: track_series([x[mu] for x in X0]) for mu in range(4)}
    N = run.states[0].N
    with open(out_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "track"] + [f"x{mu}" for mu in range(4)])
        for k, t in enumerate(run.tau):
            for i in range(N):
                w.writerow([f"{t:.17g}", i] + [f"{series[mu][k, i]:.17g}" for mu in range(4)])
    frame = run.states[0].frame
    meta = {
        "schema_version": 1,
        "N": N,
        "mass": run.mass,
        "einbein": run.einbein.to_dict(),
        "frame_real": [[float(f"{v:.17g}") for v in row] for row in frame.real],
        "frame_imag": [[float(f"{v:.17g}") for v in row] for row in frame.imag],
    }
    if extra:
        meta.update(extra)
    with open(out_json, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
