"""Clifford worldsheets: string modes, induced geometry, Polyakov action.

Worldsheet index 0 is tau and 1 is sigma, with eps_{01} = eps^{01} = +1.
A field on a (n_tau, n_sigma) lattice is stored as ``c[t, s, A, k]``;
derivatives as ``dc[alpha, t, s, A, k]``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm

from .algebra import AlgebraContext
from .errors import CapacityError, DegenerateMetricError, DomainError, FrameError, ValidationError
from .spinors import ETA, SIGMA, from_spinor, lower, momentum_vector, raise_, resolve_phase_point

DEGENERATE_DET = 1e-14
EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])  # eps_{alpha beta}


# ----------------------------------------------------------------------
# modes


@dataclass(frozen=True)
class DeltaSequence:
    n: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return self.n / np.sqrt(np.pi) * np.exp(-(self.n * s) ** 2)

    def matrix(self, sigma) -> np.ndarray:
        sigma = np.asarray(sigma, dtype=float)
        return self(sigma[:, None] - sigma[None, :])


def gaussian_packets(sigma, centers, n) -> np.ndarray:
    """g_i(sigma) whose sum over packets approximates delta_n (rows: nodes)."""
    sigma = np.asarray(sigma, dtype=float)
    centers = np.asarray(centers, dtype=float)
    ds = np.mean(np.diff(centers)) if centers.size > 1 else 1.0
    amp = n * np.sqrt(2.0 / np.pi) * np.sqrt(ds)
    return amp * np.exp(-2.0 * n**2 * (sigma[:, None] - centers[None, :]) ** 2)


def eigen_modes(sigma, n, cutoff=1e-13) -> np.ndarray:
    """g with g g^dagger = delta_n exactly on the grid (up to the eigenvalue cutoff)."""
    D = DeltaSequence(n).matrix(sigma)
    lam, V = np.linalg.eigh(D)
    keep = lam > cutoff * lam.max()
    return V[:, keep] * np.sqrt(lam[keep])


@dataclass(frozen=True, eq=False)
class StringModeSet:
    sigma: np.ndarray
    g: np.ndarray  # (n_nodes, n_modes)
    f: np.ndarray  # (n_sectors, n_nodes, 4n)
    signs: tuple
    context: AlgebraContext
    delta: DeltaSequence

    def gram(self, p=0, q=0) -> np.ndarray:
        """f^p(sigma) . f^{*q}(sigma')."""
        w = self.context.weights
        return np.einsum("ik,jk->ij", self.f[p] * w, np.conj(self.f[q]))

    def unstarred_gram(self, p=0, q=0) -> np.ndarray:
        w = self.context.weights
        return np.einsum("ik,jk->ij", self.f[p] * w, self.f[q])

    def gram_deviation(self) -> float:
        """max over sectors of |Gram - delta_n sign(p) delta^{pq}|."""
        D = self.delta.matrix(self.sigma)
        worst = 0.0
        for p in range(len(self.signs)):
            for q in range(len(self.signs)):
                target = self.signs[p] * D if p == q else 0.0
                worst = max(worst, float(np.max(np.abs(self.gram(p, q) - target))))
                worst = max(worst, float(np.max(np.abs(self.unstarred_gram(p, q)))))
        return worst

    def transformed(self, U) -> "StringModeSet":
        f = np.einsum("ij,pjk->pik", U, self.f)
        return StringModeSet(self.sigma, U @ self.g, f, self.signs, self.context, self.delta)


def build_modes(g, ctx: AlgebraContext, sigma, n: float, signs=(1,)) -> StringModeSet:
    """f^p(sigma) = sum_i g_i(sigma) e_i^p, one block of basis pairs per sector p.

    Positive sectors use the f_k (norm +1) elements and negative sectors the
    e_k (norm -1) elements of the context.
    """
    g = np.asarray(g, dtype=complex)
    nodes, modes = g.shape
    if len(sigma) != nodes:
        raise ValidationError("g must have one row per sigma node")
    if modes * len(signs) > ctx.n:
        raise CapacityError(f"{modes} modes x {len(signs)} sectors need {modes * len(signs)} pairs, context has {ctx.n}")
    f = []
    for k, sgn in enumerate(signs):
        basis = ctx.f_basis if sgn > 0 else ctx.e_basis
        f.append(g @ basis[k * modes:(k + 1) * modes])
    return StringModeSet(np.asarray(sigma, float), g, np.array(f), tuple(int(s) for s in signs), ctx, DeltaSequence(n))


def pseudo_unitary(metric, H) -> np.ndarray:
    """U = exp(i metric H) for Hermitian H; satisfies U metric U^dagger = metric."""
    return expm(1j * np.asarray(metric) @ np.asarray(H))


# ----------------------------------------------------------------------
# grids and geometry


@dataclass(frozen=True, eq=False)
class WorldsheetGrid:
    tau: np.ndarray
    sigma: np.ndarray
    c: np.ndarray  # (nt, ns, 2, 4n)
    context: AlgebraContext
    dc: np.ndarray | None = None  # analytic derivatives, (2, nt, ns, 2, 4n)

    def __post_init__(self):
        if self.c.shape[:2] != (len(self.tau), len(self.sigma)):
            raise ValidationError("field shape does not match the lattice")
        if np.any(np.diff(self.tau) <= 0) or np.any(np.diff(self.sigma) <= 0):
            raise ValidationError("grid coordinates must be strictly increasing")

    def derivatives(self) -> np.ndarray:
        """Analytic derivatives when supplied, else second-order differences
        (central inside, one-sided at the boundary)."""
        if self.dc is not None:
            return self.dc
        dt = np.gradient(self.c, self.tau, axis=0, edge_order=2)
        ds = np.gradient(self.c, self.sigma, axis=1, edge_order=2)
        return np.array([dt, ds])

    @property
    def x(self) -> np.ndarray:
        w = self.context.weights
        xs = np.einsum("tsak,tsbk->tsab", self.c * w, np.conj(self.c))
        return from_spinor(xs, check=False)


def _pair_grid(a, b, w):
    """a^A . b^B over the trailing axis for arrays (..., 2, dim)."""
    return np.einsum("...ak,...bk->...ab", a * w, b)


@dataclass(frozen=True, eq=False)
class InducedGeometry:
    V: np.ndarray  # (2, nt, ns, 4) complex
    g: np.ndarray  # (nt, ns, 2, 2) complex
    h: np.ndarray  # (nt, ns, 2, 2) real
    h_abs_det: np.ndarray
    phi: np.ndarray
    K: np.ndarray  # (nt, ns, 2, 2) h^{ab} dc . dc*
    W: np.ndarray  # (nt, ns, 4)
    WW: np.ndarray
    dstar: np.ndarray | None = None  # (2, nt, ns, 2, dim), after the redefinition
    dc: np.ndarray | None = None

    @property
    def sqrt_h(self):
        return np.sqrt(self.h_abs_det)

    @property
    def weight(self):
        """phi sqrt(h)."""
        return self.phi * self.sqrt_h

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.g - np.conj(np.swapaxes(self.g, -1, -2)))))

    def recomposition_residual(self) -> float:
        """max |g - (h + i phi sqrt(h) eps)|, relative to max(1, max |g|)."""
        rebuilt = self.h + 1j * (self.phi * self.sqrt_h)[..., None, None] * EPS2
        return float(np.max(np.abs(self.g - rebuilt)) / max(1.0, float(np.max(np.abs(self.g)))))

    def cube_root(self):
        return np.cbrt(self.WW)

    @property
    def dstar_raw(self):
        """Multi-momenta before the redefinition d -> phi sqrt(h) d."""
        return self.weight[None, ..., None, None] * self.dstar


def induced_geometry(grid: WorldsheetGrid, with_momenta: bool = True) -> InducedGeometry:
    ctx = grid.context
    w = ctx.weights
    c = grid.c
    dc = grid.derivatives()
    M = np.array([_pair_grid(c, np.conj(dc[a]), w) for a in range(2)])  # c^A . d_a c*^B
    V = np.einsum("mba,...ab->...m", SIGMA, M)
    g = np.einsum("atsm,mn,btsn->tsab", V, ETA, np.conj(V))
    h = (0.5 * (g + np.swapaxes(g, -1, -2))).real
    hdet = np.linalg.det(h)
    bad = np.argwhere(np.abs(hdet) < DEGENERATE_DET)
    if bad.size:
        raise DegenerateMetricError([tuple(map(int, b)) for b in bad])
    habs = np.abs(hdet)
    phi = (-0.5j * (g[..., 0, 1] - g[..., 1, 0]) / np.sqrt(habs)).real
    hinv = np.linalg.inv(h)
    D = np.einsum("atsAk,btsBk->tsabAB", dc * w, np.conj(dc))  # d_a c^A . d_b c*^B
    K = np.einsum("tsab,tsabAB->tsAB", hinv, D)
    W = from_spinor(K, check=False)
    WW = np.einsum("...m,mn,...n->...", W, ETA, W)
    geo = InducedGeometry(V, g, h, habs, phi, K, W, WW, dc=dc)
    if with_momenta:
        geo = multimomenta(geo, hinv)
    return geo


def multimomenta(geo: InducedGeometry, hinv=None) -> InducedGeometry:
    """d*^alpha_A = (W.W)^{-2/3} W_{AB'} h^{alpha beta} d_beta c*^B' (redefined form)."""
    if np.any(geo.WW <= 0):
        raise DomainError(f"W.W must be positive for the cube root, min is {float(np.min(geo.WW)):.3e}")
    hinv = np.linalg.inv(geo.h) if hinv is None else hinv
    L = lower(geo.K)
    pref = geo.WW ** (-2.0 / 3.0)
    ds = np.einsum("tsab,btsBk->atsBk", hinv, np.conj(geo.dc))
    dstar = pref[None, ..., None, None] * np.einsum("tsAB,atsBk->atsAk", L, ds)
    return InducedGeometry(**{**geo.__dict__, "dstar": dstar})


def pairing_density(geo: InducedGeometry, w) -> np.ndarray:
    """d*^alpha_A . d_alpha c^A + c.c."""
    t = np.einsum("atsAk,atsAk->ts", geo.dstar * w, geo.dc)
    return 2.0 * t.real


def momentum_spinor_field(geo: InducedGeometry, w) -> np.ndarray:
    """Q_{AB'} = h_{ab} d*^a_A . d^b_B'."""
    P = np.einsum("atsAk,btsBk->tsabAB", geo.dstar * w, np.conj(geo.dstar))
    return np.einsum("tsab,tsabAB->tsAB", geo.h, P)


def field_momentum(geo: InducedGeometry, w) -> np.ndarray:
    return momentum_vector(momentum_spinor_field(geo, w))


def _rel(diff, ref) -> float:
    """max |diff| scaled by max(1, max |ref|)."""
    return float(np.max(np.abs(diff)) / max(1.0, float(np.max(np.abs(ref)))))


def momentum_square_residual(geo: InducedGeometry, w) -> float:
    Q = momentum_spinor_field(geo, w)
    lhs = 0.5 * np.einsum("...ab,...ab->...", raise_(Q), Q)
    return _rel(lhs - geo.cube_root(), geo.cube_root())


def pairing_residual(geo: InducedGeometry, w) -> float:
    return _rel(pairing_density(geo, w) - 4.0 * geo.cube_root(), 4.0 * geo.cube_root())


def lagrangian_density(geo: InducedGeometry, m: float) -> np.ndarray:
    return (3.0 * geo.cube_root() - m * m) * geo.weight


def hamiltonian_density(geo: InducedGeometry, w, m: float) -> np.ndarray:
    """phi sqrt(h) (d*.dc + c.c.) - L, to be compared with (p.p + m^2) phi sqrt(h)."""
    return geo.weight * pairing_density(geo, w) - lagrangian_density(geo, m)


def first_order_density(geo: InducedGeometry, w, m: float) -> np.ndarray:
    p = field_momentum(geo, w)
    pp = np.einsum("...m,mn,...n->...", p, ETA, p)
    return (pairing_density(geo, w) - (pp + m * m)) * geo.weight


def _integrate(grid: WorldsheetGrid, density) -> float:
    return float(simpson(simpson(density, x=grid.sigma, axis=1), x=grid.tau))


def string_action(grid: WorldsheetGrid, m: float, geo=None) -> float:
    geo = geo or induced_geometry(grid)
    if np.any(geo.WW <= 0):
        raise DomainError("W.W must be positive")
    return _integrate(grid, lagrangian_density(geo, m))


def first_order_action(grid: WorldsheetGrid, m: float, geo=None) -> float:
    geo = geo or induced_geometry(grid)
    return _integrate(grid, first_order_density(geo, grid.context.weights, m))


def identity_report(grid: WorldsheetGrid, m: float) -> dict:
    """Residuals of the exact identities; density identities are scaled by max(1, |reference|)."""
    geo = induced_geometry(grid)
    w = grid.context.weights
    p = field_momentum(geo, w)
    pp = np.einsum("...m,mn,...n->...", p, ETA, p)
    H = hamiltonian_density(geo, w, m)
    I1, I0 = first_order_action(grid, m, geo), string_action(grid, m, geo)
    return {
        "hermiticity": geo.hermiticity_residual(),
        "recomposition": geo.recomposition_residual(),
        "momentum_square": momentum_square_residual(geo, w),
        "pairing": pairing_residual(geo, w),
        "hamiltonian": _rel(H - (pp + m * m) * geo.weight, H),
        "first_order_vs_second_order": abs(I1 - I0) / max(1.0, abs(I0)),
    }


def smooth_field(ctx: AlgebraContext, rng, n: int = 32, lam: float = 1.0, eps: float = 0.1) -> WorldsheetGrid:
    """Smooth test field in the positive-norm sector, with analytic derivatives.

    c = exp(i lam sigma) (c0 + tau a + eps (sin(tau + 2 sigma) b1 + cos(2 tau - sigma) b2)).
    """
    def rnd():
        z = rng.standard_normal((2, ctx.n)) + 1j * rng.standard_normal((2, ctx.n))
        return z @ ctx.f_basis

    c0, a, b1, b2 = rnd(), rnd(), rnd(), rnd()
    t = np.linspace(0.0, 1.0, n)
    s = np.linspace(0.0, 1.0, n)
    T, S = (x[..., None, None] for x in np.meshgrid(t, s, indexing="ij"))
    ph = np.exp(1j * lam * S)
    base = c0 + T * a + eps * (np.sin(T + 2 * S) * b1 + np.cos(2 * T - S) * b2)
    d_t = a + eps * (np.cos(T + 2 * S) * b1 - 2 * np.sin(2 * T - S) * b2)
    d_s = eps * (2 * np.cos(T + 2 * S) * b1 + np.sin(2 * T - S) * b2)
    return WorldsheetGrid(t, s, ph * base, ctx, dc=np.array([ph * d_t, ph * (1j * lam * base + d_s)]))


def random_smooth_field(ctx: AlgebraContext, seed: int, n: int = 32, max_tries: int = 200) -> WorldsheetGrid:
    """First field from the seeded stream with W.W > 0 and a regular metric everywhere."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        grid = smooth_field(ctx, rng, n)
        try:
            geo = induced_geometry(grid, with_momenta=False)
        except DegenerateMetricError:
            continue
        if np.all(geo.WW > 0):
            return grid
    raise DomainError(f"no admissible field found in {max_tries} draws")


# ----------------------------------------------------------------------
# constraint and Noether structure


def constraint_and_noether(c, dstar, ctx: AlgebraContext, weight=None) -> dict:
    """Residuals of the constraint mu^a eps_ab d*^b = 0 and of the Noether condition.

    ``c`` has shape (nt, ns, 2, dim) and ``dstar`` (2, nt, ns, 2, dim);
    ``weight`` is phi sqrt(h) (defaults to 1).
    """
    from .spinors import lower_index

    w = ctx.weights
    c = np.asarray(c)
    dstar = np.asarray(dstar)
    weight = np.ones(c.shape[:2]) if weight is None else np.asarray(weight)
    N = np.einsum("atsAk,tsBk->atsAB", dstar * w, c)  # d*^a_A . c^B
    tr = np.trace(N, axis1=-2, axis2=-1)
    mu = 0.5 * tr.real  # (1/4)(d*.c + c.c.)
    constraint = mu[0][..., None, None] * dstar[1] - mu[1][..., None, None] * dstar[0]
    c_low = lower_index(c)
    M = np.einsum("atsAk,tsBk->atsAB", dstar * w, c_low)
    J = weight[None, ..., None, None] * (M + np.swapaxes(M, -1, -2))
    j = (1j * weight[None] * (tr - np.conj(tr))).real
    noether = N - mu[..., None, None] * np.eye(2)
    row0 = float(max(np.max(np.abs(J[:, 0])), np.max(np.abs(j[:, 0]))))
    return {
        "mu": mu,
        "constraint": float(np.max(np.abs(constraint))),
        "currents_initial_row": row0,
        "currents": float(max(np.max(np.abs(J)), np.max(np.abs(j)))),
        "noether": float(np.max(np.abs(noether))),
        "mu_imag": float(np.max(np.abs(0.5 * tr.imag))),
    }


def lift_trajectory(traj, n_sigma: int):
    """Point particle lifted to a sheet constant in sigma, in the mu^2 = 0 parametrization.

    Returns (c, dstar) with d*^1 = 0 and d*^0 equal to the particle momentum spinor.
    """
    c = np.repeat(np.asarray(traj.c)[:, None], n_sigma, axis=1)
    dstar = np.zeros((2,) + c.shape, dtype=complex)
    dstar[0] = np.asarray(traj.d_star)[None, None]
    return c, dstar


# ----------------------------------------------------------------------
# reduced parametrization


@dataclass(frozen=True, eq=False)
class ReducedSheet:
    """Solution in the parametrization v^2 = 0, v^1 = 2m with frame e^2_1 = 0."""

    tau: np.ndarray
    sigma: np.ndarray
    c: np.ndarray  # (nt, ns, 2, dim)
    d_tilde: np.ndarray  # (ns, 2, dim), bra components, constant in tau
    mu0: np.ndarray  # (ns,)
    mass: float
    context: AlgebraContext

    @property
    def mu(self):
        """e^1_1 mu^1 per node, the particle-like Noether scalar."""
        m = self.mass
        return np.sqrt(self.mu0[None, :] ** 2 + m * (self.tau[:, None] - self.tau[0]))

    @property
    def e11(self):
        return 1.0 / (2.0 * self.mass * self.mu)

    @property
    def mu1(self):
        return self.mu / self.e11

    @property
    def h11(self):
        return self.e11**2

    def flow(self):
        """p^{AE'} d~_E' per column."""
        w = self.context.weights
        p_low = np.einsum("sak,sbk->sab", self.d_tilde * w, np.conj(self.d_tilde))
        return np.einsum("sab,sbk->sak", raise_(p_low), np.conj(self.d_tilde))

    def velocity(self):
        return self.e11[..., None, None] * self.flow()[None]

    @property
    def p(self):
        w = self.context.weights
        p_low = np.einsum("sak,sbk->sab", self.d_tilde * w, np.conj(self.d_tilde))
        return momentum_vector(p_low)

    @property
    def x(self):
        w = self.context.weights
        xs = np.einsum("tsak,tsbk->tsab", self.c * w, np.conj(self.c))
        return from_spinor(xs, check=False)

    def as_grid(self) -> WorldsheetGrid:
        return WorldsheetGrid(self.tau, self.sigma, self.c, self.context)

    def residuals(self) -> dict:
        m = self.mass
        w = self.context.weights
        x = self.x
        p = self.p
        pp = np.einsum("sm,mn,sn->s", p, ETA, p)
        dx = np.gradient(x, self.tau, axis=0, edge_order=2)
        dc = np.gradient(self.c, self.tau, axis=0, edge_order=2)
        vel = self.velocity()
        # tau sector: h^{00} = 1/h_00 and d*^0 = d~/e11, d^1 = 0
        K = np.einsum("tsak,tsbk->tsab", vel * w, np.conj(vel)) / self.h11[..., None, None]
        Wv = from_spinor(K, check=False)
        ww = np.einsum("...m,mn,...n->...", Wv, ETA, Wv)
        d0 = self.d_tilde[None] / self.e11[..., None, None]
        pair = 2.0 * np.einsum("tsak,tsak->ts", d0 * w, vel).real
        rhs_dilaton = pair - (pp[None] + m * m)
        N = np.einsum("sak,tsbk->tsab", self.d_tilde * w, self.c)
        return {
            "dx_dtau": float(np.max(np.abs(dx - p[None] / m))),
            "dc_dtau_fd": float(np.max(np.abs(dc - vel))),
            "mass_shell": float(np.max(np.abs(pp - m * m))),
            "ww_cube_root": float(np.max(np.abs(np.cbrt(ww) - m * m))),
            "h11_mu1": float(np.max(np.abs(self.h11 * self.mu1 - 1.0 / (2 * m)))),
            "dilaton_rhs": float(np.max(np.abs(rhs_dilaton - 2 * m * m))),
            "noether": float(np.max(np.abs(N - self.mu[..., None, None] * np.eye(2)))),
        }


def reduced_evolve(xs, ps, mu0, m: float, tau, sigma, ctx: AlgebraContext | None = None) -> ReducedSheet:
    """Evolve initial sigma-slice data (x(sigma), p(sigma), mu0(sigma)) in tau.

    All columns carry the same mass ``m`` and must satisfy p.p = m^2.  The
    frame needs mu0 > 0 so that e^1_1 = 1/(2 m mu) stays finite.
    """
    from .algebra import make_algebra

    xs = np.asarray(xs, float)
    ps = np.asarray(ps, float)
    mu0 = np.broadcast_to(np.asarray(mu0, float), (len(sigma),)).copy()
    tau = np.asarray(tau, float)
    m = float(m)
    if m <= 0:
        raise ValidationError("mass must be positive")
    pp = np.einsum("sm,mn,sn->s", ps, ETA, ps)
    if np.any(np.abs(pp - m * m) > 1e-9 * max(1.0, m * m)):
        raise ValidationError("initial momenta must lie on the common mass shell p.p = m^2")
    if np.any(mu0 <= 0):
        raise FrameError("reduced parametrization needs mu0 > 0 on every column")
    ctx = ctx or make_algebra(5)
    c0, dt = [], []
    for s in range(len(sigma)):
        pt = resolve_phase_point(xs[s], ps[s], mu0[s], ctx)
        c0.append(pt.c.components)
        dt.append(pt.d_star.components)
    sheet = ReducedSheet(tau, np.asarray(sigma, float), None, np.array(dt), mu0, m, ctx)
    E = (sheet.mu - mu0[None]) / m**2
    c = np.array(c0)[None] + E[..., None, None] * sheet.flow()[None]
    return ReducedSheet(tau, sheet.sigma, c, sheet.d_tilde, mu0, m, ctx)


def column_vs_particle(sheet: ReducedSheet, column: int, steps: int = 64) -> float:
    """Max |x| deviation between a column and the particle run resampled in proper time."""
    from . import particle

    pp = resolve_phase_point(sheet.x[0, column], sheet.p[column], sheet.mu0[column], sheet.context)
    span = sheet.tau[-1] - sheet.tau[0]
    # constant einbein long enough to reach the final proper time
    m = sheet.mass
    E_end = (np.sqrt(sheet.mu0[column] ** 2 + m * span) - sheet.mu0[column]) / m**2
    traj = particle.evolve(pp, particle.EinbeinProfile.constant(1.0), m, (0.0, 1.05 * E_end), steps)
    rep = particle.proper_time_reparametrize(traj, tau_bar=sheet.tau - sheet.tau[0])
    return float(np.max(np.abs(rep.x - sheet.x[:, column])))


# ----------------------------------------------------------------------
# export


def write_worldsheet(grid: WorldsheetGrid, geo: InducedGeometry, m: float, csv_path, json_path, extra=None):
    x = grid.x
    w = grid.context.weights
    pair_res = np.abs(pairing_density(geo, w) - 4 * geo.cube_root()) if geo.dstar is not None else None
    with open(csv_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["tau", "sigma", "x0", "x1", "x2", "x3", "phi", "h", "recomposition", "pairing_residual"])
        rebuilt = geo.h + 1j * (geo.phi * geo.sqrt_h)[..., None, None] * EPS2
        rec = np.max(np.abs(geo.g - rebuilt), axis=(-1, -2))
        for t in range(len(grid.tau)):
            for s in range(len(grid.sigma)):
                row = [grid.tau[t], grid.sigma[s], *x[t, s], geo.phi[t, s], geo.h_abs_det[t, s], rec[t, s],
                       pair_res[t, s] if pair_res is not None else float("nan")]
                wr.writerow([f"{v:.17g}" for v in row])
    header = {"schema_version": 1, "n_tau": len(grid.tau), "n_sigma": len(grid.sigma), "mass": m,
              "tau_range": [float(grid.tau[0]), float(grid.tau[-1])],
              "sigma_range": [float(grid.sigma[0]), float(grid.sigma[-1])]}
    if extra:
        header.update(extra)
    with open(json_path, "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
