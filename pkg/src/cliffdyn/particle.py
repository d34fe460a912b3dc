"""Single-particle dynamics in Clifford space.

The free Hamiltonian e(tau) (p.p - m^2) leaves d*_A constant, so the
evolution of c^A is the exact linear map

    c^A(tau) = c^A(tau_0) + E(tau) p^{AE'} d_E',    E(tau) = int e dt,

which is what :func:`evolve` uses.  :func:`rk4_evolve` integrates the same
Hamilton equations step by step and only serves as a cross-check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .algebra import AlgebraContext, gram, pair
from .errors import DegenerateError, DomainError, EinbeinError, TurningPointError, ValidationError
from .spinors import (
    ETA,
    PhasePoint,
    SpinorField,
    from_spinor,
    lower,
    lower_index,
    momentum_vector,
    raise_,
)

NOETHER_TOL = 1e-10
ON_SHELL_TOL = 1e-9
BISECTION_TOL = 1e-10


# ----------------------------------------------------------------------
# einbein profiles


@dataclass(frozen=True)
class EinbeinProfile:
    """e(tau) as a named analytic profile.

    kinds: ``constant`` (value), ``linear`` (a + b*tau), ``tabulated``
    (piecewise linear through (taus, values)) and ``proper`` (the proper-time
    gauge 1/(2 m mu(tau)) for a particle with mu(tau_ref) = mu0 > 0).
    """

    kind: str = "constant"
    value: float = 1.0
    a: float = 0.0
    b: float = 0.0
    taus: tuple = ()
    values: tuple = ()
    mu0: float = 1.0
    mass: float = 1.0
    tau_ref: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "tabulated", "proper"):
            raise ValidationError(f"unknown einbein kind {self.kind!r}")
        if self.kind == "tabulated":
            t = np.asarray(self.taus, dtype=float)
            if t.ndim != 1 or t.size < 2 or t.size != len(self.values) or np.any(np.diff(t) <= 0):
                raise ValidationError("tabulated einbein needs >= 2 strictly increasing nodes with matching values")
        if self.kind == "proper" and (self.mu0 <= 0 or self.mass <= 0):
            raise ValidationError("proper-time einbein needs mu0 > 0 and mass > 0")

    @classmethod
    def constant(cls, value):
        return cls("constant", value=float(value))

    @classmethod
    def linear(cls, a, b):
        return cls("linear", a=float(a), b=float(b))

    @classmethod
    def tabulated(cls, taus, values):
        return cls("tabulated", taus=tuple(map(float, taus)), values=tuple(map(float, values)))

    @classmethod
    def proper(cls, mu0, mass, tau_ref=0.0):
        return cls("proper", mu0=float(mu0), mass=float(mass), tau_ref=float(tau_ref))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.kind == "constant":
            return np.full_like(tau, self.value)
        if self.kind == "linear":
            return self.a + self.b * tau
        if self.kind == "tabulated":
            return np.interp(tau, self.taus, self.values)
        m = self.mass
        return 1.0 / (2.0 * m * np.sqrt(self.mu0**2 + m * (tau - self.tau_ref)))

    def antiderivative(self, tau):
        """Some F with F' = e (additive constant unspecified)."""
        tau = np.asarray(tau, dtype=float)
        if self.kind == "constant":
            return self.value * tau
        if self.kind == "linear":
            return self.a * tau + 0.5 * self.b * tau**2
        if self.kind == "tabulated":
            t = np.asarray(self.taus)
            v = np.asarray(self.values)
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))])
            # constant extrapolation of e outside the table
            tc = np.clip(tau, t[0], t[-1])
            i = np.clip(np.searchsorted(t, tc, side="right") - 1, 0, t.size - 2)
            dt = tc - t[i]
            slope = (v[i + 1] - v[i]) / (t[i + 1] - t[i])
            inside = cum[i] + v[i] * dt + 0.5 * slope * dt**2
            return inside + v[0] * np.minimum(tau - t[0], 0.0) + v[-1] * np.maximum(tau - t[-1], 0.0)
        m = self.mass
        return (np.sqrt(self.mu0**2 + m * (tau - self.tau_ref)) - self.mu0) / m**2

    def integral(self, t0, tau):
        return self.antiderivative(tau) - self.antiderivative(t0)

    def check_positive(self, t0, t1):
        lo, hi = min(t0, t1), max(t0, t1)
        if self.kind == "constant":
            bad = self.value <= 0
        elif self.kind == "linear":
            bad = min(self(lo), self(hi)) <= 0
        elif self.kind == "tabulated":
            t = np.asarray(self.taus)
            inner = t[(t > lo) & (t < hi)]
            bad = np.min(self(np.concatenate([[lo, hi], inner]))) <= 0
        else:
            bad = self.mu0**2 + self.mass * (lo - self.tau_ref) <= 0
        if bad:
            raise EinbeinError(f"einbein {self.kind} is not positive on [{lo}, {hi}]")

    def inverse_integral(self, t0, E, bracket):
        """tau in ``bracket`` with int_{t0}^{tau} e = E."""
        lo, hi = bracket
        if self.kind == "constant":
            return t0 + E / self.value
        f = lambda t: float(self.integral(t0, t)) - E
        return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "linear":
            d.update(a=self.a, b=self.b)
        elif self.kind == "tabulated":
            d.update(taus=list(self.taus), values=list(self.values))
        else:
            d.update(mu0=self.mu0, mass=self.mass, tau_ref=self.tau_ref)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", "constant")
        if kind == "tabulated":
            return cls.tabulated(d["taus"], d["values"])
        return cls(kind, **d)


# ----------------------------------------------------------------------
# Lagrangians and momenta


def _velocity_array(dc):
    if isinstance(dc, SpinorField):
        return dc.components, dc.context
    raise TypeError("velocity must be a SpinorField")


def quartic_argument(dc: SpinorField) -> float:
    """(1/2) V^{AB'} V_{AB'} with V^{AB'} = dc^A . dc*^B' (equals det V)."""
    v = dc.hermitian_gram()
    return float(np.real(0.5 * np.sum(v * lower(v))))


def _positive_argument(dc):
    arg = quartic_argument(dc)
    if not arg > 0:
        raise DomainError(f"quartic argument {arg:.3e} is not positive (lightlike or degenerate velocity)")
    return arg


def quartic_lagrangian(dc: SpinorField, m: float) -> float:
    return 4.0 * np.sqrt(m) * _positive_argument(dc) ** 0.25


def conjugate_momenta_quartic(dc: SpinorField, m: float) -> SpinorField:
    arr, ctx = _velocity_array(dc)
    arg = _positive_argument(dc)
    v_low = lower(dc.hermitian_gram())
    d_star = np.sqrt(m) * arg ** -0.75 * (v_low @ np.conj(arr))
    return SpinorField(d_star, ctx)


def polyakov_lagrangian(dc: SpinorField, e: float, m: float) -> float:
    if e <= 0:
        raise EinbeinError("einbein must be positive")
    return 3.0 * e ** (-1.0 / 3.0) * _positive_argument(dc) ** (1.0 / 3.0) + m * m * e


def conjugate_momenta_polyakov(dc: SpinorField, e: float) -> SpinorField:
    arr, ctx = _velocity_array(dc)
    arg = _positive_argument(dc)
    v_low = lower(dc.hermitian_gram())
    return SpinorField(e ** (-1.0 / 3.0) * arg ** (-2.0 / 3.0) * (v_low @ np.conj(arr)), ctx)


def einbein_on_shell(dc: SpinorField, m: float) -> float:
    """Stationary point of the Polyakov Lagrangian in e."""
    return _positive_argument(dc) ** 0.25 / m**1.5


def mass_squared(d_star: SpinorField) -> float:
    """p.p = (1/2) p_{AB'} p^{AB'} for p_{AB'} = d*_A . d_B'."""
    p = d_star.hermitian_gram()
    return float(np.real(0.5 * np.sum(p * raise_(p))))


def pairing(d_star: SpinorField, dc: SpinorField) -> float:
    """d*_A . dc^A + c.c."""
    s = np.sum(pair(d_star.components, dc.components, d_star.context))
    return float(2.0 * s.real)


def hamiltonian_density(dc: SpinorField, e: float, m: float) -> float:
    """d*_A . dc^A + c.c. - L for the Polyakov Lagrangian."""
    d_star = conjugate_momenta_polyakov(dc, e)
    return pairing(d_star, dc) - polyakov_lagrangian(dc, e, m)


# ----------------------------------------------------------------------
# charges


@dataclass(frozen=True)
class NoetherCharges:
    J: np.ndarray
    j: float

    @property
    def size(self) -> float:
        return float(max(np.max(np.abs(self.J)), abs(self.j)))


def noether_charges(pp: PhasePoint) -> NoetherCharges:
    ctx = pp.context
    c_low = lower_index(pp.c.components)
    M = gram(pp.d_star.components, c_low, ctx)  # d*_A . c_B
    J = M + M.T
    t = np.trace(pp.noether_matrix)  # d*_A . c^A
    j = 1j * (t - np.conj(t))
    return NoetherCharges(J, float(j.real))


# ----------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class Trajectory:
    tau: np.ndarray
    c: np.ndarray  # (n, 2, 4n_ctx)
    d_star: np.ndarray  # (2, 4n_ctx), constant
    context: AlgebraContext
    mass: float
    einbein: EinbeinProfile
    tau_start: float
    tau_bar: np.ndarray | None = None
    on_shell: bool = True
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.tau.size

    def snapshot(self, i) -> PhasePoint:
        return PhasePoint.from_arrays(self.c[i], self.d_star, self.context)

    @property
    def x(self) -> np.ndarray:
        g = gram(self.c, np.conj(self.c), self.context)
        return from_spinor(g, check=False)

    @property
    def p_spinor(self) -> np.ndarray:
        return gram(self.d_star, np.conj(self.d_star), self.context)

    @property
    def p(self) -> np.ndarray:
        return momentum_vector(self.p_spinor)

    @property
    def mu(self) -> np.ndarray:
        m = gram(self.d_star[None], self.c, self.context)
        return 0.5 * np.real(np.trace(m, axis1=-2, axis2=-1))

    @property
    def mass_shell_residual(self) -> float:
        p = self.p
        return float(p @ ETA @ p - self.mass**2)

    def velocity(self) -> np.ndarray:
        return self.einbein(self.tau)[:, None, None] * _flow_direction(self.d_star, self.context)[None]

    def charges(self) -> list:
        return [noether_charges(self.snapshot(i)) for i in range(len(self))]

    def state_at(self, tau) -> np.ndarray:
        """c^A at arbitrary parameter values via the exact map."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        E = self.einbein.integral(self.tau_start, tau)
        return self.c0[None] + E[:, None, None] * _flow_direction(self.d_star, self.context)[None]

    def x_at(self, tau) -> np.ndarray:
        c = self.state_at(tau)
        return from_spinor(gram(c, np.conj(c), self.context), check=False)

    @property
    def c0(self) -> np.ndarray:
        return self.meta["c0"]

    @property
    def mu0(self) -> float:
        return self.meta["mu0"]

    def mu_exact(self, tau) -> np.ndarray:
        p = self.p
        return self.mu0 + float(p @ ETA @ p) * self.einbein.integral(self.tau_start, np.asarray(tau, dtype=float))

    def to_csv(self, path):
        write_trajectory_csv(self, path)


def _flow_direction(d_star, ctx) -> np.ndarray:
    """p^{AE'} d_E' for momentum spinor rows d*_A."""
    p_low = gram(d_star, np.conj(d_star), ctx)
    return raise_(p_low) @ np.conj(d_star)


def evolve(start: PhasePoint, einbein: EinbeinProfile, m: float, tau_span, steps: int,
           tau_start=None) -> Trajectory:
    """Exact free evolution sampled at ``steps + 1`` points of ``tau_span``.

    ``start`` is the state at ``tau_start`` (default: the first point of the
    span), which may lie anywhere inside the window.
    """
    if m <= 0:
        raise ValidationError("mass must be positive")
    lo, hi = map(float, tau_span)
    t0 = lo if tau_start is None else float(tau_start)
    einbein.check_positive(min(lo, t0), max(hi, t0))
    scale = max(1.0, float(np.max(np.abs(start.noether_matrix))))
    if start.noether_residual() > NOETHER_TOL * scale or abs(start.mu_complex.imag) > NOETHER_TOL * scale:
        raise ValidationError(f"start violates the Noether condition (residual {start.noether_residual():.2e})")
    tau = np.linspace(lo, hi, int(steps) + 1)
    ctx = start.context
    c0 = np.array(start.c.components)
    d_star = np.array(start.d_star.components)
    E = einbein.integral(t0, tau)
    c = c0[None] + E[:, None, None] * _flow_direction(d_star, ctx)[None]
    p = start.p
    on_shell = abs(float(p @ ETA @ p) - m * m) <= ON_SHELL_TOL * max(1.0, m * m)
    return Trajectory(tau, c, d_star, ctx, float(m), einbein, t0, on_shell=on_shell,
                      meta={"c0": c0, "mu0": start.mu})


def rk4_evolve(start: PhasePoint, einbein: EinbeinProfile, tau_span, steps: int) -> np.ndarray:
    """Classical RK4 on dc/dtau = e p^{AE'} d_E', d(d*)/dtau = 0.

    Returns the c samples with shape (steps + 1, 2, 4n).
    """
    ctx = start.context
    t0, t1 = map(float, tau_span)
    h = (t1 - t0) / steps
    dim = ctx.generator_count

    def rhs(t, y):
        d = y[2 * dim:]
        d = d.reshape(2, dim)
        dc = einbein(t) * _flow_direction(d, ctx)
        return np.concatenate([dc.ravel(), np.zeros(2 * dim, dtype=complex)])

    y = np.concatenate([np.ravel(start.c.components), np.ravel(start.d_star.components)]).astype(complex)
    out = [y[:2 * dim].reshape(2, dim).copy()]
    t = t0
    for _ in range(int(steps)):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        out.append(y[:2 * dim].reshape(2, dim).copy())
    return np.array(out)


def first_order_lagrangian(traj: Trajectory) -> np.ndarray:
    """d*_A . dc^A/dtau + c.c. - e (p.p - m^2) along the samples."""
    vel = traj.velocity()
    kin = 2.0 * np.real(np.sum(pair(traj.d_star[None], vel, traj.context), axis=-1))
    p = traj.p
    return kin - traj.einbein(traj.tau) * (float(p @ ETA @ p) - traj.mass**2)


def action_value(traj: Trajectory) -> float:
    from scipy.integrate import simpson

    return float(simpson(first_order_lagrangian(traj), x=traj.tau))


# ----------------------------------------------------------------------
# proper time and turning points


def _proper_time_of_E(mu0, p2, m, E):
    return m * (2.0 * mu0 * E + p2 * E * E)


def turning_point(traj: Trajectory, tol: float = BISECTION_TOL):
    """Root of mu(tau) inside the sampled window, or None."""
    p = traj.p
    p2 = float(p @ ETA @ p)
    if p2 == 0.0 and traj.mu0 == 0.0:
        raise DegenerateError("mu vanishes identically")
    lo, hi = float(traj.tau[0]), float(traj.tau[-1])
    f = traj.mu_exact
    flo, fhi = float(f(lo)), float(f(hi))
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = float(f(mid))
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def double_cover_residual(traj: Trajectory, tau0: float, s_values) -> float:
    """max |x(tau0 + s) - x(tau0 - s)| over the given offsets."""
    s = np.asarray(s_values, dtype=float)
    return float(np.max(np.abs(traj.x_at(tau0 + s) - traj.x_at(tau0 - s))))


def proper_time(traj: Trajectory, tau=None) -> np.ndarray:
    """tau-bar(tau) = int 2 m mu e dtau, anchored at the trajectory start."""
    p = traj.p
    p2 = float(p @ ETA @ p)
    tau = traj.tau if tau is None else np.asarray(tau, dtype=float)
    E = traj.einbein.integral(traj.tau_start, tau)
    return _proper_time_of_E(traj.mu0, p2, traj.mass, E)


def proper_time_reparametrize(traj: Trajectory, tau_bar=None, samples=None) -> Trajectory:
    """Resample a trajectory uniformly (or at given values) in proper time."""
    p = traj.p
    p2 = float(p @ ETA @ p)
    m = traj.mass
    if p2 <= 0:
        raise DegenerateError("proper time needs a timelike momentum")
    mu = traj.mu_exact(traj.tau)
    tp = turning_point(traj)
    if tp is not None and traj.tau[0] < tp < traj.tau[-1]:
        k = int(np.searchsorted(traj.tau, tp))
        raise TurningPointError((float(traj.tau[max(k - 1, 0)]), float(traj.tau[min(k, len(traj) - 1)])))
    if np.all(mu == 0):
        raise DegenerateError("mu vanishes on the whole window")
    sgn = float(np.sign(mu[np.argmax(np.abs(mu))]))
    bounds = proper_time(traj, traj.tau[[0, -1]])
    if tau_bar is None:
        tau_bar = np.linspace(bounds[0], bounds[1], (samples or len(traj)))
    tau_bar = np.asarray(tau_bar, dtype=float)
    lo_b, hi_b = np.min(bounds), np.max(bounds)
    slack = 1e-12 * max(1.0, abs(hi_b), abs(lo_b))
    if np.any(tau_bar < lo_b - slack) or np.any(tau_bar > hi_b + slack):
        raise ValidationError("requested proper times fall outside the trajectory window")
    mu0 = traj.mu0
    if mu0 == 0.0:
        # window starts at the turning point; mu takes the sign of the window
        mu0_sgn = sgn
    else:
        mu0_sgn = float(np.sign(mu0))
    disc = np.maximum(mu0 * mu0 + p2 * tau_bar / m, 0.0)
    E = (-mu0 + mu0_sgn * np.sqrt(disc)) / p2
    span = (float(traj.tau[0]), float(traj.tau[-1]))
    taus = np.array([_invert_einbein(traj, e, span) for e in E])
    c = traj.c0[None] + E[:, None, None] * _flow_direction(traj.d_star, traj.context)[None]
    return replace(traj, tau=taus, c=c, tau_bar=tau_bar)


def _invert_einbein(traj, E, span):
    eb = traj.einbein
    if eb.kind == "constant":
        return traj.tau_start + E / eb.value
    e_lo = float(eb.integral(traj.tau_start, span[0]))
    e_hi = float(eb.integral(traj.tau_start, span[1]))
    if E <= e_lo:
        return span[0]
    if E >= e_hi:
        return span[1]
    return eb.inverse_integral(traj.tau_start, E, span)


def write_trajectory_csv(traj: Trajectory, path):
    x = traj.x
    p = traj.p
    mu = traj.mu
    shell = traj.mass_shell_residual
    charges = traj.charges()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "tau_bar", "x0", "x1", "x2", "x3", "p0", "p1", "p2", "p3", "mu",
                    "mass_shell_residual", "J_norm", "j_abs"])
        for i in range(len(traj)):
            tb = "" if traj.tau_bar is None else f"{traj.tau_bar[i]:.17g}"
            row = [f"{traj.tau[i]:.17g}", tb]
            row += [f"{v:.17g}" for v in x[i]]
            row += [f"{v:.17g}" for v in p]
            row += [f"{mu[i]:.17g}", f"{shell:.17g}",
                    f"{float(np.linalg.norm(charges[i].J)):.17g}", f"{abs(charges[i].j):.17g}"]
            w.writerow(row)
