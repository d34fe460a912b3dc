"""Four-vectors, Hermitian spinors and their resolution into Clifford spinors.

Conventions
-----------
* ``sigma[0]`` is the identity, ``sigma[1..3]`` the Pauli matrices, and
  ``V^{AB'} = sigma_mu V^mu`` with inverse ``V^mu = tr(sigma_mu V)/2``.
* ``EPS = [[0, 1], [-1, 0]]`` serves as both eps_{AB} and eps^{AB}.  Indices
  are raised as ``c^A = eps^{AB} c_B`` and lowered as ``c_B = c^A eps_{AB}``,
  which makes ``eps^{AB} eps_{CB} = delta^A_C``.
* A Clifford spinor is stored as a (2, 4n) coefficient array: row A holds
  c^A (undotted, upper) or d*_A (momentum spinor, lower).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraContext, CVector, gram
from .errors import CapacityError, DimensionError, ValidationError

SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
ETA = np.diag([1.0, -1.0, -1.0, -1.0])
EPS = np.array([[0.0, 1.0], [-1.0, 0.0]])

HERMITIAN_TOL = 1e-12
ZERO_EIGENVALUE = 1e-12

# complex pairs reserved per particle: x-sector, p-sector, h-sector
X_PAIRS = (0, 1)
P_PAIRS = (2, 3)
H_PAIR = 4
PAIRS_PER_PARTICLE = 5


def minkowski(a, b) -> float:
    return float(np.asarray(a) @ ETA @ np.asarray(b))


def is_hermitian(m, tol=HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[-1] == m.shape[-2] and bool(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2))), initial=0.0) <= tol)


def _require_hermitian(m, what="matrix"):
    m = np.asarray(m, dtype=complex)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DimensionError(f"{what} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if not is_hermitian(m, HERMITIAN_TOL * scale):
        raise ValidationError(f"{what} is not Hermitian")
    return m


def to_spinor(v) -> np.ndarray:
    """Real four-vector(s) (..., 4) -> Hermitian spinor(s) (..., 2, 2)."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 4:
        raise DimensionError("four-vector must have 4 components")
    return np.einsum("...m,mab->...ab", v, SIGMA)


def from_spinor(s, check=True) -> np.ndarray:
    """Hermitian spinor(s) (..., 2, 2) -> real four-vector(s) (..., 4)."""
    s = np.asarray(s, dtype=complex)
    if check:
        _require_hermitian(s, "spinor")
    return 0.5 * np.einsum("mba,...ab->...m", SIGMA, s).real


def complex_components(s) -> np.ndarray:
    """tr(sigma_mu S) for arbitrary (not necessarily Hermitian) 2x2 S."""
    return np.einsum("mba,...ab->...m", SIGMA, np.asarray(s, dtype=complex))


def lower(s) -> np.ndarray:
    """S_{AB} = S^{CD} eps_{CA} eps_{DB} for stacks of 2x2 matrices."""
    return np.einsum("ca,...cd,db->...ab", EPS, np.asarray(s), EPS)


def raise_(s) -> np.ndarray:
    """S^{AB} = eps^{AC} eps^{BD} S_{CD}."""
    return np.einsum("ac,...cd,bd->...ab", EPS, np.asarray(s), EPS)


def lower_index(c) -> np.ndarray:
    """c_B = c^A eps_{AB} on a (..., 2, dim) spinor array."""
    return np.einsum("ab,...ak->...bk", EPS, np.asarray(c))


def raise_index(c) -> np.ndarray:
    """c^A = eps^{AB} c_B."""
    return np.einsum("ab,...bk->...ak", EPS, np.asarray(c))


def momentum_vector(p_low) -> np.ndarray:
    """Contravariant p^mu from the lower-index momentum spinor p_{AB'}."""
    return from_spinor(raise_(p_low))


def momentum_spinor(p) -> np.ndarray:
    """p_{AB'} from a contravariant four-vector p^mu."""
    return lower(to_spinor(p))


def four_vector_rule_residual(s) -> float:
    """max |V_{AE'} V^{BE'} - delta_A^B V_{FE'} V^{FE'}/2|."""
    s = _require_hermitian(s, "spinor")
    low = lower(s)
    lhs = low @ s.T
    trace = np.sum(low * s)
    return float(np.max(np.abs(lhs - 0.5 * trace * np.eye(2))))


# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Two Clifford-valued components, indexed by a spinor index."""

    components: np.ndarray
    context: AlgebraContext

    def __post_init__(self):
        c = np.array(self.components, dtype=complex)
        if c.shape != (2, self.context.generator_count):
            raise DimensionError(f"spinor field must have shape (2, {self.context.generator_count}), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    def __getitem__(self, a) -> CVector:
        return CVector(self.components[a], self.context)

    def conj(self) -> "SpinorField":
        return SpinorField(np.conj(self.components), self.context)

    def __add__(self, other):
        return SpinorField(self.components + other.components, self.context)

    def __mul__(self, s):
        return SpinorField(s * self.components, self.context)

    __rmul__ = __mul__

    def hermitian_gram(self) -> np.ndarray:
        """a^A . a*^B as a 2x2 Hermitian matrix."""
        return gram(self.components, np.conj(self.components), self.context)


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Clifford coordinates c^A and momenta d*_A of one particle."""

    c: SpinorField
    d_star: SpinorField
    context: AlgebraContext

    @classmethod
    def from_arrays(cls, c, d_star, ctx):
        return cls(SpinorField(c, ctx), SpinorField(d_star, ctx), ctx)

    @property
    def x_spinor(self) -> np.ndarray:
        return self.c.hermitian_gram()

    @property
    def p_spinor(self) -> np.ndarray:
        """p_{AB'} = d*_A . d_B'."""
        return self.d_star.hermitian_gram()

    @property
    def x(self) -> np.ndarray:
        return from_spinor(self.x_spinor, check=False)

    @property
    def p(self) -> np.ndarray:
        return momentum_vector(self.p_spinor)

    @property
    def noether_matrix(self) -> np.ndarray:
        """M_A^C = d*_A . c^C; equals mu * identity under the Noether condition."""
        return gram(self.d_star.components, self.c.components, self.context)

    @property
    def mu_complex(self) -> complex:
        return complex(0.5 * np.trace(self.noether_matrix))

    @property
    def mu(self) -> float:
        return self.mu_complex.real

    def noether_residual(self) -> float:
        m = self.noether_matrix
        return float(np.max(np.abs(m - self.mu_complex.real * np.eye(2))))

    def unstarred_residual(self) -> float:
        """Largest of |c.c|, |d*.d*|, |c.d| which must vanish by construction."""
        ctx = self.context
        c, d = self.c.components, self.d_star.components
        return float(max(
            np.max(np.abs(gram(c, c, ctx))),
            np.max(np.abs(gram(d, d, ctx))),
            np.max(np.abs(gram(c, np.conj(d), ctx))),
        ))


# ----------------------------------------------------------------------


def resolve_hermitian(H, ctx: AlgebraContext, pairs=None, zero_threshold=ZERO_EIGENVALUE) -> np.ndarray:
    """Clifford vectors c_1..c_n with c_i . c_j* = H_ij and c_i . c_j = 0.

    Returns an (n, 4n_ctx) coefficient array.  ``pairs`` selects which
    complex basis pairs (e_k, f_k), 0-based, host the construction; by
    default all pairs of a context with ``ctx.n == n``.
    """
    H = _require_hermitian(H, "H")
    n = H.shape[0]
    if pairs is None:
        if ctx.n != n:
            raise DimensionError(f"H is {n}x{n} but the context has complex dimension 2*{ctx.n}")
        pairs = range(n)
    pairs = list(pairs)
    if len(pairs) != n:
        raise DimensionError(f"need {n} basis pairs, got {len(pairs)}")
    if max(pairs) >= ctx.n:
        raise CapacityError(f"pair index {max(pairs)} outside context with n={ctx.n}")
    H = 0.5 * (H + H.conj().T)
    lam, U = np.linalg.eigh(H)
    order = np.argsort(-lam, kind="stable")
    lam, U = lam[order], U[:, order]
    base = np.empty((n, ctx.generator_count), dtype=complex)
    for k, (val, j) in enumerate(zip(lam, pairs)):
        if val > zero_threshold:
            base[k] = np.sqrt(val) * ctx.f_basis[j]
        elif val < -zero_threshold:
            base[k] = np.sqrt(-val) * ctx.e_basis[j]
        else:
            base[k] = ctx.e_basis[j] + ctx.f_basis[j]
    return U @ base


def gram_residuals(c, H, ctx) -> tuple:
    """(max |c_i.c_j* - H_ij|, max |c_i.c_j|)."""
    c = np.asarray(c)
    return (
        float(np.max(np.abs(gram(c, np.conj(c), ctx) - H))),
        float(np.max(np.abs(gram(c, c, ctx)))),
    )


def resolve_null(x, ctx: AlgebraContext, pair_index: int = 0, tol=1e-10) -> SpinorField:
    """Single Weyl spinor times one positive-norm generator f_k."""
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise DimensionError("x must be a four-vector")
    scale = max(1.0, float(np.max(np.abs(x))))
    if abs(minkowski(x, x)) > tol * scale**2 or x[0] < -tol * scale:
        raise ValidationError(f"x = {x} is not a future-directed null vector")
    S = to_spinor(x)
    lam, U = np.linalg.eigh(S)
    v = np.sqrt(max(lam[-1], 0.0)) * U[:, -1]
    k = int(np.argmax(np.abs(v) > 1e-300)) if np.any(v) else 0
    if abs(v[k]) > 0:
        v = v * (abs(v[k]) / v[k])
    comps = np.outer(v, ctx.f_basis[pair_index])
    return SpinorField(comps, ctx)


def required_pairs(particles: int = 1) -> int:
    return PAIRS_PER_PARTICLE * particles


def resolve_phase_point(x, p, mu: float, ctx: AlgebraContext, block: int = 0) -> PhasePoint:
    """Resolve (x^mu, p^mu, mu) into Clifford spinors c^A, d*_A.

    The particle occupies five consecutive complex pairs starting at
    ``5*block``: two for x, two for p and one for the auxiliary elements
    h_1 = f, h_2 = e that carry the cross term d*_A . c^C = mu delta_A^C.
    """
    base = PAIRS_PER_PARTICLE * block
    if ctx.n < base + PAIRS_PER_PARTICLE:
        raise CapacityError(f"context n={ctx.n} cannot host particle block {block} (needs n >= {base + PAIRS_PER_PARTICLE})")
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    mu = float(mu)
    a = np.sqrt(abs(mu))
    s = np.array([1.0, -1.0])  # h_i . h_j* Gram
    h = np.array([ctx.f_basis[base + H_PAIR], ctx.e_basis[base + H_PAIR]])
    shift = a * a * np.diag(s)

    cx = resolve_hermitian(to_spinor(x) - shift, ctx, pairs=[base + X_PAIRS[0], base + X_PAIRS[1]])
    dp = resolve_hermitian(momentum_spinor(p) - shift, ctx, pairs=[base + P_PAIRS[0], base + P_PAIRS[1]])
    c = cx + a * h
    d_star = dp + (np.sign(mu) * a * s)[:, None] * np.conj(h)
    return PhasePoint.from_arrays(c, d_star, ctx)
