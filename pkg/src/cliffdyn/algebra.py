"""Split Clifford algebra Cl(2n, 2n, R) written in complex form.

Only grade-1 elements are needed by the physics, so the working
representation is :class:`CVector`: a complex coefficient vector over the
4n real generators ``g_1..g_2n, h_1..h_2n`` with ``g.g = 2`` and
``h.h = -2``.  The inner product ``a.b = (ab + ba)/2`` of two grade-1
elements is then the symmetric bilinear metric form.

:class:`Multivector` is a small sparse blade engine used to cross-check the
metric form against the full geometric product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CapacityError, ContextError

MAX_GENERATORS = 64


@dataclass(frozen=True)
class AlgebraContext:
    """Cl(2n, 2n, R).  ``verification`` marks contexts usable by the blade
    engine, which caps them at 4n <= 64 generators."""

    n: int
    verification: bool = field(default=True, compare=False)
    metric_signs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise CapacityError(f"n must be a positive integer, got {self.n!r}")
        if self.verification and 4 * self.n > MAX_GENERATORS:
            raise CapacityError(f"4n = {4 * self.n} generators exceeds blade capacity {MAX_GENERATORS}")
        object.__setattr__(self, "metric_signs", (1,) * (2 * self.n) + (-1,) * (2 * self.n))

    @property
    def generator_count(self) -> int:
        return 4 * self.n

    @cached_property
    def weights(self) -> np.ndarray:
        # a.b = sum_k w_k a_k b_k, generators square to +-2
        return 2.0 * np.asarray(self.metric_signs, dtype=float)

    # generator indices ------------------------------------------------
    def g_index(self, i: int) -> int:
        """0-based column of g_i (1-based i, 1..2n)."""
        if not 1 <= i <= 2 * self.n:
            raise IndexError(i)
        return i - 1

    def h_index(self, i: int) -> int:
        if not 1 <= i <= 2 * self.n:
            raise IndexError(i)
        return 2 * self.n + i - 1

    def g(self, i: int) -> "CVector":
        v = np.zeros(self.generator_count, dtype=complex)
        v[self.g_index(i)] = 1.0
        return CVector(v, self)

    def h(self, i: int) -> "CVector":
        v = np.zeros(self.generator_count, dtype=complex)
        v[self.h_index(i)] = 1.0
        return CVector(v, self)

    # complex basis ----------------------------------------------------
    def e_coeffs(self, i: int) -> np.ndarray:
        """Coefficients of e_i = (-i h_i + h_{n+i})/2, so that e_i . e_i* = -1."""
        v = np.zeros(self.generator_count, dtype=complex)
        v[self.h_index(i)] = -0.5j
        v[self.h_index(self.n + i)] = 0.5
        return v

    def f_coeffs(self, i: int) -> np.ndarray:
        """Coefficients of f_i = (-i g_i + g_{n+i})/2, so that f_i . f_i* = +1."""
        v = np.zeros(self.generator_count, dtype=complex)
        v[self.g_index(i)] = -0.5j
        v[self.g_index(self.n + i)] = 0.5
        return v

    def e(self, i: int) -> "CVector":
        return CVector(self.e_coeffs(i), self)

    def f(self, i: int) -> "CVector":
        return CVector(self.f_coeffs(i), self)

    @cached_property
    def e_basis(self) -> np.ndarray:
        """(n, 4n) array whose rows are e_1..e_n."""
        return np.array([self.e_coeffs(i) for i in range(1, self.n + 1)])

    @cached_property
    def f_basis(self) -> np.ndarray:
        return np.array([self.f_coeffs(i) for i in range(1, self.n + 1)])

    def zeros(self, *shape) -> np.ndarray:
        return np.zeros(shape + (self.generator_count,), dtype=complex)


def make_algebra(n: int, verification: bool = True) -> AlgebraContext:
    """Context for Cl(2n, 2n, R), i.e. a 2n-dimensional complex space V_C.

    With ``verification=False`` the context serves grade-1 arithmetic only
    and is not limited by the blade capacity.
    """
    return AlgebraContext(int(n) if isinstance(n, (int, np.integer)) else n, bool(verification))


def gram(a: np.ndarray, b: np.ndarray, ctx: AlgebraContext) -> np.ndarray:
    """Bilinear inner products between stacks of coefficient vectors.

    ``a`` has shape (..., m, 4n) and ``b`` shape (..., k, 4n); the result has
    shape (..., m, k).  Nothing is conjugated.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    return np.einsum("...ik,...jk->...ij", a * ctx.weights, b)


def pair(a: np.ndarray, b: np.ndarray, ctx: AlgebraContext) -> np.ndarray:
    """Elementwise inner product over the trailing generator axis."""
    return np.sum(np.asarray(a) * ctx.weights * np.asarray(b), axis=-1)


@dataclass(frozen=True, eq=False)
class CVector:
    coeffs: np.ndarray
    context: AlgebraContext

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.context.generator_count,):
            raise ValueError(f"expected {self.context.generator_count} coefficients, got shape {c.shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def _check(self, other):
        if not isinstance(other, CVector):
            return NotImplemented
        if other.context != self.context:
            raise ContextError("CVectors belong to different algebra contexts")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return CVector(self.coeffs + other.coeffs, self.context)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return CVector(self.coeffs - other.coeffs, self.context)

    def __neg__(self):
        return CVector(-self.coeffs, self.context)

    def __mul__(self, scalar):
        if isinstance(scalar, CVector):
            return NotImplemented
        return CVector(complex(scalar) * self.coeffs, self.context)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return CVector(self.coeffs / complex(scalar), self.context)

    def conj(self) -> "CVector":
        return CVector(np.conj(self.coeffs), self.context)

    def dot(self, other: "CVector") -> complex:
        return inner(self, other)

    def allclose(self, other: "CVector", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol))

    def to_multivector(self) -> "Multivector":
        _require_engine(self.context)
        terms = {1 << k: complex(c) for k, c in enumerate(self.coeffs) if c != 0}
        return Multivector(terms, self.context)

    @classmethod
    def zero(cls, ctx: AlgebraContext) -> "CVector":
        return cls(np.zeros(ctx.generator_count, dtype=complex), ctx)


def inner(a: CVector, b: CVector) -> complex:
    """a.b = (ab + ba)/2: complex-bilinear, symmetric, not sesquilinear."""
    if a.context != b.context:
        raise ContextError("inner product of CVectors from different contexts")
    return complex(np.sum(a.coeffs * a.context.weights * b.coeffs))


def conj(a: CVector) -> CVector:
    return a.conj()


# ----------------------------------------------------------------------
# full multivector engine (verification path only)


def _require_engine(ctx: AlgebraContext):
    if 4 * ctx.n > MAX_GENERATORS:
        raise CapacityError(f"blade engine supports at most {MAX_GENERATORS} generators, context has {4 * ctx.n}")


def _reorder_sign(a: int, b: int) -> int:
    """Sign from moving the generators of blade b past those of blade a."""
    a >>= 1
    swaps = 0
    while a:
        swaps += bin(a & b).count("1")
        a >>= 1
    return -1 if swaps & 1 else 1


@dataclass(frozen=True, eq=False)
class Multivector:
    terms: dict
    context: AlgebraContext

    def __post_init__(self):
        _require_engine(self.context)
        object.__setattr__(self, "terms", {int(k): complex(v) for k, v in self.terms.items() if v != 0})

    @classmethod
    def scalar(cls, value, ctx):
        return cls({0: value}, ctx)

    @classmethod
    def generator(cls, k: int, ctx):
        """Blade for the 0-based generator column k."""
        return cls({1 << k: 1.0}, ctx)

    def __add__(self, other):
        if other.context != self.context:
            raise ContextError("multivectors from different contexts")
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return Multivector(out, self.context)

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        return Multivector({k: complex(other) * v for k, v in self.terms.items()}, self.context)

    def __rmul__(self, scalar):
        return Multivector({k: complex(scalar) * v for k, v in self.terms.items()}, self.context)

    def grade_part(self, r: int) -> "Multivector":
        return Multivector({k: v for k, v in self.terms.items() if bin(k).count("1") == r}, self.context)

    @property
    def scalar_part(self) -> complex:
        return self.terms.get(0, 0j)

    def grades(self) -> set:
        return {bin(k).count("1") for k in self.terms}

    def allclose(self, other, atol=1e-12) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) <= atol for k in keys)


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    if a.context != b.context:
        raise ContextError("geometric product of multivectors from different contexts")
    squares = a.context.weights  # g_k g_k = w_k
    out: dict = {}
    for ka, va in a.terms.items():
        for kb, vb in b.terms.items():
            coef = va * vb * _reorder_sign(ka, kb)
            common = ka & kb
            k = 0
            while common:
                if common & 1:
                    coef *= squares[k]
                common >>= 1
                k += 1
            key = ka ^ kb
            out[key] = out.get(key, 0) + coef
    return Multivector(out, a.context)


def anticommutator_inner(a: CVector, b: CVector) -> complex:
    """Scalar part of (ab + ba)/2 computed with the full geometric product."""
    ma, mb = a.to_multivector(), b.to_multivector()
    return 0.5 * ((ma * mb) + (mb * ma)).scalar_part


def random_cvector(ctx: AlgebraContext, rng: np.random.Generator, scale: float = 1.0) -> CVector:
    m = ctx.generator_count
    return CVector(scale * (rng.standard_normal(m) + 1j * rng.standard_normal(m)), ctx)
