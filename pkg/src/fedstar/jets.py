"""Exact truncated Taylor jets over the Gaussian rationals.

A :class:`Jet` is the Taylor expansion of a chart function at a fixed base
point, truncated at total degree ``order``.  Coordinates are measured from the
base point, so the constant term is the function value there.

Coefficients are kept in Taylor normalisation internally (the coefficient of
``(x - x0)**alpha``); :meth:`Jet.derivative` and :meth:`Jet.from_derivatives`
translate to and from derivative values ``d^alpha f(x0)``.
"""

from __future__ import annotations

import enum
import itertools
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Mapping

from gmpy2 import mpq

__all__ = [
    "Frame",
    "Scalar",
    "Jet",
    "JetError",
    "StructuralError",
    "SingularityError",
    "BudgetUnderflow",
    "jet_add",
    "jet_mul",
    "jet_partial",
    "jet_invert",
    "jet_conjugate",
    "jet_eval0",
    "multi_indices",
]


class JetError(ArithmeticError):
    pass


class StructuralError(JetError):
    """Operands live in different dimensions, orders or windows."""


class SingularityError(JetError):
    pass


class BudgetUnderflow(JetError):
    """A derivative was requested beyond the reliable order of a jet."""


class Frame(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


def _q(value) -> mpq:
    if isinstance(value, mpq):
        return value
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, float):
        raise TypeError("floats are not accepted in exact arithmetic")
    return mpq(value)


_new = object.__new__


def _mk(re: mpq, im: mpq) -> "Scalar":
    """Unchecked constructor for components that are already ``mpq``."""
    s = _new(Scalar)
    s.re = re
    s.im = im
    return s


class Scalar:
    """Gaussian rational ``re + i*im`` with exact components."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _q(re)
        self.im = _q(im)

    @classmethod
    def coerce(cls, value) -> "Scalar":
        if isinstance(value, Scalar):
            return value
        if isinstance(value, complex):
            raise TypeError("complex floats are not accepted in exact arithmetic")
        return cls(value)

    def __add__(self, other):
        if type(other) is not Scalar:
            other = Scalar.coerce(other)
        return _mk(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is not Scalar:
            other = Scalar.coerce(other)
        return _mk(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __mul__(self, other):
        if type(other) is not Scalar:
            other = Scalar.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return _mk(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Scalar.coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Scalar.coerce(other) * self.inverse()

    def __neg__(self):
        return _mk(-self.re, -self.im)

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = Scalar(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def inverse(self) -> "Scalar":
        n = self.re * self.re + self.im * self.im
        if not n:
            raise ZeroDivisionError("inverse of zero scalar")
        return Scalar(self.re / n, -self.im / n)

    def conjugate(self) -> "Scalar":
        return _mk(self.re, -self.im)

    def is_real(self) -> bool:
        return not self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"Scalar({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}*i"


ZERO = Scalar(0)
ONE = Scalar(1)
I = Scalar(0, 1)


@lru_cache(maxsize=None)
def multi_indices(dim: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All exponent vectors of length ``dim`` with total degree at most ``order``, graded."""
    out = [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) <= order]
    out.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return tuple(out)


@lru_cache(maxsize=None)
def _alpha_factorial(alpha: tuple[int, ...]) -> int:
    out = 1
    for a in alpha:
        out *= factorial(a)
    return out


def _unit(dim: int, i: int) -> tuple[int, ...]:
    return tuple(1 if k == i else 0 for k in range(dim))


class Jet:
    """Truncated Taylor expansion ``sum_alpha c_alpha (x - x0)**alpha``, ``|alpha| <= order``.

    Jets are immutable.  ``+``, ``-`` and ``*`` between jets of different
    orders act at the smaller order (the common reliable order); the strict
    module-level functions :func:`jet_add` and :func:`jet_mul` refuse that.
    """

    __slots__ = ("dim", "order", "coeffs")

    def __init__(self, dim: int, order: int, coeffs: Mapping[tuple[int, ...], object] | None = None):
        if dim <= 0:
            raise StructuralError("jet dimension must be positive")
        if order < 0:
            raise BudgetUnderflow("jet order below zero")
        self.dim = dim
        self.order = order
        clean: dict[tuple[int, ...], Scalar] = {}
        for alpha, c in (coeffs or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != dim or min(alpha, default=0) < 0:
                raise StructuralError(f"bad multi-index {alpha} for dim {dim}")
            if sum(alpha) > order:
                continue
            c = Scalar.coerce(c)
            if c:
                clean[alpha] = c
        self.coeffs = clean

    @classmethod
    def _raw(cls, dim: int, order: int, coeffs: dict) -> "Jet":
        out = object.__new__(cls)
        out.dim = dim
        out.order = order
        out.coeffs = coeffs
        return out

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, dim: int, order: int) -> "Jet":
        return cls._raw(dim, order, {})

    @classmethod
    def constant(cls, dim: int, order: int, value) -> "Jet":
        value = Scalar.coerce(value)
        coeffs = {(0,) * dim: value} if value else {}
        return cls._raw(dim, order, coeffs)

    @classmethod
    def coordinate(cls, dim: int, order: int, i: int, at=0) -> "Jet":
        """The coordinate function ``x_i`` expanded about a base point with ``x_i = at``."""
        if not 0 <= i < dim:
            raise StructuralError(f"coordinate index {i} out of range")
        coeffs = {(0,) * dim: Scalar.coerce(at)}
        if order >= 1:
            coeffs[_unit(dim, i)] = ONE
        return cls(dim, order, coeffs)

    @classmethod
    def from_taylor(cls, dim: int, order: int, coeffs: Mapping) -> "Jet":
        """Build from Taylor coefficients (coefficient of ``(x - x0)**alpha``)."""
        return cls(dim, order, coeffs)

    @classmethod
    def from_derivatives(cls, dim: int, order: int, derivs: Mapping) -> "Jet":
        """Build from derivative values ``d^alpha f(x0)``."""
        return cls(dim, order, {tuple(a): Scalar.coerce(v) * Scalar(mpq(1, _alpha_factorial(tuple(a))))
                                for a, v in derivs.items()})

    # -- inspection -------------------------------------------------------

    def taylor(self, alpha: Iterable[int]) -> Scalar:
        return self.coeffs.get(tuple(alpha), ZERO)

    def derivative(self, alpha: Iterable[int]) -> Scalar:
        """``d^alpha f(x0)``; requires ``|alpha| <= order``."""
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise BudgetUnderflow(f"derivative {alpha} beyond jet order {self.order}")
        return self.taylor(alpha) * _alpha_factorial(alpha)

    def eval0(self) -> Scalar:
        return self.coeffs.get((0,) * self.dim, ZERO)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return all(not any(a) for a in self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    def first_nonzero(self) -> Scalar:
        """Deterministic witness: the lowest nonzero Taylor coefficient, or zero."""
        for alpha in multi_indices(self.dim, self.order):
            if alpha in self.coeffs:
                return self.coeffs[alpha]
        return ZERO

    # -- arithmetic -------------------------------------------------------

    def _check_dim(self, other: "Jet"):
        if self.dim != other.dim:
            raise StructuralError(f"jet dimensions differ: {self.dim} vs {other.dim}")

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        if order < 0:
            raise BudgetUnderflow("jet order below zero")
        return Jet._raw(self.dim, order, {a: c for a, c in self.coeffs.items() if sum(a) <= order})

    def __add__(self, other):
        if not isinstance(other, Jet):
            return self + Jet.constant(self.dim, self.order, other)
        self._check_dim(other)
        order = min(self.order, other.order)
        out = dict(self.truncate(order).coeffs)
        for a, c in other.coeffs.items():
            if sum(a) > order:
                continue
            prev = out.get(a)
            if prev is None:
                out[a] = c
            else:
                s = _mk(prev.re + c.re, prev.im + c.im)
                if s:
                    out[a] = s
                else:
                    del out[a]
        return Jet._raw(self.dim, order, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet._raw(self.dim, self.order, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "Jet":
        s = Scalar.coerce(s)
        if not s:
            return Jet.zero(self.dim, self.order)
        if s == ONE:
            return self
        sr, si = s.re, s.im
        out = {}
        for a, c in self.coeffs.items():
            out[a] = _mk(c.re * sr - c.im * si, c.re * si + c.im * sr)
        return Jet._raw(self.dim, self.order, out)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        self._check_dim(other)
        order = min(self.order, other.order)
        zero = (0,) * self.dim
        if len(other.coeffs) == 1 and zero in other.coeffs:
            return self.truncate(order).scale(other.coeffs[zero])
        if len(self.coeffs) == 1 and zero in self.coeffs:
            return other.truncate(order).scale(self.coeffs[zero])
        return Jet._raw(self.dim, order, _cauchy(self.coeffs, other.coeffs, order))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Jet":
        if k < 0:
            return self.invert() ** (-k)
        out = Jet.constant(self.dim, self.order, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.invert()
        return self.scale(Scalar.coerce(other).inverse())

    def partial(self, i: int) -> "Jet":
        if not 0 <= i < self.dim:
            raise StructuralError(f"coordinate index {i} out of range")
        if self.order == 0:
            raise BudgetUnderflow("derivative of an order-0 jet")
        out = {}
        for a, c in self.coeffs.items():
            k = a[i]
            if k:
                b = a[:i] + (k - 1,) + a[i + 1:]
                out[b] = _mk(c.re * k, c.im * k)
        return Jet._raw(self.dim, self.order - 1, out)

    def invert(self) -> "Jet":
        zero = (0,) * self.dim
        a0 = self.coeffs.get(zero)
        if a0 is None:
            raise SingularityError("jet has zero constant term")
        inv0 = a0.inverse()
        rest = Jet._raw(self.dim, self.order, {a: c for a, c in self.coeffs.items() if a != zero})
        w = rest.scale(-inv0)
        # 1/a = (1/a0) * sum_k w**k; w has no constant term so order+1 terms suffice
        total = Jet.constant(self.dim, self.order, 1)
        power = total
        for _ in range(self.order):
            power = power * w
            if power.is_zero():
                break
            total = total + power
        return total.scale(inv0)

    def conjugate(self, frame: Frame | str = Frame.REAL) -> "Jet":
        frame = Frame(frame)
        if frame is Frame.REAL:
            return Jet._raw(self.dim, self.order, {a: c.conjugate() for a, c in self.coeffs.items()})
        if self.dim % 2:
            raise StructuralError("complex frame needs an even dimension")
        n = self.dim // 2
        return Jet._raw(self.dim, self.order,
                        {a[n:] + a[:n]: c.conjugate() for a, c in self.coeffs.items()})

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        """Equality at the common reliable order."""
        if isinstance(other, Jet):
            if other.dim != self.dim:
                return False
            return (self - other).is_zero()
        try:
            return self == Jet.constant(self.dim, self.order, other)
        except TypeError:
            return NotImplemented

    __hash__ = None

    def __repr__(self):
        terms = ", ".join(f"{a}: {c}" for a, c in sorted(self.coeffs.items(), key=lambda t: (sum(t[0]), t[0])))
        return f"Jet(dim={self.dim}, order={self.order}, {{{terms}}})"


_RADIX = 64
_CODES: dict = {}
_DECODE: dict = {}


def _encode(alpha: tuple) -> int:
    """Pack a multi-index into an int so that adding codes adds exponents (entries stay below 64)."""
    code = _CODES.get(alpha)
    if code is None:
        code = 0
        for x in reversed(alpha):
            code = code * _RADIX + x
        _CODES[alpha] = code
        _DECODE[(len(alpha), code)] = alpha
    return code


def _decode(dim: int, code: int) -> tuple:
    alpha = _DECODE.get((dim, code))
    if alpha is None:
        digits = []
        c = code
        for _ in range(dim):
            c, x = divmod(c, _RADIX)
            digits.append(x)
        alpha = tuple(digits)
        _CODES[alpha] = code
        _DECODE[(dim, code)] = alpha
    return alpha


def _cauchy(a: dict, b: dict, order: int) -> dict:
    if order >= _RADIX:
        raise BudgetUnderflow(f"jet order {order} exceeds the supported range")
    bs = sorted(((sum(k), _encode(k), c.re, c.im) for k, c in b.items()), key=lambda t: t[0])
    re: dict = {}
    im: dict = {}
    for ka, ca in a.items():
        lim = order - sum(ka)
        if lim < 0:
            continue
        code = _encode(ka)
        ar, ai = ca.re, ca.im
        for pb, kb, br, bi in bs:
            if pb > lim:
                break
            g = code + kb
            if ai:
                re[g] = re.get(g, 0) + (ar * br - ai * bi)
                im[g] = im.get(g, 0) + (ar * bi + ai * br)
            else:
                re[g] = re.get(g, 0) + ar * br
                im[g] = im.get(g, 0) + ar * bi
    dim = len(next(iter(a))) if a else 0
    out = {}
    for g, r in re.items():
        i = im[g]
        if r or i:
            out[_decode(dim, g)] = _mk(r, i)
    return out


def _strict(a: Jet, b: Jet):
    if a.dim != b.dim or a.order != b.order:
        raise StructuralError(f"jet mismatch: dim/order {a.dim}/{a.order} vs {b.dim}/{b.order}")


def jet_add(a: Jet, b: Jet) -> Jet:
    _strict(a, b)
    return a + b


def jet_mul(a: Jet, b: Jet) -> Jet:
    _strict(a, b)
    return a * b


def jet_partial(a: Jet, i: int) -> Jet:
    return a.partial(i)


def jet_invert(a: Jet) -> Jet:
    return a.invert()


def jet_conjugate(a: Jet, frame: Frame | str) -> Jet:
    return a.conjugate(frame)


def jet_eval0(a: Jet) -> Scalar:
    return a.eval0()
