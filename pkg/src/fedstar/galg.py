"""The truncated Fedosov algebra: symmetric (x) antisymmetric forms over jets, in formal hbar.

A :class:`Section` is a finite sum of terms ``hbar**h * y**alpha (x) dx^A`` with
jet coefficients.  The symmetric factor is a monomial ``y**alpha`` in fibre
variables (``y^i`` standing for ``dx^i`` in the symmetric slot), so the
symmetric product is multiplication of monomials and the symmetric insertion
``i_s(d_i)`` is ``d/dy^i``.  The antisymmetric factor ``dx^A`` is a strictly
increasing index tuple.

Every section carries a truncation window ``Caps(max_deg, max_h)``: terms of
total degree ``2h + |alpha| > max_deg`` or ``h > max_h`` are dropped.  Total
degree is additive under all fibrewise products, so every operation returns
the exact result on its (finite) inputs, truncated to the window.
"""

from __future__ import annotations

from collections import defaultdict
from functools import lru_cache
from math import factorial
from typing import Callable, Iterable, Mapping, NamedTuple

from gmpy2 import mpq

from .jets import Frame, Jet, Scalar, StructuralError

__all__ = [
    "Caps",
    "Section",
    "PairingTensor",
    "UnsupportedFrame",
    "DivisibilityError",
    "fib_mul",
    "delta_tilde",
    "star_fiber",
    "graded_commutator",
    "ad",
    "ad_hbar",
    "delta",
    "delta_inv",
    "nabla",
    "Delta",
    "S",
    "S_inv",
    "conj_C",
    "parity_P",
    "pi_type",
    "div_hbar",
    "component",
    "component_s",
]

Key = tuple  # (h, alpha, asym)


class UnsupportedFrame(StructuralError):
    pass


class DivisibilityError(ArithmeticError):
    """A section expected to be divisible by hbar has an hbar**0 part."""


class Caps(NamedTuple):
    max_deg: int
    max_h: int

    @classmethod
    def for_degree(cls, max_deg: int) -> "Caps":
        return cls(max_deg, max_deg // 2)

    def widen(self, deg: int) -> "Caps":
        return Caps(self.max_deg + deg, self.max_h + (deg + 1) // 2)

    def admits(self, h: int, sdeg: int) -> bool:
        return h <= self.max_h and 2 * h + sdeg <= self.max_deg


# -- antisymmetric index bookkeeping ------------------------------------------


@lru_cache(maxsize=None)
def wedge(a: tuple, b: tuple) -> tuple[int, tuple]:
    """``dx^a ^ dx^b`` as ``(sign, sorted indices)``; sign 0 on overlap."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    if set(a) & set(b):
        return 0, ()
    inversions = sum(1 for x in a for y in b if x > y)
    return (-1) ** inversions, tuple(sorted(a + b))


@lru_cache(maxsize=None)
def sort_signed(idx: tuple) -> tuple[int, tuple]:
    if len(set(idx)) != len(idx):
        return 0, ()
    inversions = sum(1 for p in range(len(idx)) for q in range(p + 1, len(idx)) if idx[p] > idx[q])
    return (-1) ** inversions, tuple(sorted(idx))


def _shift(alpha: tuple, i: int, by: int) -> tuple:
    return alpha[:i] + (alpha[i] + by,) + alpha[i + 1:]


# -- sections -------------------------------------------------------------------


class Section:
    """Sparse element of the truncated algebra; treat as immutable."""

    __slots__ = ("dim", "frame", "caps", "terms")

    def __init__(self, dim: int, frame: Frame | str, caps: Caps, terms: Mapping | None = None):
        self.dim = dim
        self.frame = Frame(frame)
        self.caps = Caps(*caps)
        clean = {}
        for key, c in (terms or {}).items():
            h, alpha, asym = key
            alpha = tuple(alpha)
            asym = tuple(asym)
            if len(alpha) != dim or h < 0 or min(alpha, default=0) < 0:
                raise StructuralError(f"malformed key {key}")
            if any(x >= y for x, y in zip(asym, asym[1:])) or any(not 0 <= x < dim for x in asym):
                raise StructuralError(f"antisymmetric part must be strictly increasing: {asym}")
            if not isinstance(c, Jet) or c.dim != dim:
                raise StructuralError("section coefficients must be jets of the frame dimension")
            if not self.caps.admits(h, sum(alpha)):
                continue
            clean[(h, alpha, asym)] = c
        self.terms = clean

    @classmethod
    def _raw(cls, dim, frame, caps, terms) -> "Section":
        out = object.__new__(cls)
        out.dim = dim
        out.frame = frame
        out.caps = caps
        out.terms = terms
        return out

    def _like(self, terms: dict, caps: Caps | None = None) -> "Section":
        return Section._raw(self.dim, self.frame, caps or self.caps, terms)

    @classmethod
    def zero(cls, dim: int, frame: Frame | str, caps: Caps) -> "Section":
        return cls._raw(dim, Frame(frame), Caps(*caps), {})

    @classmethod
    def function(cls, f: Jet, frame: Frame | str, caps: Caps) -> "Section":
        """``f (x) 1``."""
        return cls(f.dim, frame, caps, {(0, (0,) * f.dim, ()): f})

    @classmethod
    def monomial(cls, coeff: Jet, frame: Frame | str, caps: Caps,
                 sym: Iterable[int] = (), asym: Iterable[int] = (), h: int = 0) -> "Section":
        """``hbar**h * coeff * dx^{s1} v ... (x) dx^{a1} ^ ...`` from index lists (0-based)."""
        dim = coeff.dim
        alpha = [0] * dim
        for i in sym:
            alpha[i] += 1
        sign, idx = sort_signed(tuple(asym))
        if not sign:
            return cls.zero(dim, frame, caps)
        return cls(dim, frame, caps, {(h, tuple(alpha), idx): coeff.scale(sign)})

    # -- structure ------------------------------------------------------------

    def _check(self, other: "Section"):
        if not isinstance(other, Section):
            raise TypeError("expected a Section")
        if (self.dim, self.frame, self.caps) != (other.dim, other.frame, other.caps):
            raise StructuralError(
                f"section mismatch: {(self.dim, self.frame.value, tuple(self.caps))} vs "
                f"{(other.dim, other.frame.value, tuple(other.caps))}")

    def with_caps(self, caps: Caps) -> "Section":
        caps = Caps(*caps)
        return self._like({k: c for k, c in self.terms.items() if caps.admits(k[0], sum(k[1]))}, caps)

    def filter(self, pred: Callable[[int, tuple, tuple], bool]) -> "Section":
        return self._like({k: c for k, c in self.terms.items() if pred(*k)})

    def map_jets(self, fn: Callable[[Jet], Jet]) -> "Section":
        out = {}
        for k, c in self.terms.items():
            out[k] = fn(c)
        return self._like(out)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.terms.values())

    def __bool__(self):
        return not self.is_zero()

    def __len__(self):
        return len(self.terms)

    @property
    def jet_order(self) -> int | None:
        """Smallest reliable jet order among the coefficients."""
        return min((c.order for c in self.terms.values()), default=None)

    def degrees(self) -> set[int]:
        return {2 * h + sum(a) for (h, a, _), c in self.terms.items() if not c.is_zero()}

    def max_degree(self) -> int:
        return max(self.degrees(), default=-1)

    def is_homogeneous_asym(self) -> int | None:
        degs = {len(A) for (_, _, A), c in self.terms.items() if not c.is_zero()}
        return degs.pop() if len(degs) == 1 else (0 if not degs else None)

    def truncate_jets(self, order: int) -> "Section":
        return self.map_jets(lambda c: c.truncate(order))

    def eval0(self) -> dict:
        """Coefficient values at the base point."""
        out = {}
        for k, c in self.terms.items():
            v = c.eval0()
            if v:
                out[k] = v
        return out

    def defect(self) -> Scalar:
        """Deterministic witness of non-vanishing: the first nonzero jet coefficient."""
        for k in sorted(self.terms):
            w = self.terms[k].first_nonzero()
            if w:
                return w
        return Scalar(0)

    # -- linear structure -----------------------------------------------------

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            prev = out.get(k)
            if prev is None:
                out[k] = c
            else:
                out[k] = prev + c
        return self._like(out)

    def __neg__(self):
        return self._like({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "Section":
        s = Scalar.coerce(s)
        return self._like({k: c.scale(s) for k, c in self.terms.items()})

    def __mul__(self, s):
        if isinstance(s, Section):
            raise TypeError("use fib_mul or star_fiber for products of sections")
        return self.scale(s)

    __rmul__ = __mul__

    def times_hbar(self, k: int = 1) -> "Section":
        out = {}
        for (h, a, A), c in self.terms.items():
            if self.caps.admits(h + k, sum(a)):
                out[(h + k, a, A)] = c
        return self._like(out)

    def __eq__(self, other):
        if not isinstance(other, Section):
            return NotImplemented
        try:
            return (self - other).is_zero()
        except StructuralError:
            return False

    __hash__ = None

    def __repr__(self):
        body = ", ".join(f"{k}: {c.eval0()}[o{c.order}]" for k, c in sorted(self.terms.items())[:8])
        more = "" if len(self.terms) <= 8 else f", ... (+{len(self.terms) - 8})"
        return f"Section(dim={self.dim}, {self.frame.value}, caps={tuple(self.caps)}, {{{body}{more}}})"


def sum_sections(parts: Iterable[Section], like: Section) -> Section:
    acc = _Acc()
    for p in parts:
        like._check(p)
        for k, c in p.terms.items():
            acc.add(k, c)
    return like._like(acc.done())


class _Acc:
    """Accumulates jets by key, combining orders at the common reliable order."""

    __slots__ = ("d",)

    def __init__(self):
        self.d: dict = {}

    def add(self, key, jet: Jet):
        prev = self.d.get(key)
        self.d[key] = jet if prev is None else prev + jet

    def done(self) -> dict:
        return self.d


# -- pairings -------------------------------------------------------------------


class PairingTensor:
    """The bivector contracted between left and right factors of a fibrewise product.

    ``kind='weyl'``: an antisymmetric matrix (the Poisson tensor).
    ``kind='wick'``: one-directional on a complex frame, nonzero only at
    ``(k, n + l)`` (holomorphic slot on the left, antiholomorphic on the right).
    Anything else is rejected.
    """

    def __init__(self, dim: int, entries: Mapping[tuple[int, int], Jet], kind: str):
        if kind not in ("weyl", "wick"):
            raise ValueError(f"unknown pairing kind {kind!r}")
        self.dim = dim
        self.kind = kind
        self.entries = {tuple(ij): c for ij, c in entries.items() if not c.is_zero()}
        self._validate()
        self.nonzero = tuple(sorted(self.entries))
        self._powers: dict = {}
        self._transposed = None

    def _validate(self):
        for (i, j), c in self.entries.items():
            if not (0 <= i < self.dim and 0 <= j < self.dim) or c.dim != self.dim:
                raise StructuralError(f"pairing entry {(i, j)} out of range")
        if self.kind == "weyl":
            for (i, j), c in self.entries.items():
                other = self.entries.get((j, i))
                if other is None or not (c + other).is_zero():
                    raise StructuralError("Weyl pairing must be antisymmetric")
        else:
            if self.dim % 2:
                raise StructuralError("Wick pairing needs a complex frame")
            n = self.dim // 2
            for i, j in self.entries:
                if not (i < n <= j):
                    raise StructuralError("Wick pairing must pair holomorphic-left with antiholomorphic-right")

    def entry(self, i: int, j: int) -> Jet | None:
        return self.entries.get((i, j))

    def power(self, m: tuple[int, ...]) -> Jet:
        """Product of entries raised to the multiplicities ``m`` (aligned with ``nonzero``)."""
        out = self._powers.get(m)
        if out is None:
            out = None
            for e, k in zip(self.nonzero, m):
                for _ in range(k):
                    out = self.entries[e] if out is None else out * self.entries[e]
            self._powers[m] = out
        return out

    def transposed(self) -> "PairingTensor":
        """``P^T`` with ``P^T(i, j) = P(j, i)``, built without validation and cached."""
        if self._transposed is not None:
            return self._transposed
        out = object.__new__(PairingTensor)
        out.dim = self.dim
        out.kind = "transposed-" + self.kind
        out.entries = {(j, i): c for (i, j), c in self.entries.items()}
        out.nonzero = tuple(sorted(out.entries))
        out._powers = {}
        out._transposed = self
        self._transposed = out
        return out

    def truncate(self, order: int) -> "PairingTensor":
        return PairingTensor(self.dim, {k: c.truncate(order) for k, c in self.entries.items()}, self.kind)


HALF_I = Scalar(0, mpq(1, 2))


@lru_cache(maxsize=None)
def _contractions(alpha: tuple, beta: tuple, pairs: tuple, rmax: int) -> tuple:
    """Terms of ``sum_r (i/2)^r/r! (P^{ij} d_i (x) d_j)^r`` on ``y^alpha (x) y^beta``.

    Returns ``(gamma, r, coefficient, m)`` where ``m`` are multiplicities of the
    pairing entries and ``gamma`` the exponent of the surviving product monomial.
    """
    out = []
    dim = len(alpha)

    def rec(e: int, left: list, right: list, m: list, r: int):
        if e == len(pairs):
            num = 1
            for k in range(dim):
                num *= factorial(alpha[k]) // factorial(left[k])
                num *= factorial(beta[k]) // factorial(right[k])
            den = 1
            for k in m:
                den *= factorial(k)
            coeff = HALF_I ** r * mpq(num, den)
            gamma = tuple(left[k] + right[k] for k in range(dim))
            out.append((gamma, r, coeff, tuple(m)))
            return
        i, j = pairs[e]
        top = min(left[i], right[j], rmax - r)
        for k in range(top + 1):
            left[i] -= k
            right[j] -= k
            m.append(k)
            rec(e + 1, left, right, m, r + k)
            m.pop()
            left[i] += k
            right[j] += k

    rec(0, list(alpha), list(beta), [], 0)
    return tuple(out)


# -- products ---------------------------------------------------------------------


def _group_by_sym(a: Section) -> dict:
    groups: dict = defaultdict(list)
    for (h, alpha, A), c in a.terms.items():
        groups[alpha].append((h, A, c))
    return groups


def fib_mul(a: Section, b: Section) -> Section:
    """Undeformed fibrewise product: ``y`` monomials multiply, forms wedge, hbar powers add."""
    a._check(b)
    caps = a.caps
    acc = _Acc()
    for (h1, al, A1), c1 in a.terms.items():
        for (h2, be, A2), c2 in b.terms.items():
            gamma = tuple(x + y for x, y in zip(al, be))
            if not caps.admits(h1 + h2, sum(gamma)):
                continue
            sign, A = wedge(A1, A2)
            if sign:
                acc.add((h1 + h2, gamma, A), (c1 * c2).scale(sign))
    return a._like(acc.done())


def star_fiber(a: Section, b: Section, P: PairingTensor, caps: Caps | None = None,
               sym_max: int | None = None) -> Section:
    """Fibrewise deformed product ``sum_r (i hbar/2)^r / r! P^{i1 j1}..P^{ir jr} d_I a . d_J b``.

    With the Poisson tensor as ``P`` this is the fibrewise Weyl product; with
    the one-directional Wick pairing it is the fibrewise Wick product.  ``caps``
    widens the output window (the operands are unchanged); ``sym_max`` drops
    output terms of higher symmetric degree without computing them.
    """
    a._check(b)
    if P.dim != a.dim:
        raise StructuralError("pairing dimension does not match the sections")
    caps = Caps(*caps) if caps is not None else a.caps
    ga, gb = _group_by_sym(a), _group_by_sym(b)
    pairs = P.nonzero
    acc = _Acc()
    for al, ta in ga.items():
        sa = sum(al)
        for be, tb in gb.items():
            sb = sum(be)
            if sym_max is not None and abs(sa - sb) > sym_max:
                continue
            # total degree is preserved by every contraction, so filter pairs up front
            prods: dict = {}
            hmin = None
            for h1, A1, c1 in ta:
                for h2, A2, c2 in tb:
                    h = h1 + h2
                    if 2 * h + sa + sb > caps.max_deg or h > caps.max_h:
                        continue
                    sign, A = wedge(A1, A2)
                    if not sign:
                        continue
                    p = (c1 * c2).scale(sign)
                    prev = prods.get((h, A))
                    prods[(h, A)] = p if prev is None else prev + p
                    hmin = h if hmin is None else min(hmin, h)
            if not prods:
                continue
            rmax = min(sa, sb, caps.max_h - hmin)
            for gamma, r, coeff, m in _contractions(al, be, pairs, rmax):
                if sym_max is not None and sa + sb - 2 * r > sym_max:
                    continue
                pm = P.power(m) if r else None
                for (h, A), p in prods.items():
                    if h + r > caps.max_h:
                        continue
                    term = p if pm is None else p * pm
                    acc.add((h + r, gamma, A), term.scale(coeff))
    return Section._raw(a.dim, a.frame, caps, acc.done())


def split_parity(a: Section) -> tuple[Section, Section]:
    even = a.filter(lambda h, al, A: len(A) % 2 == 0)
    odd = a.filter(lambda h, al, A: len(A) % 2 == 1)
    return even, odd


def graded_commutator(a: Section, b: Section, P: PairingTensor, caps: Caps | None = None) -> Section:
    """``[a, b] = a o b - (-1)^{kl} b o a`` extended bilinearly over antisymmetric degrees.

    Both orderings share every coefficient product; the wedge sign of ``b o a``
    cancels the grading sign, so only the contraction coefficients differ
    (``b o a`` contracts through the transposed pairing).  For an
    antisymmetric pairing the even orders cancel and the odd ones double.
    """
    a._check(b)
    if P.dim != a.dim:
        raise StructuralError("pairing dimension does not match the sections")
    caps = Caps(*caps) if caps is not None else a.caps
    ga, gb = _group_by_sym(a), _group_by_sym(b)
    pairs = P.nonzero
    weyl = P.kind == "weyl"
    PT = None if weyl else P.transposed()
    acc = _Acc()
    for al, ta in ga.items():
        sa = sum(al)
        for be, tb in gb.items():
            sb = sum(be)
            prods: dict = {}
            hmin = None
            for h1, A1, c1 in ta:
                for h2, A2, c2 in tb:
                    h = h1 + h2
                    if 2 * h + sa + sb > caps.max_deg or h > caps.max_h:
                        continue
                    sign, A = wedge(A1, A2)
                    if not sign:
                        continue
                    p = (c1 * c2).scale(sign)
                    prev = prods.get((h, A))
                    prods[(h, A)] = p if prev is None else prev + p
                    hmin = h if hmin is None else min(hmin, h)
            if not prods:
                continue
            rmax = min(sa, sb, caps.max_h - hmin)
            if rmax < 1:
                continue
            if weyl:
                terms = [(gamma, r, coeff * 2, P, m)
                         for gamma, r, coeff, m in _contractions(al, be, pairs, rmax) if r % 2]
            else:
                terms = [(gamma, r, coeff, P, m)
                         for gamma, r, coeff, m in _contractions(al, be, pairs, rmax) if r]
                terms += [(gamma, r, -coeff, PT, m)
                          for gamma, r, coeff, m in _contractions(al, be, PT.nonzero, rmax) if r]
            for gamma, r, coeff, Q, m in terms:
                pm = Q.power(m)
                for (h, A), p in prods.items():
                    if h + r > caps.max_h:
                        continue
                    acc.add((h + r, gamma, A), (p * pm).scale(coeff))
    return Section._raw(a.dim, a.frame, caps, acc.done())


def graded_commutator_naive(a: Section, b: Section, P: PairingTensor, caps: Caps | None = None) -> Section:
    """The same commutator spelled out with two fibrewise products."""
    b_even, b_odd = split_parity(b)
    out = star_fiber(a, b, P, caps)
    if b_even.terms:
        out = out - star_fiber(b_even, a, P, caps)
    if b_odd.terms:
        out = out - star_fiber(b_odd, parity_a(a), P, caps)
    return out


def ad(a: Section, P: PairingTensor) -> Callable[[Section], Section]:
    return lambda b: graded_commutator(a, b, P)


def ad_hbar(a: Section, b: Section, P: PairingTensor) -> Section:
    """``(i/hbar) [a, b]``, exact within the window of ``a``.

    The commutator is formed in a window two total degrees wider, so the
    division by hbar loses nothing.
    """
    wide = a.caps.widen(2)
    comm = graded_commutator(a.with_caps(wide), b.with_caps(wide), P)
    return div_hbar(comm).scale(Scalar(0, 1)).with_caps(a.caps)


def parity_a(a: Section) -> Section:
    """``(-1)^{deg_a}``."""
    return a._like({k: (c if len(k[2]) % 2 == 0 else -c) for k, c in a.terms.items()})


# -- degree maps and projections ---------------------------------------------------


def div_hbar(a: Section) -> Section:
    out = {}
    for (h, al, A), c in a.terms.items():
        if h == 0:
            if c.is_zero():
                continue
            raise DivisibilityError(f"hbar^0 term {(h, al, A)} in a section that must be divisible by hbar")
        out[(h - 1, al, A)] = c
    return a._like(out)


def component(a: Section, k: int) -> Section:
    """Part of total degree ``2h + deg_s == k``."""
    return a.filter(lambda h, al, A: 2 * h + sum(al) == k)


def component_s(a: Section, k: int, s: int) -> Section:
    return a.filter(lambda h, al, A: 2 * h + sum(al) == k and sum(al) == s)


def component_a(a: Section, l: int) -> Section:
    return a.filter(lambda h, al, A: len(A) == l)


def parity_P(a: Section) -> Section:
    """``(-1)^{deg_hbar}``."""
    return a._like({k: (c if k[0] % 2 == 0 else -c) for k, c in a.terms.items()})


def _require_complex(a: Section):
    if a.frame is not Frame.COMPLEX:
        raise UnsupportedFrame("operation needs a complex (holomorphic) frame")


def pi_type(a: Section, k: int, l: int) -> Section:
    """Keep symmetric parts with ``k`` holomorphic and ``l`` antiholomorphic factors."""
    _require_complex(a)
    n = a.dim // 2
    return a.filter(lambda h, al, A: sum(al[:n]) == k and sum(al[n:]) == l)


def conj_C(a: Section) -> Section:
    """Complex conjugation; on a complex frame it also exchanges ``dz^k`` and ``dzbar^k``."""
    if a.frame is Frame.REAL:
        return a._like({k: c.conjugate(Frame.REAL) for k, c in a.terms.items()})
    n = a.dim // 2
    out = {}
    for (h, al, A), c in a.terms.items():
        sign, B = sort_signed(tuple((x + n) % (2 * n) for x in A))
        cc = c.conjugate(Frame.COMPLEX)
        out[(h, al[n:] + al[:n], B)] = cc if sign == 1 else -cc
    return a._like(out)


# -- the Koszul pair ---------------------------------------------------------------


def delta(a: Section) -> Section:
    """``(1 (x) dx^i) i_s(d_i)``."""
    acc = _Acc()
    for (h, al, A), c in a.terms.items():
        for i, k in enumerate(al):
            if not k:
                continue
            sign, B = wedge((i,), A)
            if sign:
                acc.add((h, _shift(al, i, -1), B), c.scale(k * sign))
    return a._like(acc.done())


def delta_inv(a: Section) -> Section:
    """``1/(k+l) (dx^i (x) 1) i_a(d_i)`` on each part of symmetric degree k and form degree l."""
    acc = _Acc()
    caps = a.caps
    for (h, al, A), c in a.terms.items():
        kl = sum(al) + len(A)
        if kl == 0 or not caps.admits(h, sum(al) + 1):
            continue
        for pos, i in enumerate(A):
            sign = -1 if pos % 2 else 1
            B = A[:pos] + A[pos + 1:]
            acc.add((h, _shift(al, i, 1), B), c.scale(Scalar(mpq(sign, kl))))
    return a._like(acc.done())


# -- connection-dependent maps -------------------------------------------------------


def nabla(a: Section, model) -> Section:
    """``(1 (x) dx^i) nabla_{d_i}`` for the model's torsion-free connection.

    ``model.christoffel_by_upper[m]`` lists ``(i, j, Gamma^m_ij)``.  Each
    symmetric and antisymmetric slot gets the usual ``-Gamma`` correction.
    """
    if model.dim != a.dim:
        raise StructuralError("model dimension does not match the section")
    gam = model.christoffel_by_upper
    acc = _Acc()
    for (h, al, A), c in a.terms.items():
        for i in range(a.dim):
            sign, B = wedge((i,), A)
            if sign:
                acc.add((h, al, B), c.partial(i).scale(sign))
        for m, k in enumerate(al):
            if not k:
                continue
            lowered = _shift(al, m, -1)
            for i, j, G in gam.get(m, ()):
                sign, B = wedge((i,), A)
                if sign:
                    acc.add((h, _shift(lowered, j, 1), B), (G * c).scale(-k * sign))
        for pos, m in enumerate(A):
            for i, j, G in gam.get(m, ()):
                s1, B = sort_signed(A[:pos] + (j,) + A[pos + 1:])
                if not s1:
                    continue
                s2, C = wedge((i,), B)
                if s2:
                    acc.add((h, al, C), (G * c).scale(-s1 * s2))
    return a._like(acc.done())


def delta_tilde(model, caps: Caps) -> Section:
    """``omega_ij y^i (x) dx^j``, the inner generator of ``delta``: ``delta = -(i/hbar) ad(delta_tilde)``.

    Holds for both fibrewise products.  On a Kaehler chart this is
    ``(i/2) H_{kl} (y^k (x) dzbar^l - ybar^l (x) dz^k)``.
    """
    d = model.dim
    terms = {}
    for i in range(d):
        for j in range(d):
            w = model.omega[i][j]
            if w is None or w.is_zero():
                continue
            al = tuple(1 if k == i else 0 for k in range(d))
            key = (0, al, (j,))
            terms[key] = w if key not in terms else terms[key] + w
    return Section(d, model.frame, caps, terms)


def Delta(a: Section, model) -> Section:
    """``omega^{k lbar} i_s(Z_k) i_s(Zbar_l)``; lowers symmetric degree by 2."""
    _require_complex(a)
    n = a.dim // 2
    inv = model.kaehler_inverse
    acc = _Acc()
    for (h, al, A), c in a.terms.items():
        for k in range(n):
            if not al[k]:
                continue
            for l in range(n):
                ak, bl = al[k], al[n + l]
                if not bl or inv[k][l] is None:
                    continue
                beta = _shift(_shift(al, k, -1), n + l, -1)
                acc.add((h, beta, A), (inv[k][l] * c).scale(ak * bl))
    return a._like(acc.done())


def _exp_hbar_Delta(a: Section, model, sign: int) -> Section:
    out = a
    term = a
    m = 0
    while True:
        m += 1
        term = Delta(term, model).times_hbar(1).scale(Scalar(mpq(sign, m)))
        if term.is_zero():
            return out
        out = out + term


def S(a: Section, model) -> Section:
    """``exp(hbar Delta)``; a finite sum since Delta lowers symmetric degree."""
    return _exp_hbar_Delta(a, model, 1)


def S_inv(a: Section, model) -> Section:
    return _exp_hbar_Delta(a, model, -1)
