"""Shared builders and sympy oracles for the test modules."""

import random
from functools import lru_cache

import sympy as sp
from gmpy2 import mpq

from fedstar.fedosov import FedosovContext
from fedstar.galg import Section
from fedstar.geometry import fubini_study, poincare_disc, flat_kaehler, flat_symplectic
from fedstar.jets import Jet, Scalar, multi_indices

BASE_POINTS = [Scalar(mpq(1, 3), mpq(1, 5)), Scalar(mpq(-1, 2), mpq(1, 4)), Scalar(mpq(2, 7), mpq(-3, 5))]


def rand_rat(rng: random.Random, lo=-4, hi=4, den=4) -> mpq:
    return mpq(rng.randint(lo, hi), rng.randint(1, den))


def rand_scalar(rng: random.Random, complex_=True) -> Scalar:
    return Scalar(rand_rat(rng), rand_rat(rng) if complex_ else 0)


def rand_jet(rng: random.Random, dim: int, order: int, terms: int = 5, max_deg: int | None = None,
             complex_=True) -> Jet:
    max_deg = order if max_deg is None else max_deg
    coeffs = {}
    for _ in range(terms):
        a = [0] * dim
        for _ in range(rng.randint(0, max_deg)):
            a[rng.randrange(dim)] += 1
        coeffs[tuple(a)] = rand_scalar(rng, complex_)
    return Jet(dim, order, coeffs)


def to_sympy(s: Scalar):
    return sp.Rational(int(s.re.numerator), int(s.re.denominator)) + \
        sp.I * sp.Rational(int(s.im.numerator), int(s.im.denominator))


def from_sympy(v) -> Scalar:
    v = sp.expand_complex(v)
    re, im = sp.re(v), sp.im(v)
    return Scalar(mpq(int(sp.numer(re)), int(sp.denom(re))), mpq(int(sp.numer(im)), int(sp.denom(im))))


def taylor_jet(expr, syms, point, order: int) -> Jet:
    """Jet of a sympy expression about ``point`` (symbols treated as independent)."""
    at = dict(zip(syms, point))
    derivs = {(0,) * len(syms): expr}
    coeffs = {}
    for alpha in multi_indices(len(syms), order):
        if alpha not in derivs:
            i = next(k for k, a in enumerate(alpha) if a)
            lower = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
            derivs[alpha] = sp.diff(derivs[lower], syms[i])
        v = sp.expand_complex(derivs[alpha].subs(at))
        for k in alpha:
            v = v / sp.factorial(k)
        coeffs[alpha] = from_sympy(v)
    return Jet(len(syms), order, coeffs)


def rand_section(rng, model, caps, terms=4, hmax=1, smax=2, forms=2, jet_terms=2):
    d = model.dim
    out = {}
    for _ in range(terms):
        h = rng.randint(0, hmax)
        al = tuple(rng.randint(0, smax) for _ in range(d))
        A = tuple(sorted(rng.sample(range(d), rng.randint(0, min(forms, d)))))
        coeffs = {}
        for _ in range(jet_terms):
            a = [0] * d
            a[rng.randrange(d)] = rng.randint(0, 1)
            coeffs[tuple(a)] = rand_scalar(rng)
        out[(h, al, A)] = Jet(d, model.order, coeffs)
    return Section(d, model.frame, caps, out)


@lru_cache(maxsize=None)
def context(model: str, kind: str, order: int, at: int = 0) -> FedosovContext:
    """Shared solved contexts; solving ``r`` is the slow part of most tests."""
    J = 2 * order + 4
    if model == "fs":
        m = fubini_study(1, [BASE_POINTS[at]], order=J)
    elif model == "fs0":
        m = fubini_study(1, [0], order=J)
    elif model == "disc":
        m = poincare_disc([BASE_POINTS[at]], order=J)
    elif model == "c1":
        m = flat_kaehler(1, [BASE_POINTS[at]], order=J)
    elif model == "r2":
        m = flat_symplectic(1, [mpq(1, 2), mpq(-1, 3)], order=J)
    else:
        raise KeyError(model)
    return FedosovContext(m, kind, order)
