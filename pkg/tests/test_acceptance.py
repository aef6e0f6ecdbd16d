"""Acceptance suite: one PASS/FAIL line per criterion, exact equality throughout.

Run alone with ``python3 tests/test_acceptance.py`` or through pytest; the
lines are written straight to the terminal either way.
"""

import random
import sys

import pytest
from gmpy2 import mpq

from fedstar.cli import build_model
from fedstar.expr import lower, parse
from fedstar.fedosov import FedosovContext, moyal_oracle, verify_flatness, verify_order, verify_wick_type
from fedstar.galg import Caps, S, S_inv, pi_type, star_fiber
from fedstar.geometry import flat_kaehler, validate
from fedstar.jets import Jet, Scalar
from helpers import BASE_POINTS, context, rand_jet, rand_section, rand_scalar

SEED = 1729
F_SRC = "z1*zb1 + z1 + zb1^2*z1"
G_SRC = "i*(z1 - zb1) + 1/(2 + z1*zb1)"
H_SRC = "z1^2*zb1 + zb1^2*z1"


@pytest.fixture
def announce(capsys):
    def emit(n: int, title: str, defect, detail: str = ""):
        ok = not defect
        tag = "PASS" if ok else "FAIL"
        tail = "" if ok else f"  defect={defect}"
        with capsys.disabled():
            print(f"\n{tag}  AC{n:02d} {title}{tail}" + (f"  [{detail}]" if detail else ""))
        assert ok, f"AC{n:02d} {title}: defect {defect}"
    return emit


def jets(ctx, *srcs):
    return [lower(parse(s), ctx.model, ctx.J) for s in srcs]


def first_diff(a, b):
    for x, y in zip(a, b):
        if x != y:
            return x - y
    return Scalar(0)


def rand_rational(rng, ctx, max_deg=3) -> Jet:
    """Jet of ``p/q`` for random polynomials in the local coordinates, ``q(x0) != 0``."""
    num = rand_jet(rng, ctx.dim, ctx.J, terms=4, max_deg=max_deg)
    den = rand_jet(rng, ctx.dim, ctx.J, terms=3, max_deg=2)
    den = den + (3 - den.eval0())
    return num * den.invert()


def holomorphic_jet(rng, ctx, anti=False) -> Jet:
    n = ctx.model.n
    coeffs = {}
    for _ in range(4):
        k = rng.randint(0, 4)
        alpha = [0] * ctx.dim
        alpha[n if anti else 0] = k
        coeffs[tuple(alpha)] = rand_scalar(rng)
    return Jet(ctx.dim, ctx.J, coeffs)


def test_ac01_moyal_reduction_on_the_plane(announce):
    rng = random.Random(SEED)
    ctx = context("r2", "weyl", 6)
    defect = Scalar(0)
    for _ in range(20):
        f = rand_jet(rng, 2, ctx.J, terms=6, max_deg=4)
        g = rand_jet(rng, 2, ctx.J, terms=6, max_deg=4)
        defect = defect or first_diff(ctx.star(f, g).coeffs, moyal_oracle(f, g, ctx.pairing, 6))
    announce(1, "flat R^2: star equals the Moyal series, 20 random pairs of degree <= 4, r <= 6", defect)


def test_ac02_normal_ordering_on_flat_c1(announce):
    rng = random.Random(SEED + 2)
    ctx = context("c1", "wick", 6)
    defect = Scalar(0)
    for _ in range(20):
        f = rand_jet(rng, 2, ctx.J, terms=6, max_deg=4)
        g = rand_jet(rng, 2, ctx.J, terms=6, max_deg=4)
        defect = defect or first_diff(ctx.star(f, g).coeffs, moyal_oracle(f, g, ctx.pairing, 6))
    for idx in range(len(BASE_POINTS)):
        c = context("c1", "wick", 2, idx)
        z, zb = jets(c, "z1", "zb1")
        comm = [a - b for a, b in zip(c.star(z, zb).coeffs, c.star(zb, z).coeffs)]
        defect = defect or first_diff(comm, [Scalar(0), Scalar(2), Scalar(0)])
    for p in (Scalar(0), Scalar(mpq(7, 3), mpq(-2, 9))):
        c = FedosovContext(flat_kaehler(1, [p], order=6), "wick", 1)
        z, zb = jets(c, "z1", "zb1")
        comm = [a - b for a, b in zip(c.star(z, zb).coeffs, c.star(zb, z).coeffs)]
        defect = defect or first_diff(comm, [Scalar(0), Scalar(2)])
    announce(2, "flat C^1: Wick star equals the normal-ordered series, r <= 6; z*'zbar - zbar*'z = 2 hbar",
             defect, f"{len(BASE_POINTS) + 2} base points")


def test_ac03_first_order_term_on_fubini_study(announce):
    defect = Scalar(0)
    pairs = [(F_SRC, G_SRC), ("z1^3 + zb1", "zb1^2*z1 - 1/(3 - z1)"), (H_SRC, "z1*zb1")]
    for idx in range(3):
        ctx = context("fs", "wick", 2, idx)
        lam = ctx.model.poisson.entry(0, 1).eval0()
        for fs, gs in pairs:
            f, g = jets(ctx, fs, gs)
            bracket = lam * f.partial(0).eval0() * g.partial(1).eval0()   # Lambda(d f, dbar g)
            s = ctx.star(f, g)
            defect = defect or (s.m_values[1] - bracket * 2) or (s.coeffs[1] - Scalar(0, 1) * bracket)
    announce(3, "FS n=1: hbar^1 coefficient is i Lambda(df, dbar g), mValues[1] = 2 Lambda(df, dbar g)",
             defect, "3 base points x 3 pairs")


def test_ac04_flatness(announce):
    rng = random.Random(SEED + 4)
    defect = Scalar(0)
    runs = 0
    for model in ("fs", "disc"):
        for kind in ("weyl", "wick"):
            ctx = context(model, kind, 3)
            f, g = jets(ctx, F_SRC, G_SRC)
            form = rand_section(rng, ctx.model, ctx.caps, terms=3, hmax=0, smax=1, forms=1)
            rep = verify_flatness(ctx, [ctx.function(f), ctx.tau(g), form])
            for c in rep.checks:
                defect = defect or c.defect
            runs += 1
    announce(4, "D^2 = 0 and delta r = R + nabla r + (i/hbar) r o r in the window, FS and disc, both kinds, N=3",
             defect, f"{runs} contexts")


def test_ac05_associativity(announce):
    rng = random.Random(SEED + 5)
    defect = Scalar(0)
    for kind in ("weyl", "wick"):
        ctx = context("fs", kind, 3)
        for _ in range(10):
            f, g, h = (rand_rational(rng, ctx) for _ in range(3))
            left = ctx.star_series_jets(ctx.star_jets(f, g), [h])
            right = ctx.star_series_jets([f], ctx.star_jets(g, h))
            for s in range(4):
                defect = defect or (left[s] - right[s]).eval0()
    announce(5, "FS n=1: (f*g)*h = f*(g*h) through hbar^3, 10 random rational triples, both kinds", defect)


def test_ac06_weyl_symmetry_reality_and_conjugation(announce):
    ctx = context("fs", "weyl", 4)
    pairs = [(F_SRC, G_SRC), ("z1*zb1 + 1/(2 + z1 + zb1)", "z1^2 + zb1^2 + z1*zb1^2 + zb1*z1^2"),
             ("z1^3 - i*zb1", "1/(3 + z1*zb1) + i*z1")]
    defect = Scalar(0)
    for fs, gs in pairs:
        f, g = jets(ctx, fs, gs)
        mf, mg = ctx.star(f, g).m_values, ctx.star(g, f).m_values
        defect = defect or first_diff(mf, [m * (-1) ** s for s, m in enumerate(mg)])
        fc, gc = ctx.conjugate(f), ctx.conjugate(g)
        defect = defect or first_diff([m.conjugate() for m in mf], ctx.star(fc, gc).m_values)
        re_f, re_g = f + fc, (g - gc).scale(Scalar(0, 1))
        for m in ctx.star(re_f, re_g).m_values:
            defect = defect or Scalar(0, m.im)
    for kind in ("weyl", "wick"):
        c = context("fs", kind, 4)
        for fs, gs in pairs:
            f, g = jets(c, fs, gs)
            lhs = [x.conjugate() for x in c.star(f, g).coeffs]
            defect = defect or first_diff(lhs, c.star(c.conjugate(g), c.conjugate(f)).coeffs)
    announce(6, "FS n=1: M_s(f,g) = (-1)^s M_s(g,f), M_s real, s <= 4; conj(f*g) = conj g * conj f, both kinds",
             defect)


def test_ac07_wick_type(announce):
    rng = random.Random(SEED + 7)
    defect = Scalar(0)
    for model in ("c1", "fs"):
        ctx = context(model, "wick", 3)
        for _ in range(10):
            a = rand_rational(rng, ctx)
            f = holomorphic_jet(rng, ctx)
            g = holomorphic_jet(rng, ctx, anti=True)
            af = ctx.star_jets(a, f)
            ga = ctx.star_jets(g, a)
            defect = defect or (af[0] - a * f).first_nonzero() or (ga[0] - g * a).first_nonzero()
            for c in af[1:] + ga[1:]:
                defect = defect or c.first_nonzero()
        h, f, g = jets(ctx, H_SRC, "z1^2 + z1", "zb1^3 + zb1")
        rep = verify_wick_type(ctx, h, f, g, r_max=3)
        for c in rep.checks:
            defect = defect or c.defect
        for part in ctx.r_parts.values():
            for p in range(ctx.Kr + 1):
                defect = defect or (pi_type(part, 0, p) + pi_type(part, p, 0)).defect()
    announce(7, "Wick type: absorption for 10 holomorphic and 10 antiholomorphic pairs, perturbation "
                "invariance r <= 3, pure-type parts of r' vanish", defect, "flat C^1 and FS n=1")


def test_ac08_closed_formula(announce):
    defect = Scalar(0)
    detail = []
    for model, kind, srcs in (("r2", "weyl", ("x1^3*x2 + x2^2 - x1", "x1*x2^2 + 1/(2 + x1)")),
                              ("fs", "weyl", (F_SRC, G_SRC)), ("fs", "wick", (F_SRC, G_SRC)),
                              ("c1", "wick", (F_SRC, G_SRC))):
        ctx = context(model, kind, 4)
        f, g = jets(ctx, *srcs)
        direct = ctx.star(f, g).m_values
        closed = [ctx.m_via_tau(f, g, s) for s in range(5)]
        d = first_diff(closed, direct)
        detail.append(f"{model}/{kind} {'exact' if not d else d}")
        defect = defect or d
    announce(8, "closed formula for M_s from lift components equals the direct product, s <= 4", defect,
             "; ".join(detail))


def test_ac09_S_equivalence(announce):
    rng = random.Random(SEED + 9)
    defect = Scalar(0)
    caps = Caps(6, 3)
    for model in (context("c1", "wick", 1).model.at_order(3), context("fs", "wick", 1).model.at_order(3)):
        for _ in range(50):
            a = rand_section(rng, model, caps, terms=3, forms=1)
            b = rand_section(rng, model, caps, terms=3, forms=1)
            lhs = star_fiber(a, b, model.poisson)
            rhs = S_inv(star_fiber(S(a, model), S(b, model), model.wick_pairing), model)
            defect = defect or (lhs - rhs).defect()
    announce(9, "a o b = S^-1(Sa o' Sb) for 50 random sparse section pairs, flat C^1 and FS n=1", defect)


def test_ac10_jet_locality(announce):
    defect = Scalar(0)
    for model, kind, srcs in (("r2", "weyl", ("x1^2*x2 + x1 + x2^3", "x2^2*x1 + 1/(2 + x1)")),
                              ("c1", "wick", (F_SRC, G_SRC)), ("c1", "weyl", (F_SRC, G_SRC)),
                              ("fs", "weyl", (F_SRC, G_SRC)), ("fs", "wick", (F_SRC, G_SRC))):
        ctx = context(model, kind, 3)
        f, g = jets(ctx, *srcs)
        for c in verify_order(ctx, f, g, 3).checks:
            defect = defect or c.defect
    announce(10, "M_s has order s in each argument and lift components have their stated orders, s <= 3",
             defect, "flat R^2, flat C^1, FS n=1")


def test_ac11_geometry_validation(announce):
    defect = Scalar(0)
    p = "1/3+i/5"
    specs = {"flat-symplectic:1": None, "flat-symplectic:2": None, "flat-kaehler:1": [p],
             "flat-kaehler:2": [p, "-1/2"], "fubini-study:1": [p], "fubini-study:2": [p, "2/7-3/5*i"],
             "fubini-study:1:3/2": [p], "poincare-disc": [p], "poincare-disc:5": ["0"]}
    detected = 0
    for spec, at in specs.items():
        model = build_model(spec, at, order=4)
        for c in validate(model).checks:
            defect = defect or c.defect
        d = model.dim
        for fault in (model.perturb_christoffel(0, 0, d - 1), model.perturb_omega(0, d - 1)):
            if validate(fault).passed:
                defect = defect or Scalar(1)
            else:
                detected += 1
    announce(11, "all built-in models validate; single-entry faults in Gamma and omega are detected", defect,
             f"{len(specs)} models, {detected} faults caught")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
