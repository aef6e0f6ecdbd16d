"""Fedosov recursions, the star products of Weyl and Wick type, and their verification.

The context solves the curvature correction ``r`` once, degree by degree; the
lift ``tau(f)`` of a function is built the same way and cached.  Everything
is exact: reports carry the first nonzero coefficient of each residual.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field
from math import factorial

from gmpy2 import mpq

from .galg import (Caps, PairingTensor, Section, ad_hbar, component_s, conj_C, delta, delta_inv,
                   div_hbar, nabla, parity_P, pi_type, star_fiber)
from .geometry import ChartModel, curvature_section
from .jets import BudgetUnderflow, Frame, Jet, Scalar, StructuralError, multi_indices
from .report import Report

__all__ = ["FedosovContext", "StarSeries", "verify_axioms", "verify_wick_type", "verify_order",
           "verify_flatness", "verify_context", "verify_lift", "moyal_oracle",
           "full_contraction"]

I = Scalar(0, 1)
HALF_I = Scalar(0, mpq(1, 2))


@dataclass
class StarSeries:
    """``f * g`` at the base point: ``coeffs[r]`` multiplies ``hbar**r``."""

    coeffs: list[Scalar]
    jets: list[Jet] | None = field(default=None, repr=False, compare=False)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def m_values(self) -> list[Scalar]:
        """``M_r(f, g)(x0) = c_r / (i/2)^r``."""
        return [c * (HALF_I ** -r) for r, c in enumerate(self.coeffs)]

    def __eq__(self, other):
        if not isinstance(other, StarSeries):
            return NotImplemented
        return self.coeffs == other.coeffs


def _fingerprint(f: Jet) -> tuple:
    return (f.dim, f.order, frozenset((a, c.re, c.im) for a, c in f.coeffs.items()))


class FedosovContext:
    """Solved Fedosov data for one chart model and one fibrewise product.

    ``order`` is the hbar order ``N`` of the star product.  Lifts are computed
    to total degree ``2N+1``, ``r`` to ``2N+3`` and model jets to order ``2N+4``.
    """

    def __init__(self, model: ChartModel, kind: str = "weyl", order: int = 3, *,
                 jet_order: int | None = None, r_degree: int | None = None):
        if kind not in ("weyl", "wick"):
            raise ValueError(f"unknown kind {kind!r}")
        if order < 0:
            raise ValueError("order must be nonnegative")
        self.kind = kind
        self.N = order
        self.K = 2 * order + 1
        self.Kr = r_degree if r_degree is not None else self.K + 2
        self.J = jet_order if jet_order is not None else 2 * order + 4
        if model.order != self.J:
            model = model.at_order(self.J)
        self.model = model
        if kind == "wick":
            if not model.is_kaehler or model.wick_pairing is None:
                raise StructuralError("the Wick product needs a Kaehler (complex-frame) model")
            if model.connection != "kaehler":
                raise StructuralError("the Wick construction needs the Kaehler connection")
            self.pairing: PairingTensor = model.wick_pairing
        else:
            self.pairing = model.poisson
        self.caps = Caps.for_degree(self.Kr)
        self.dim = model.dim
        self.frame = model.frame
        self._tau_cache: dict = {}
        self.r_parts: dict[int, Section] = {}
        self.solve_r()

    # -- r --------------------------------------------------------------------------------

    def zero(self) -> Section:
        return Section.zero(self.dim, self.frame, self.caps)

    def curvature(self) -> Section:
        return self.model.curvature(self.caps)

    def solve_r(self) -> Section:
        """``r^(3) = delta^-1 R``, ``r^(k+3) = delta^-1(nabla r^(k+2) + (i/hbar) sum r^(l+2) o r^(k-l+2))``."""
        P = self.pairing
        wide = self.caps.widen(2)
        parts = {3: delta_inv(self.curvature())}
        for k in range(1, self.Kr - 2):
            acc = nabla(parts[k + 2], self.model)
            quad = None
            for l in range(1, k):
                a, b = parts[l + 2], parts[k - l + 2]
                if not (a.terms and b.terms):
                    continue
                p = star_fiber(a.with_caps(wide), b.with_caps(wide), P)
                quad = p if quad is None else quad + p
            if quad is not None:
                acc = acc + div_hbar(quad).scale(I).with_caps(self.caps)
            parts[k + 3] = delta_inv(acc)
        self.r_parts = parts
        self.r = self.zero()
        for p in parts.values():
            self.r = self.r + p
        return self.r

    def r_component(self, k: int) -> Section:
        return self.r_parts.get(k, self.zero())

    def with_r_fault(self, degree: int = 3, amount=1, key: tuple | None = None) -> "FedosovContext":
        """Copy whose ``r`` has one coefficient shifted by a constant (sensitivity checks).

        The default target is the first stored term of that degree, or
        ``y1^(degree-1) y2 dx^1`` when ``r`` vanishes there; the latter is not
        ``delta``-closed, so flatness and hence associativity break.
        """
        part = self.r_parts.get(degree)
        part = part if part is not None else self.zero()
        if key is None:
            key = min(part.terms) if part.terms else (0, (degree - 1, 1) + (0,) * (self.dim - 2), (0,))
        base = part.terms.get(key, Jet.zero(self.dim, self.J))
        bumped = Section(self.dim, self.frame, self.caps, {key: base + Scalar.coerce(amount)})
        out = copy.copy(self)
        out.r_parts = dict(self.r_parts)
        out.r_parts[degree] = part.filter(lambda h, al, A: (h, al, A) != key) + bumped
        out.r = self.zero()
        for p in out.r_parts.values():
            out.r = out.r + p
        out._tau_cache = {}
        return out

    # -- D --------------------------------------------------------------------------------

    def D(self, a: Section, r: Section | None = None) -> Section:
        """``-delta + nabla + (i/hbar) ad(r)``."""
        r = self.r if r is None else r
        a = a.with_caps(self.caps)
        out = nabla(a, self.model) - delta(a)
        if r.terms:
            out = out + ad_hbar(r, a, self.pairing)
        return out

    def flatness_defect(self) -> Section:
        """``R + nabla r + (i/hbar) r o r - delta r``, zero in degrees below ``Kr``."""
        wide = self.caps.widen(2)
        rr = star_fiber(self.r.with_caps(wide), self.r.with_caps(wide), self.pairing)
        quad = div_hbar(rr).scale(I).with_caps(self.caps)
        return self.curvature() + nabla(self.r, self.model) + quad - delta(self.r)

    # -- lifts ----------------------------------------------------------------------------

    def tau_parts(self, f: Jet, degree: int | None = None) -> dict[int, Section]:
        """Homogeneous components ``tau(f)^(s)`` for ``s <= degree`` (default ``2N+1``)."""
        degree = self.K if degree is None else degree
        if f.dim != self.dim:
            raise StructuralError("function jet does not live on this chart")
        key = _fingerprint(f)
        parts = self._tau_cache.get(key)
        if parts is None:
            parts = {0: Section.function(f, self.frame, self.caps)}
            self._tau_cache[key] = parts
        P = self.pairing
        for s in range(len(parts) - 1, degree):
            acc = nabla(parts[s], self.model)
            for t in range(1, s):
                rp = self.r_parts.get(t + 2)
                if rp is None or not (rp.terms and parts[s - t].terms):
                    continue
                acc = acc + ad_hbar(rp, parts[s - t], P)
            parts[s + 1] = delta_inv(acc)
        return {s: parts[s] for s in range(degree + 1)}

    def tau(self, f: Jet, degree: int | None = None) -> Section:
        out = self.zero()
        for p in self.tau_parts(f, degree).values():
            out = out + p
        return out

    @staticmethod
    def sigma(a: Section) -> list[Jet]:
        """Symmetric- and form-degree-zero part, by hbar power."""
        out: dict[int, Jet] = {}
        for (h, al, A), c in a.terms.items():
            if not any(al) and not A:
                out[h] = c
        return [out.get(h, Jet.zero(a.dim, 0)) for h in range(max(out, default=-1) + 1)]

    # -- star products --------------------------------------------------------------------

    def star_jets(self, f: Jet, g: Jet, order: int | None = None, jet_order: int = 0) -> list[Jet]:
        """Coefficient jets of ``hbar^0 .. hbar^order`` in ``sigma(tau(f) o tau(g))``.

        A lift component of degree ``k`` has differential order at most ``k``,
        so the inputs are cut to their ``2*order + jet_order``-jets; the
        ``hbar^u`` coefficient then comes out exact to order
        ``2*(order-u) + jet_order``.  Too short a budget raises instead of
        returning wrong digits.
        """
        order = self.N if order is None else order
        budget = 2 * order + jet_order
        caps = Caps(2 * order, order)
        tf = self._lift_window(f.truncate(budget), 2 * order, caps)
        tg = self._lift_window(g.truncate(budget), 2 * order, caps)
        prod = star_fiber(tf, tg, self.pairing, sym_max=0)
        zero_key = (0,) * self.dim
        out = []
        for h in range(order + 1):
            c = prod.terms.get((h, zero_key, ()))
            out.append(c if c is not None else Jet.zero(self.dim, budget - 2 * h))
        return out

    def _lift_window(self, f: Jet, degree: int, caps: Caps) -> Section:
        out = Section.zero(self.dim, self.frame, caps)
        for p in self.tau_parts(f, degree).values():
            out = out + p.with_caps(caps)
        return out

    def star(self, f: Jet, g: Jet, order: int | None = None) -> StarSeries:
        """Values at the base point."""
        jets = self.star_jets(f, g, order)
        return StarSeries([j.eval0() for j in jets], jets)

    def star_series_jets(self, F: list[Jet], G: list[Jet], order: int | None = None,
                         jet_order: int = 0) -> list[Jet]:
        """hbar-bilinear extension to ``F = sum hbar^u F_u`` and ``G = sum hbar^v G_v``."""
        order = self.N if order is None else order
        out: list[Jet | None] = [None] * (order + 1)
        for u, fu in enumerate(F):
            for v, gv in enumerate(G):
                rest = order - u - v
                if rest < 0:
                    continue
                for t, c in enumerate(self.star_jets(fu, gv, rest, jet_order)):
                    s = u + v + t
                    out[s] = c if out[s] is None else out[s] + c
        return [c if c is not None else Jet.zero(self.dim, 0) for c in out]

    def m_via_tau(self, f: Jet, g: Jet, s: int) -> Scalar:
        """``M_s(f, g)(x0)`` from homogeneous lift components by the closed formula.

        Weyl: ``sum_{k<=(s-1)/2} sum_{l<=k} (-4)^k Lambda^(s-2k)(tau(f)^(s-2k+4l)_{s-2k}, tau(g)^(s+2k-4l)_{s-2k})``.
        Wick: ``sum_{k<=s} sum_{l<=k} (-2i)^k Lambda'^(s-k)(tau'(f)^(s-k+2l)_{s-k}, tau'(g)^(s+k-2l)_{s-k})``.
        """
        if s == 0:
            return f.eval0() * g.eval0()
        top = max(self.N, s)
        tf = self.tau_parts(f.truncate(2 * top), 2 * top)
        tg = self.tau_parts(g.truncate(2 * top), 2 * top)
        total = Scalar(0)
        if self.kind == "weyl":
            for k in range((s - 1) // 2 + 1):
                r = s - 2 * k
                for l in range(k + 1):
                    a = _strip_hbar(tf.get(s - 2 * k + 4 * l), r)
                    b = _strip_hbar(tg.get(s + 2 * k - 4 * l), r)
                    total = total + Scalar(-4) ** k * full_contraction(a, b, self.pairing, r)
        else:
            for k in range(s + 1):
                r = s - k
                for l in range(k + 1):
                    a = _strip_hbar(tf.get(s - k + 2 * l), r)
                    b = _strip_hbar(tg.get(s + k - 2 * l), r)
                    total = total + Scalar(0, -2) ** k * full_contraction(a, b, self.pairing, r)
        return total

    # -- helpers --------------------------------------------------------------------------

    def function(self, f: Jet) -> Section:
        return Section.function(f, self.frame, self.caps)

    def conjugate(self, f: Jet) -> Jet:
        return f.conjugate(self.frame)


def _strip_hbar(part: Section | None, sdeg: int) -> dict:
    """``{alpha: jet value at x0}`` of the symmetric-degree ``sdeg`` piece of a homogeneous component."""
    out: dict = {}
    if part is None:
        return out
    for (h, al, A), c in part.terms.items():
        if sum(al) == sdeg and not A:
            v = c.eval0()
            if v:
                out[al] = out.get(al, Scalar(0)) + v
    return out


def full_contraction(a: dict, b: dict, P: PairingTensor, r: int) -> Scalar:
    """``1/r! P^{i1 j1}..P^{ir jr} d_I a d_J b`` at the base point, for degree-``r`` symmetric parts.

    ``a`` and ``b`` map exponent vectors to values.  The sum runs over ordered
    index sequences, independently of the grouped contraction in ``star_fiber``.
    """
    if not a or not b:
        return Scalar(0)
    vals = {ij: c.eval0() for ij, c in P.entries.items()}
    dim = P.dim
    total = Scalar(0)
    for al, ca in a.items():
        seq_a = set(itertools.permutations([i for i in range(dim) for _ in range(al[i])]))
        fa = 1
        for x in al:
            fa *= factorial(x)
        for be, cb in b.items():
            seq_b = set(itertools.permutations([j for j in range(dim) for _ in range(be[j])]))
            fb = 1
            for x in be:
                fb *= factorial(x)
            acc = Scalar(0)
            for I_ in seq_a:
                for J_ in seq_b:
                    prod = Scalar(1)
                    for i, j in zip(I_, J_):
                        v = vals.get((i, j))
                        if v is None:
                            prod = None
                            break
                        prod = prod * v
                    if prod is not None:
                        acc = acc + prod
            total = total + acc * ca * cb * Scalar(mpq(fa * fb, factorial(r)))
    return total


# -- independent oracles -----------------------------------------------------------------


def moyal_oracle(f: Jet, g: Jet, P: PairingTensor, order: int) -> list[Scalar]:
    """``sum_r (i hbar/2)^r Lambda^(r)(df.., dg..)(x0)`` for constant ``P``, straight from jets.

    Uses derivative values of ``f`` and ``g`` and an explicit sum over index
    sequences; valid on flat models (constant pairing) for both products.
    """
    vals = {ij: c.eval0() for ij, c in P.entries.items()}
    dim = P.dim
    out = []
    for r in range(order + 1):
        acc = Scalar(0)
        for I_ in itertools.product(range(dim), repeat=r):
            for J_ in itertools.product(range(dim), repeat=r):
                prod = Scalar(1)
                for i, j in zip(I_, J_):
                    v = vals.get((i, j))
                    if v is None:
                        prod = None
                        break
                    prod = prod * v
                if prod is None:
                    continue
                ai = [0] * dim
                bj = [0] * dim
                for i in I_:
                    ai[i] += 1
                for j in J_:
                    bj[j] += 1
                acc = acc + prod * f.derivative(ai) * g.derivative(bj)
        out.append(acc * HALF_I ** r * Scalar(mpq(1, factorial(r))))
    return out


# -- verification --------------------------------------------------------------------------


def verify_flatness(ctx: FedosovContext, samples: list[Section] | None = None) -> Report:
    """``delta r = R + nabla r + (i/hbar) r o r`` below degree ``Kr`` and ``D^2 = 0`` on samples.

    The truncated ``r`` is exact through degree ``Kr``, so the flatness
    defect vanishes below ``Kr`` and ``D^2 a`` vanishes below ``Kr - 3 + deg a``.
    """
    rep = Report(f"flatness {ctx.model.name} {ctx.kind}")
    X = ctx.flatness_defect()
    low = X.filter(lambda h, al, A: 2 * h + sum(al) < ctx.Kr)
    rep.add("delta r = R + nabla r + (i/hbar) r o r", low.defect(), f"degrees < {ctx.Kr}")
    for idx, a in enumerate(samples or []):
        a = a.with_caps(ctx.caps)
        dd = ctx.D(ctx.D(a))
        bound = ctx.Kr - 3 + min(a.degrees(), default=0)
        low = dd.filter(lambda h, al, A: 2 * h + sum(al) <= min(bound, ctx.Kr - 2))
        rep.add(f"D^2 = 0 on sample {idx}", low.defect(), f"degrees <= {min(bound, ctx.Kr - 2)}")
    return rep


def verify_context(ctx: FedosovContext) -> Report:
    """Structural invariants of the solved ``r``."""
    rep = Report(f"context {ctx.model.name} {ctx.kind}")
    r = ctx.r
    rep.add("deg_a r = 1", Scalar(0 if all(len(A) == 1 for _, _, A in r.terms) else 1))
    rep.add("delta^-1 r = 0", delta_inv(r).defect())
    rep.add("lowest total degree of r is 3", Scalar(0 if min(r.degrees(), default=3) >= 3 else 1))
    rep.add("C r = r", (conj_C(r) - r).defect())
    if ctx.kind == "weyl":
        rep.add("P_hbar r = r", (parity_P(r) - r).defect())
    else:
        d = Scalar(0)
        for p in range(ctx.Kr + 1):
            d = d if d else (pi_type(r, 0, p) + pi_type(r, p, 0)).defect()
        rep.add("pi^(0,p) r' = pi^(p,0) r' = 0", d)
    return rep


def verify_lift(ctx: FedosovContext, f: Jet) -> Report:
    """``sigma tau f = f``, ``deg_a tau f = 0``, ``D tau f = 0`` in degrees the truncation has complete."""
    rep = Report(f"lift {ctx.model.name} {ctx.kind}")
    t = ctx.tau(f)
    sig = ctx.sigma(t)
    d = (sig[0] - f).first_nonzero() if sig else f.first_nonzero()
    for c in sig[1:]:
        d = d if d else c.first_nonzero()
    rep.add("sigma tau f = f", d)
    rep.add("deg_a tau f = 0", Scalar(0 if all(not A for _, _, A in t.terms) else 1))
    Dt = ctx.D(t).filter(lambda h, al, A: 2 * h + sum(al) <= ctx.K - 1)
    rep.add("D tau f = 0", Dt.defect(), f"degrees <= {ctx.K - 1}")
    if ctx.kind == "weyl":
        rep.add("C tau f = tau C f", (conj_C(t) - ctx.tau(ctx.conjugate(f))).defect())
        if _is_real_function(ctx, f):
            rep.add("P_hbar tau f = tau f for real f", (parity_P(t) - t).defect())
    return rep


def _is_real_function(ctx: FedosovContext, f: Jet) -> bool:
    return f == ctx.conjugate(f)


def verify_axioms(ctx: FedosovContext, f: Jet, g: Jet, h: Jet) -> Report:
    """Star product axioms, conjugation identities and the closed formula, through ``hbar^N``."""
    N = ctx.N
    rep = Report(f"axioms {ctx.model.name} {ctx.kind} N={N}")
    one = Jet.constant(ctx.dim, ctx.J, 1)
    fg = ctx.star(f, g)
    rep.add("M_0(f,g) = fg", fg.coeffs[0] - f.eval0() * g.eval0())

    for name, s in (("M_t(f,1) = 0", ctx.star(f, one)), ("M_t(1,f) = 0", ctx.star(one, f))):
        d = s.coeffs[0] - f.eval0()
        for c in s.coeffs[1:]:
            d = d if d else c
        rep.add(name, d)

    left = ctx.star_series_jets(ctx.star_jets(f, g), [h])
    right = ctx.star_series_jets([f], ctx.star_jets(g, h))
    for s in range(N + 1):
        rep.add(f"associativity hbar^{s}", (left[s] - right[s]).eval0())

    fb, gb = ctx.conjugate(f), ctx.conjugate(g)
    gf_bar = ctx.star(gb, fb)
    d = Scalar(0)
    for a, b in zip(fg.coeffs, gf_bar.coeffs):
        d = d if d else a.conjugate() - b
    rep.add("conj(f*g) = conj(g)*conj(f)", d)

    mf = fg.m_values
    gf = ctx.star(g, f).m_values
    bracket = _poisson_bracket(ctx, f, g)
    anti = mf[1] - gf[1] if N >= 1 else Scalar(0)
    if N >= 1:
        rep.add("M_1(f,g) - M_1(g,f) = 2{f,g}", anti - bracket * 2,
                f"printed normalisation M_1(f,g)-M_1(g,f)={{f,g}} is off by {anti - bracket}")

    if ctx.kind == "weyl":
        d = Scalar(0)
        for s in range(N + 1):
            d = d if d else mf[s] - (-1) ** s * gf[s]
        rep.add("M_s(f,g) = (-1)^s M_s(g,f)", d)
        if _is_real_function(ctx, f) and _is_real_function(ctx, g):
            d = next((Scalar(0, m.im) for m in mf if m.im), Scalar(0))
            rep.add("M_s real for real f, g", d)
    d = Scalar(0)
    for s in range(N + 1):
        d = d if d else ctx.m_via_tau(f, g, s) - mf[s]
    rep.add("closed formula for M_s matches sigma(tau o tau)", d)
    return rep


def _poisson_bracket(ctx: FedosovContext, f: Jet, g: Jet) -> Scalar:
    out = Scalar(0)
    for (i, j), c in ctx.model.poisson.entries.items():
        out = out + c.eval0() * f.partial(i).eval0() * g.partial(j).eval0()
    return out


def _holomorphic_only(f: Jet, n: int, anti: bool = False) -> bool:
    sl = slice(0, n) if anti else slice(n, 2 * n)
    return all(not any(a[sl]) for a in f.coeffs)


def verify_wick_type(ctx: FedosovContext, h: Jet, f_holo: Jet, g_antiholo: Jet,
                     r_max: int | None = None) -> Report:
    """Absorption laws ``h *' f = hf``, ``g *' h = gh`` and first-argument holomorphic dependence."""
    if ctx.kind != "wick":
        raise StructuralError("Wick-type verification needs a Wick context")
    n = ctx.model.n
    if not _holomorphic_only(f_holo, n):
        raise ValueError("f_holo depends on zbar")
    if not _holomorphic_only(g_antiholo, n, anti=True):
        raise ValueError("g_antiholo depends on z")
    r_max = ctx.N if r_max is None else r_max
    rep = Report(f"wick type {ctx.model.name} N={ctx.N}")

    hf = ctx.star_jets(h, f_holo)
    rep.add("h *' f = hf (holomorphic f)", _series_vs_product(hf, h * f_holo))
    gh = ctx.star_jets(g_antiholo, h)
    rep.add("g *' h = gh (antiholomorphic g)", _series_vs_product(gh, g_antiholo * h))

    tf = ctx.tau(f_holo)
    tg = ctx.tau(g_antiholo)
    d = Scalar(0)
    for p in range(1, ctx.K + 1):
        d = d if d else pi_type(tf, 0, p).defect()
    rep.add("pi^(0,p) tau'(f) = 0 for holomorphic f", d)
    d = Scalar(0)
    for p in range(1, ctx.K + 1):
        d = d if d else pi_type(tg, p, 0).defect()
    rep.add("pi^(p,0) tau'(g) = 0 for antiholomorphic g", d)

    d = Scalar(0)
    for p in range(0, ctx.Kr + 1):
        d = d if d else (pi_type(ctx.r, 0, p) + pi_type(ctx.r, p, 0)).defect()
    rep.add("pi^(0,p) r' = pi^(p,0) r' = 0", d)

    base = ctx.star(h, h, r_max).m_values
    for k in range(n):
        zb = ctx.model.coordinate(n + k, ctx.J) - ctx.model.base_point[n + k]
        z = ctx.model.coordinate(k, ctx.J) - ctx.model.base_point[k]
        for label, q in (("1", Jet.constant(ctx.dim, ctx.J, 1)), ("z^3", z ** 3), ("h", h)):
            pert = ctx.star(h + zb * q, h, r_max).m_values
            rep.add(f"M'_r(h + (zbar{k + 1}-zbar0)*{label}, h) = M'_r(h, h), r <= {r_max}",
                    _first_diff(pert, base))
            pert = ctx.star(h, h + z * q, r_max).m_values
            rep.add(f"M'_r(h, h + (z{k + 1}-z0)*{label}) = M'_r(h, h), r <= {r_max}",
                    _first_diff(pert, base))
    return rep


def _series_vs_product(series: list[Jet], product: Jet) -> Scalar:
    d = (series[0] - product).first_nonzero()
    for c in series[1:]:
        d = d if d else c.first_nonzero()
    return d


def _first_diff(a: list[Scalar], b: list[Scalar]) -> Scalar:
    for x, y in zip(a, b):
        if x != y:
            return x - y
    return Scalar(0)


def _shifted_monomial(ctx: FedosovContext, alpha: tuple) -> Jet:
    return Jet(ctx.dim, ctx.J, {alpha: 1})


def verify_order(ctx: FedosovContext, f: Jet, g: Jet, s_max: int | None = None) -> Report:
    """Jet-locality: ``M_s`` sees only the ``s``-jets, lift components only their stated orders.

    Weyl: ``tau(f)^(k)_{k-4l}`` has order ``k-2l``.  Wick: ``tau'(f)^(k)_{k-2l}``
    has order ``k-l`` (hence at most ``k``).
    """
    s_max = ctx.N if s_max is None else s_max
    rep = Report(f"order {ctx.model.name} {ctx.kind} s<={s_max}")
    d = ctx.dim
    base_m = ctx.star(f, g, s_max).m_values
    for s in range(s_max + 1):
        worst = Scalar(0)
        for alpha in (a for a in multi_indices(d, s + 1) if sum(a) == s + 1):
            m = _shifted_monomial(ctx, alpha)
            for pert in (ctx.star(f + m, g, s).m_values[s], ctx.star(f, g + m, s).m_values[s]):
                worst = worst if worst else pert - base_m[s]
        rep.add(f"M_{s} has order {s} in each argument", worst)

    kmax = 2 * s_max + 1
    # components of degree <= kmax only consume the (kmax+1)-jet; truncating keeps the check literal
    base_parts = ctx.tau_parts(f.truncate(kmax + 1), kmax)
    step = 4 if ctx.kind == "weyl" else 2
    shrink = 2 if ctx.kind == "weyl" else 1
    for q in range(0, kmax + 1):
        worst = Scalar(0)
        for alpha in (a for a in multi_indices(d, q + 1) if sum(a) == q + 1):
            parts = ctx.tau_parts((f + _shifted_monomial(ctx, alpha)).truncate(kmax + 1), kmax)
            for k in range(kmax + 1):
                for l in range(k // step + 1):
                    sdeg = k - step * l
                    if k - shrink * l > q:
                        continue
                    diff = _at_base(component_s(parts[k], k, sdeg)) != _at_base(component_s(base_parts[k], k, sdeg))
                    if diff and not worst:
                        worst = _first_at_base_diff(component_s(parts[k], k, sdeg),
                                                    component_s(base_parts[k], k, sdeg))
        label = "k-2l" if ctx.kind == "weyl" else "k-l"
        rep.add(f"lift components of order {label} <= {q} see only the {q}-jet", worst)
    return rep


def _at_base(a: Section) -> dict:
    return a.eval0()


def _first_at_base_diff(a: Section, b: Section) -> Scalar:
    va, vb = a.eval0(), b.eval0()
    for k in sorted(set(va) | set(vb)):
        x, y = va.get(k, Scalar(0)), vb.get(k, Scalar(0))
        if x != y:
            return x - y
    return Scalar(1)
