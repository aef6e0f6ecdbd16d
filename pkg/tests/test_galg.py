import random

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from fedstar.galg import (Caps, DivisibilityError, PairingTensor, S, S_inv, Section, ad_hbar, component,
                          conj_C, delta, delta_inv, delta_tilde, div_hbar, fib_mul, graded_commutator,
                          graded_commutator_naive, nabla, parity_P, pi_type, star_fiber, wedge)
from fedstar.geometry import flat_kaehler, flat_symplectic, fubini_study
from fedstar.jets import Frame, Jet, Scalar, StructuralError
from helpers import BASE_POINTS, rand_section

FLAT_R2 = flat_symplectic(1, order=3)
FLAT_C1 = flat_kaehler(1, order=3)
FS = fubini_study(1, [BASE_POINTS[0]], order=3)
FS2 = fubini_study(2, [BASE_POINTS[0], BASE_POINTS[1]], order=2)


def below(a: Section, deg: int) -> Section:
    return a.filter(lambda h, al, A: 2 * h + sum(al) <= deg)


def y(model, i, caps, h=0):
    return Section.monomial(Jet.constant(model.dim, model.order, 1), model.frame, caps, sym=[i], h=h)


seeds = st.integers(0, 10 ** 6)


def test_caps_window():
    c = Caps.for_degree(5)
    assert c == Caps(5, 2)
    assert c.admits(2, 1) and not c.admits(2, 2) and not c.admits(3, 0)
    assert c.widen(2) == Caps(7, 3)


def test_wedge_signs():
    assert wedge((0,), (1,)) == (1, (0, 1))
    assert wedge((1,), (0,)) == (-1, (0, 1))
    assert wedge((0, 2), (1,)) == (-1, (0, 1, 2))
    assert wedge((0,), (0,))[0] == 0


def test_section_rejects_malformed_keys():
    caps = Caps(4, 2)
    j = Jet.constant(2, 1, 1)
    with pytest.raises(StructuralError):
        Section(2, Frame.REAL, caps, {(0, (1,), ()): j})
    with pytest.raises(StructuralError):
        Section(2, Frame.REAL, caps, {(0, (1, 0), (1, 0)): j})
    with pytest.raises(StructuralError):
        Section(2, Frame.REAL, caps, {(0, (1, 0), ()): Jet.constant(3, 1, 1)})


def test_window_drops_high_terms():
    caps = Caps(3, 1)
    a = Section(2, Frame.REAL, caps, {(0, (2, 2), ()): Jet.constant(2, 1, 1),
                                        (2, (0, 0), ()): Jet.constant(2, 1, 1)})
    assert not a.terms


def test_sections_in_different_windows_do_not_mix():
    a = Section.zero(2, Frame.REAL, Caps(3, 1))
    b = Section.zero(2, Frame.REAL, Caps(4, 2))
    with pytest.raises(StructuralError):
        a + b


def test_vanishing_coefficients_keep_their_order():
    # a coefficient known to vanish only up to order 1 must cap later sums at order 1
    caps = Caps(2, 1)
    key = (0, (1, 0), ())
    short = Section(2, Frame.REAL, caps, {key: Jet.zero(2, 1)})
    long = Section(2, Frame.REAL, caps, {key: Jet(2, 5, {(3, 0): 1})})
    total = short + long
    assert total.terms[key].order == 1
    assert total.is_zero()


def test_fibre_moyal_commutator():
    caps = Caps(4, 2)
    P = FLAT_R2.poisson
    y1, y2 = y(FLAT_R2, 0, caps), y(FLAT_R2, 1, caps)
    comm = star_fiber(y1, y2, P) - star_fiber(y2, y1, P)
    one = Jet.constant(2, 3, 1)
    assert comm == Section(2, Frame.REAL, caps, {(1, (0, 0), ()): one.scale(Scalar(0, 1))})


def test_fibre_wick_product_of_conjugate_pair():
    caps = Caps(4, 2)
    P = FLAT_C1.wick_pairing
    w, wb = y(FLAT_C1, 0, caps), y(FLAT_C1, 1, caps)
    one = Jet.constant(2, 3, 1)
    assert star_fiber(w, wb, P) == fib_mul(w, wb) + Section(2, Frame.COMPLEX, caps, {(1, (0, 0), ()): one.scale(2)})
    assert star_fiber(wb, w, P) == fib_mul(wb, w)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_fibre_product_associative(seed):
    rng = random.Random(seed)
    caps = Caps(6, 3)
    for model, P in ((FLAT_R2, FLAT_R2.poisson), (FS, FS.poisson), (FS, FS.wick_pairing)):
        a, b, c = (rand_section(rng, model, caps, terms=3, forms=1) for _ in range(3))
        assert star_fiber(star_fiber(a, b, P), c, P) == star_fiber(a, star_fiber(b, c, P), P)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_commutator_single_pass_matches_two_products(seed):
    rng = random.Random(seed)
    caps = Caps(6, 3)
    for model, P in ((FLAT_R2, FLAT_R2.poisson), (FS, FS.poisson), (FS, FS.wick_pairing),
                     (FS2, FS2.wick_pairing)):
        a, b = rand_section(rng, model, caps, terms=3), rand_section(rng, model, caps, terms=3)
        assert graded_commutator(a, b, P) == graded_commutator_naive(a, b, P)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_koszul_identities(seed):
    rng = random.Random(seed)
    caps = Caps(6, 3)
    for model in (FLAT_R2, FS, FS2):
        a = rand_section(rng, model, caps)
        assert delta(delta(a)).is_zero()
        assert delta_inv(delta_inv(a)).is_zero()
        # delta delta^-1 + delta^-1 delta is the identity off the (0, 0)-part
        a = below(a, caps.max_deg - 1)
        proj = a.filter(lambda h, al, A: not any(al) and not A)
        assert delta(delta_inv(a)) + delta_inv(delta(a)) + proj == a


def test_pairing_validation():
    one = Jet.constant(2, 1, 1)
    with pytest.raises(StructuralError):
        PairingTensor(2, {(0, 1): one}, "weyl")
    with pytest.raises(StructuralError):
        PairingTensor(2, {(1, 0): one}, "wick")
    with pytest.raises(StructuralError):
        PairingTensor(3, {(0, 1): one}, "wick")
    with pytest.raises(ValueError):
        PairingTensor(2, {}, "moyal")


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_delta_is_inner(seed):
    rng = random.Random(seed)
    caps = Caps(6, 3)
    for model, P in ((FLAT_R2, FLAT_R2.poisson), (FS, FS.poisson), (FS, FS.wick_pairing)):
        dt = delta_tilde(model, caps)
        a = rand_section(rng, model, caps)
        assert below(delta(a) + ad_hbar(dt, a, P), 5).is_zero()


def test_delta_tilde_kaehler_form():
    caps = Caps(2, 1)
    dt = delta_tilde(FS, caps)
    H = FS.kaehler[0][0]
    half_i = Scalar(0, mpq(1, 2))
    want = Section(2, Frame.COMPLEX, caps, {(0, (1, 0), (1,)): H.scale(half_i),
                                            (0, (0, 1), (0,)): H.scale(-half_i)})
    assert dt == want


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_weyl_and_wick_fibre_products_are_S_equivalent(seed):
    rng = random.Random(seed)
    caps = Caps(6, 3)
    for model in (FLAT_C1, FS):
        a, b = rand_section(rng, model, caps, forms=1), rand_section(rng, model, caps, forms=1)
        lhs = star_fiber(a, b, model.poisson)
        rhs = S_inv(star_fiber(S(a, model), S(b, model), model.wick_pairing), model)
        assert lhs == rhs
        assert S_inv(S(a, model), model) == a


def test_div_hbar():
    caps = Caps(4, 2)
    one = Jet.constant(2, 1, 1)
    a = Section(2, Frame.REAL, caps, {(1, (1, 0), ()): one})
    assert div_hbar(a) == Section(2, Frame.REAL, caps, {(0, (1, 0), ()): one})
    with pytest.raises(DivisibilityError):
        div_hbar(Section(2, Frame.REAL, caps, {(0, (1, 0), ()): one}))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_involutions(seed):
    rng = random.Random(seed)
    caps = Caps(6, 3)
    for model in (FLAT_R2, FS, FS2):
        a = rand_section(rng, model, caps)
        assert conj_C(conj_C(a)) == a
        assert parity_P(parity_P(a)) == a


def test_conjugation_reverses_weyl_products():
    rng = random.Random(5)
    caps = Caps(6, 3)
    for model in (FLAT_R2, FS):
        a, b = rand_section(rng, model, caps, forms=0), rand_section(rng, model, caps, forms=0)
        P = model.poisson
        assert conj_C(star_fiber(a, b, P)) == star_fiber(conj_C(b), conj_C(a), P)


def test_type_projections_partition():
    rng = random.Random(7)
    a = rand_section(rng, FS, Caps(6, 3), terms=6)
    total = Section.zero(2, Frame.COMPLEX, a.caps)
    for k in range(5):
        for l in range(5):
            total = total + pi_type(a, k, l)
    assert total == a
    with pytest.raises(StructuralError):
        pi_type(rand_section(rng, FLAT_R2, Caps(4, 2)), 1, 0)


def test_nabla_vanishes_on_parallel_form():
    caps = Caps(4, 2)
    dt = delta_tilde(FS, caps)
    # omega_ij y^i dx^j is built from the parallel tensor omega
    assert component(nabla(dt, FS), 1).is_zero()


def test_components_split_by_total_degree():
    rng = random.Random(11)
    a = rand_section(rng, FS, Caps(6, 3), terms=8)
    total = Section.zero(2, Frame.COMPLEX, a.caps)
    for k in range(7):
        total = total + component(a, k)
    assert total == a
