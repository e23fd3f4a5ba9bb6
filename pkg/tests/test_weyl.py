import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedosov.coefficients import ExactRing, Gauss
from fedosov.data import random_bundle, random_form_element
from fedosov.geometry import ChartGeometry
from fedosov.weyl import (
    WeylSpace,
    delta,
    delta_inv,
    exterior_d,
    graded_commutator,
    ih_bracket,
    moyal,
    moyal_symbol,
    weyl_adjoint,
)

R = ExactRing(2)
GEO = ChartGeometry(1)
SP = WeylSpace(GEO, R, 2, 6)
SP1 = WeylSpace(GEO, R, 1, 6)

seeds = st.integers(0, 10 ** 6)


def test_heisenberg_relation():
    y1, y2 = SP1.y(0), SP1.y(1)
    assert y1 * y2 - y2 * y1 == SP1.h().scale(Gauss(0, 1))
    assert ih_bracket(y1, y2) == SP1.one().scale(-1)


def test_moyal_of_quadratics():
    # y1^2 o y2^2 = y1^2 y2^2 + 2 i h y1 y2 - h^2/2 (second order term)
    y1, y2 = SP1.y(0), SP1.y(1)
    a, b = y1 * y1, y2 * y2
    got = a * b
    want = SP1.term(R.one(), 0, (2, 2)) + SP1.term(R.const(Gauss(0, 2)), 1, (1, 1)) \
        + SP1.term(R.const(Fraction(-1, 2)), 2)
    assert got == want


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_moyal_associative(seed):
    rng = random.Random(seed)
    a, b, c = (random_form_element(SP, rng, max_degree=3, form_degree=rng.randint(0, 2)) for _ in range(3))
    assert (a * b) * c == a * (b * c)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_moyal_involution_rule(seed):
    rng = random.Random(seed)
    gram = random_bundle(R, rng, 2, 2).gram
    r, s = rng.randint(0, 2), rng.randint(0, 2)
    a = random_form_element(SP, rng, form_degree=r)
    b = random_form_element(SP, rng, form_degree=s)
    lhs = weyl_adjoint(a * b, gram)
    rhs = weyl_adjoint(b, gram) * weyl_adjoint(a, gram)
    assert lhs == rhs.scale((-1) ** (r * s))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_delta_squares_and_hodge(seed):
    rng = random.Random(seed)
    a = random_form_element(SP, rng, max_degree=4, form_degree=rng.randint(0, 2), n_terms=4)
    assert delta(delta(a)).is_zero()
    assert delta_inv(delta_inv(a)).is_zero()
    # delta delta^-1 + delta^-1 delta + projection onto (y, dx)-free part = id
    assert delta(delta_inv(a)) + delta_inv(delta(a)) + a.symbol() == a


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_exterior_d_squares_to_zero(seed):
    rng = random.Random(seed)
    a = random_form_element(SP, rng, form_degree=0)
    assert exterior_d(exterior_d(a)).is_zero()


def test_graded_commutator_signs():
    rng = random.Random(1)
    a = random_form_element(SP, rng, form_degree=1)
    b = random_form_element(SP, rng, form_degree=1)
    # odd-odd: anticommutator
    assert graded_commutator(a, b) == a * b + b * a
    assert graded_commutator(a, b) == graded_commutator(b, a)


def test_bracket_rejects_noncentral_classical_commutator():
    rng = random.Random(3)
    A = SP.lift(random_form_element(SP, rng, max_degree=0).terms.popitem()[1])
    B = SP.lift(random_form_element(SP, rng, max_degree=0).terms.popitem()[1])
    # two generic matrices do not commute, so (i/h)[A, B] leaves the algebra
    with pytest.raises(ArithmeticError):
        ih_bracket(A, B)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_moyal_symbol_is_symbol_of_product(seed):
    rng = random.Random(seed)
    a = random_form_element(SP, rng, max_degree=3)
    b = random_form_element(SP, rng, max_degree=3)
    assert moyal_symbol(a, b) == moyal(a, b).symbol()
