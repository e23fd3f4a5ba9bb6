import random

import pytest

from fedosov.checks import curved_context, plane_wave_oracle, poisson
from fedosov.coefficients import ExactRing, FloatRing, Gauss
from fedosov.core import FedosovContext, flat_context
from fedosov.data import random_form_element, random_section
from fedosov.geometry import ChartGeometry
from fedosov.weyl import WeylSpace, delta, delta_inv, ih_product, weyl_adjoint

R = ExactRing(2)
GEO = ChartGeometry(1)


@pytest.fixture(scope="module")
def ctx4():
    return curved_context(R, 2, 4, random.Random(11))


def test_r_starts_in_degree_three(ctx4):
    assert ctx4.r.min_degree() == 3
    assert ctx4.r.form_degrees() == {1}


def test_r_equation_and_reality(ctx4):
    r = ctx4.r
    lhs = delta(r)
    rhs = ctx4.curvature + ctx4.nabla(r) + ih_product(r, r)
    assert (lhs - rhs).truncated(3).is_zero()
    assert weyl_adjoint(r, ctx4.bundle.gram) == r


def test_delta_inverse_of_r_vanishes(ctx4):
    # normalisation condition of the abelian connection
    assert delta_inv(ctx4.r).is_zero()


def test_quantization_round_trip(ctx4):
    rng = random.Random(1)
    A = random_section(ctx4.space, rng, h_terms=2)
    q = ctx4.quantize(A)
    assert q.symbol() == A
    assert ctx4.dequantize(q) == A


def test_star_full_inverse_agrees_with_symbol(ctx4):
    rng = random.Random(2)
    A, B = random_section(ctx4.space, rng), random_section(ctx4.space, rng)
    assert ctx4.star(A, B) == ctx4.star(A, B, exact_inverse=True)


def test_unit_and_adjoint(ctx4):
    rng = random.Random(3)
    sp = ctx4.space
    A, B = random_section(sp, rng), random_section(sp, rng)
    assert ctx4.star(sp.one(), A) == A
    g = ctx4.bundle.gram
    assert weyl_adjoint(ctx4.star(A, B), g) == ctx4.star(weyl_adjoint(B, g), weyl_adjoint(A, g))


def test_bundle_sign_flip_breaks_flatness():
    good = curved_context(R, 2, 5, random.Random(4))
    bad = FedosovContext(good.space, good.symp, good.bundle, bundle_sign=-1)
    a = random_form_element(good.space, random.Random(5), max_degree=1, form_degree=0)
    assert good.D(good.D(a), upto=2).truncated(2).is_zero()
    assert not bad.D(bad.D(a), upto=2).truncated(2).is_zero()


def test_flat_plane_waves_small():
    sp = WeylSpace(GEO, R, 1, 4)
    ctx = flat_context(sp)
    k, l = (1, -1), (2, 1)
    got = ctx.star(sp.lift(sp.scalar_endo(R.mode(k))), sp.lift(sp.scalar_endo(R.mode(l))))
    # omega^{12} = -1: w = -k1 l2 + k2 l1 = -1 - 2 = -3
    assert got.h_coeffs()[1].entry(0, 0) == R.mode((3, 0), Gauss(0, -3) / 2)
    assert set(got.h_coeffs()) == set(plane_wave_oracle(R, GEO, k, l, 2))


def test_bracket_sign_in_curved_chart():
    ctx = curved_context(R, 1, 4, random.Random(6))
    sp = ctx.space
    f, g = R.sin((1, 0)), R.sin((0, 1))
    F, G = sp.lift(sp.scalar_endo(f)), sp.lift(sp.scalar_endo(g))
    comm = (ctx.star(F, G) - ctx.star(G, F)).h_coeffs()
    assert 0 not in comm
    assert comm[1].entry(0, 0) == poisson(f, g, GEO) * R.const(Gauss(0, -1))


def test_target_bounds():
    sp = WeylSpace(GEO, R, 1, 4)
    with pytest.raises(ValueError):
        FedosovContext(sp, target=5)


def test_float_backend_core():
    F = FloatRing(2, bandwidth=8)
    ctx = curved_context(F, 2, 4, random.Random(11))
    r = ctx.r
    rhs = ctx.curvature + ctx.nabla(r) + ih_product(r, r)
    assert (delta(r) - rhs).truncated(3).is_zero()
    A = random_section(ctx.space, random.Random(1))
    assert ctx.dequantize(ctx.quantize(A)) == A
