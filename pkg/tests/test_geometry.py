import itertools
import random

import pytest

from fedosov.coefficients import ExactRing, Gauss
from fedosov.data import random_anti_hermitian, random_bundle, random_endo, random_gram, random_symplectic, standard_gram
from fedosov.endo import endo_class
from fedosov.geometry import (
    BundleStructure,
    ChartGeometry,
    GramForm,
    adjoint,
    check_omega,
    sympl_curvature,
)

R = ExactRing(2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_darboux_form(n):
    geo = ChartGeometry(n)
    assert check_omega(geo)
    assert len(geo.pairs()) == 2 * n


def test_symplectic_curvature_symmetries():
    geo = ChartGeometry(1)
    symp = random_symplectic(geo, R, random.Random(2))
    Rl = sympl_curvature(symp, geo)
    d = geo.dim
    for i, j, k, l in itertools.product(range(d), repeat=4):
        # symmetric in the first pair, antisymmetric in the form pair
        assert Rl[i][j][k][l] == Rl[j][i][k][l]
        assert Rl[i][j][k][l] == -Rl[i][j][l][k]


def test_random_bundle_is_compatible():
    rng = random.Random(5)
    b = random_bundle(R, rng, 2, 3)
    assert b.gram.is_constant and b.gram.is_hermitian()
    assert b.is_compatible()


def test_incompatible_connection_detected():
    rng = random.Random(5)
    gram = random_gram(R, rng, 2)
    # i times anti-Hermitian is Hermitian, which breaks metric compatibility
    bad = [gram.inverse @ random_anti_hermitian(R, rng, 2).mul_scalar(R.const(Gauss(0, 1))) for _ in range(2)]
    assert not BundleStructure(gram, bad).is_compatible()


def test_adjoint_is_an_involution():
    rng = random.Random(7)
    gram = random_gram(R, rng, 3)

    A, B = random_endo(R, rng, 3), random_endo(R, rng, 3)
    assert adjoint(adjoint(A, gram), gram) == A
    assert adjoint(A @ B, gram) == adjoint(B, gram) @ adjoint(A, gram)


def test_indefinite_gram():
    g = standard_gram(R, 2, signature=(1, 1))
    assert g.is_hermitian()
    assert (g.inverse @ g.H) == endo_class(R).identity(R, 2)


def test_singular_gram_rejected():
    E = endo_class(R)
    H = E.from_rows(R, [[R.one(), R.one()], [R.one(), R.one()]])
    with pytest.raises(ValueError):
        GramForm(H).inverse
