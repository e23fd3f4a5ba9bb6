import random

import pytest

from fedosov import classical
from fedosov.coefficients import ExactRing, Gauss, identity_matrix, mat_add, mat_mul
from fedosov.endo import endo_class
from fedosov.geometry import ChartGeometry, bundle_curvature
from fedosov.gravity import (
    ActionSeries,
    LorentzConnection,
    MetricField,
    TetradField,
    action,
    background_eta,
    build_eh_endos,
    build_palatini_endos,
    connection_matrices,
    eh_setup,
    inverse_metric,
    kron,
    levi_civita,
    palatini_setup,
    reality_report,
    self_adjointness,
)

R = ExactRing(2, eps_order=2)
E = endo_class(R)
GEO = ChartGeometry(1)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("lorentzian", [False, True])
def test_eh_self_adjointness(seed, lorentzian):
    met = MetricField.random(R, random.Random(seed), background_eta(2, lorentzian))
    assert all(self_adjointness(build_eh_endos(met), "EH").values())


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_palatini_self_adjointness(seed):
    rng = random.Random(seed)
    eta = background_eta(2, True)
    tet, con = TetradField.random(R, rng, eta), LorentzConnection.random(R, rng, eta, 2)
    assert all(self_adjointness(build_palatini_endos(tet, con), "P").values())


def test_eh2_curvature_is_tensor_sum():
    met = MetricField.random(R, random.Random(4), background_eta(2))
    G = connection_matrices(levi_civita(met.g))
    one = identity_matrix(R, 2)
    single = bundle_curvature([E.from_rows(R, g) for g in G])
    double = bundle_curvature([E.from_rows(R, mat_add(kron(g, one), kron(one, g))) for g in G])
    R1 = single[0][1].rows()
    assert double[0][1] == E.from_rows(R, mat_add(kron(R1, one), kron(one, R1)))


def test_classical_densities():
    rng = random.Random(6)
    met = MetricField.random(R, rng, background_eta(2))
    endos = build_eh_endos(met)
    # Tr R_ = R, so Tr of the breve endomorphism is the scalar density
    assert E.from_rows(R, endos.R1v).trace() == classical.eh_density(met.g)
    eta = background_eta(2, True)
    tet, con = TetradField.random(R, rng, eta), LorentzConnection.random(R, rng, eta, 2)
    pe = build_palatini_endos(tet, con)
    assert E.from_rows(R, mat_mul(pe.RLv, pe.T)).trace() == classical.palatini_density(tet.theta, eta, con.gamma)


def test_two_dimensional_einstein_hilbert_is_topological():
    met = MetricField.random(R, random.Random(8), background_eta(2))
    assert classical.eh_action(met.g).is_zero()


def test_palatini_frame_connection():
    rng = random.Random(2)
    eta = background_eta(2, True)
    tet, con = TetradField.random(R, rng, eta), LorentzConnection.random(R, rng, eta, 2)
    st = palatini_setup(tet, con)
    one = identity_matrix(R, 2)
    for G, c in zip(con.gamma, st.bundle.conn):
        assert E.from_rows(R, mat_add(kron(G, one), kron(one, G))) == c
    assert st.bundle.is_compatible() and st.bundle.gram.is_constant


@pytest.mark.parametrize("kind", ["EH1A", "EH1B", "EH2A", "EH2B"])
def test_flat_metric_gives_zero_action(kind):
    zero = [[R.zero()] * 2 for _ in range(2)]
    st = eh_setup(MetricField(R, background_eta(2), zero), kind)
    assert action(st, GEO, 2).table == {}


def test_reality_report_flags_imaginary_part():
    s = ActionSeries("EH1A", 2, {(0, 1): Gauss(1), (2, 2): Gauss(3, 1)}, 2, 2)
    rep = reality_report(s)
    assert not rep["real"] and rep["imaginary_witness"] == {"h": 2, "eps": 2, "im": "1"}
    assert reality_report(ActionSeries("P", 2, {(2, 1): Gauss(5)}, 2, 2), oracle={}).get("passed")


def test_reality_report_oracle_mismatch():
    s = ActionSeries("EH1A", 2, {(0, 1): Gauss(1)}, 2, 2)
    rep = reality_report(s, oracle={1: Gauss(2)})
    assert rep["real"] and not rep["oracle_match"]
    assert rep["oracle_witness"]["eps"] == 1


def test_degenerate_metric_rejected():
    g = [[R.one(), R.one()], [R.one(), R.one()]]
    with pytest.raises(ValueError):
        inverse_metric(g)
    with pytest.raises(ValueError):
        MetricField(R, [[2, 0], [0, 1]], [[R.zero()] * 2] * 2)
