import random

import pytest

from fedosov.checks import FlatteningPool, curved_context, flattening_checks, trace_checks
from fedosov.coefficients import ExactRing
from fedosov.core import FedosovContext
from fedosov.data import random_section
from fedosov.trace import HomotopyPath, TraceSeries, trace_flat, trace_star
from fedosov.weyl import delta_inv, weyl_adjoint

R = ExactRing(2)


@pytest.fixture(scope="module")
def path():
    ctx = curved_context(R, 2, 5, random.Random(3), target=4)
    return HomotopyPath(ctx)


def test_hamiltonian_properties(path):
    H = path.hamiltonian()
    N = path.space.order
    assert H.min_degree() == 3
    assert weyl_adjoint(H, path.start.bundle.gram) == H
    # D_t H = d/dt (Gamma~ + r) within the determined degrees
    assert (path.moving.D(H) - path.gamma_dot()).truncated(N - 2).is_zero()
    assert H == path.moving.quantize(-delta_inv(path.gamma_dot()))


def test_end_of_path_is_flat(path):
    assert path.end.flat
    assert path.moving.r.t_eval(1).is_zero()
    assert path.moving.r.t_eval(0) == path.start.r


def test_flatten_is_y_free_and_matches_full_formula():
    ctx = curved_context(R, 2, 7, random.Random(3), target=4)
    p = HomotopyPath(ctx, target=4)
    A = random_section(ctx.space, random.Random(8), h_terms=2)
    M = p.flatten(A)
    assert M == M.symbol()
    assert M == p.flatten_full(A)


def test_target_must_leave_room():
    ctx = curved_context(R, 2, 4, random.Random(3))
    with pytest.raises(ValueError):
        HomotopyPath(ctx, target=4)


def test_pool_checks_small(path):
    pool = FlatteningPool(path.start, path, random.Random(5), size=3)
    for res in flattening_checks(pool) + trace_checks(pool):
        assert res.passed, res.line()


def test_trace_of_flat_context_is_integral():
    ctx = curved_context(R, 2, 4, random.Random(3))
    flat = FedosovContext(ctx.space)
    A = random_section(ctx.space, random.Random(1), h_terms=2)
    tr = trace_star(flat, A)
    assert tr.coeffs[0] == A.h_coeffs()[0].trace().integrate()
    assert tr == trace_flat(A)


def test_trace_series_table_and_witness():
    s = TraceSeries(2, {0: R.const(3), 1: R.zero()})
    assert s.table() == {(0, 0): 3}
    assert s.witness() == ((0, 0), 3)
    assert (s - s).witness() is None
