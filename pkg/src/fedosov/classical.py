"""Classical (h = 0) gravity actions from plain tensor calculus.

Deliberately independent of the Weyl/Fedosov code and of the curvature
routines in :mod:`fedosov.gravity`: the Riemann tensor comes from the
all-lower-index formula in second derivatives of the metric,

    R_abcd = 1/2 (g_ad,bc + g_bc,ad - g_ac,bd - g_bd,ac)
             + g_ef (G^e_bc G^f_ad - G^e_bd G^f_ac),

and contractions are written out index by index.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .coefficients import det, eps_matrix_invert, eps_sqrt


def _christoffel_first(g):
    """``G_{s,bc} = (1/2)(g_sb,c + g_sc,b - g_bc,s)``."""
    n = len(g)
    ring = g[0][0].ring
    half = ring.const(Fraction(1, 2))
    return [[[(g[s][b].deriv(c) + g[s][c].deriv(b) - g[b][c].deriv(s)) * half for c in range(n)]
             for b in range(n)] for s in range(n)]


def riemann_lower(g, g_inv):
    n = len(g)
    ring = g[0][0].ring
    first = _christoffel_first(g)
    second = [[[sum((g_inv[e][s] * first[s][b][c] for s in range(1, n)), g_inv[e][0] * first[0][b][c])
                for c in range(n)] for b in range(n)] for e in range(n)]
    half = ring.const(Fraction(1, 2))

    def dd(a, b, c, d):
        return g[a][b].deriv(c).deriv(d)

    R = {}
    for a, b, c, d in itertools.product(range(n), repeat=4):
        v = (dd(a, d, b, c) + dd(b, c, a, d) - dd(a, c, b, d) - dd(b, d, a, c)) * half
        for e, f in itertools.product(range(n), repeat=2):
            v = v + g[e][f] * (second[e][b][c] * second[f][a][d] - second[e][b][d] * second[f][a][c])
        R[(a, b, c, d)] = v
    return R


def scalar_curvature(g):
    """``R = g^{ac} g^{bd} R_abcd``."""
    n = len(g)
    g_inv = eps_matrix_invert(g)
    Rl = riemann_lower(g, g_inv)
    out = g[0][0].ring.zero()
    for a, b, c, d in itertools.product(range(n), repeat=4):
        out = out + g_inv[a][c] * g_inv[b][d] * Rl[(a, b, c, d)]
    return out


def sqrt_abs_det(g):
    dg = det(g)
    lead = complex(dg.eps_coeff(0).value())
    return eps_sqrt(-dg if lead.real < 0 else dg)


def eh_density(g):
    """Pointwise ``R v``."""
    return scalar_curvature(g) * sqrt_abs_det(g)


def eh_action(g):
    """``int R v`` as the constant Fourier mode (``(2 pi)^d`` factor implicit)."""
    return eh_density(g).integrate()


def palatini_density(theta, eta, gamma_L):
    """``v g^{ai} R^A_{Bib} g^{bc} theta^B_c eta_AD theta^D_a`` from ``theta`` and ``Gamma^L``."""
    n = len(theta)
    ring = theta[0][0].ring
    g = [[sum((theta[A][a] * eta[A][B] * theta[B][b] for A in range(n) for B in range(n) if eta[A][B]),
              ring.zero()) for b in range(n)] for a in range(n)]
    g_inv = eps_matrix_invert(g)

    def curv(A, B, i, j):
        v = gamma_L[j][A][B].deriv(i) - gamma_L[i][A][B].deriv(j)
        for C in range(n):
            v = v + gamma_L[i][A][C] * gamma_L[j][C][B] - gamma_L[j][A][C] * gamma_L[i][C][B]
        return v

    F = {(A, B, i, j): curv(A, B, i, j) for A, B, i, j in itertools.product(range(n), repeat=4)}
    out = ring.zero()
    for A, B, a, b, i, c, D in itertools.product(range(n), repeat=7):
        if not eta[A][D]:
            continue
        out = out + g_inv[a][i] * F[(A, B, i, b)] * g_inv[b][c] * theta[B][c] * theta[D][a] * eta[A][D]
    return out * sqrt_abs_det(g)


def palatini_action(theta, eta, gamma_L):
    return palatini_density(theta, eta, gamma_L).integrate()
