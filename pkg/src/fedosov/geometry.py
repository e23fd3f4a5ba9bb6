"""Darboux chart, symplectic and bundle connections, curvatures, Hermitian adjoint."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from .coefficients import (
    const_matrix_inverse,
    eps_matrix_invert,
)
from .endo import endo_class


@dataclass(frozen=True)
class ChartGeometry:
    """Constant Darboux form ``omega = sum_i dx^{2i-1} ^ dx^{2i}`` on ``T^{2n}``."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("half-dimension must be positive")

    @property
    def dim(self) -> int:
        return 2 * self.n

    @cached_property
    def omega(self) -> tuple:
        d = self.dim
        w = [[0] * d for _ in range(d)]
        for i in range(self.n):
            w[2 * i][2 * i + 1] = 1
            w[2 * i + 1][2 * i] = -1
        return tuple(tuple(r) for r in w)

    @cached_property
    def omega_inv(self) -> tuple:
        # inverse in the sense omega^{is} omega_{sj} = delta^i_j
        d = self.dim
        w = [[0] * d for _ in range(d)]
        for i in range(self.n):
            w[2 * i][2 * i + 1] = -1
            w[2 * i + 1][2 * i] = 1
        return tuple(tuple(r) for r in w)

    def pairs(self):
        """Nonzero entries ``(i, j, omega^{ij})`` of the Poisson tensor."""
        return [(i, j, v) for i, row in enumerate(self.omega_inv) for j, v in enumerate(row) if v]


class SymplecticConnection:
    """Torsion-free symplectic connection in the Darboux chart.

    Stored as the lowered coefficients ``Gamma_{ijk} = omega_{is} Gamma^s_{jk}``,
    which must be totally symmetric.
    """

    def __init__(self, geo: ChartGeometry, ring, gamma=None, check: bool = True):
        d = geo.dim
        self.geo = geo
        self.ring = ring
        if gamma is None:
            gamma = [[[ring.zero() for _ in range(d)] for _ in range(d)] for _ in range(d)]
        self.gamma = [[[ring.lift(gamma[i][j][k]) for k in range(d)] for j in range(d)] for i in range(d)]
        if check:
            self.validate()

    def validate(self):
        d = self.geo.dim
        for i, j, k in itertools.product(range(d), repeat=3):
            g = self.gamma[i][j][k]
            for p in itertools.permutations((i, j, k)):
                if not (self.gamma[p[0]][p[1]][p[2]] == g):
                    raise ValueError(f"Gamma_{{ijk}} not totally symmetric at {(i, j, k)}")
            if not g.is_real():
                raise ValueError(f"Gamma_{{ijk}} not real at {(i, j, k)}")

    @classmethod
    def from_symmetric(cls, geo, ring, values: dict):
        """Build from ``{(i, j, k) sorted: scalar}``, filling all permutations."""
        d = geo.dim
        gamma = [[[ring.zero() for _ in range(d)] for _ in range(d)] for _ in range(d)]
        for key, v in values.items():
            for p in set(itertools.permutations(key)):
                gamma[p[0]][p[1]][p[2]] = ring.lift(v)
        return cls(geo, ring, gamma)

    def is_flat_data(self) -> bool:
        return all(x.is_zero() for a in self.gamma for b in a for x in b)

    def scaled(self, s):
        d = self.geo.dim
        g = [[[self.gamma[i][j][k] * s for k in range(d)] for j in range(d)] for i in range(d)]
        return SymplecticConnection(self.geo, self.ring, g, check=False)

    def upper(self):
        """``Gamma^i_{jk} = omega^{is} Gamma_{sjk}``."""
        d = self.geo.dim
        winv = self.geo.omega_inv
        out = [[[self.ring.zero() for _ in range(d)] for _ in range(d)] for _ in range(d)]
        for i, s in itertools.product(range(d), repeat=2):
            if winv[i][s]:
                for j, k in itertools.product(range(d), repeat=2):
                    out[i][j][k] = out[i][j][k] + self.gamma[s][j][k] * winv[i][s]
        return out


def sympl_curvature(conn: SymplecticConnection, geo: ChartGeometry | None = None):
    """Lowered curvature ``R_{ijkl} = omega_{is} R^s_{jkl}``.

    ``R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj} + Gamma^i_{ks} Gamma^s_{lj}
    - Gamma^i_{ls} Gamma^s_{kj}``.
    """
    geo = geo or conn.geo
    d = geo.dim
    ring = conn.ring
    up = conn.upper()
    R_up = [[[[ring.zero() for _ in range(d)] for _ in range(d)] for _ in range(d)] for _ in range(d)]
    for i, j, k, l in itertools.product(range(d), repeat=4):
        if k >= l:
            continue
        v = up[i][l][j].deriv(k) - up[i][k][j].deriv(l)
        for s in range(d):
            v = v + up[i][k][s] * up[s][l][j] - up[i][l][s] * up[s][k][j]
        R_up[i][j][k][l] = v
        R_up[i][j][l][k] = -v
    w = geo.omega
    R = [[[[ring.zero() for _ in range(d)] for _ in range(d)] for _ in range(d)] for _ in range(d)]
    for i, s in itertools.product(range(d), repeat=2):
        if w[i][s]:
            for j, k, l in itertools.product(range(d), repeat=3):
                R[i][j][k][l] = R[i][j][k][l] + R_up[s][j][k][l] * w[i][s]
    return R


def bundle_curvature(conn: Sequence):
    """``R^E_{ij} = d_i Gamma_j - d_j Gamma_i + [Gamma_i, Gamma_j]``."""
    d = len(conn)
    zero = endo_class(conn[0].ring).zero(conn[0].ring, conn[0].rank)
    R = [[zero for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            v = conn[j].deriv(i) - conn[i].deriv(j) + conn[i] @ conn[j] - conn[j] @ conn[i]
            R[i][j] = v
            R[j][i] = -v
    return R


class GramForm:
    """Nondegenerate (pseudo-)Hermitian form ``h(v, w) = w^dagger H v``."""

    def __init__(self, H, inverse=None):
        self.H = H
        self.ring = H.ring
        self.rank = H.rank
        self._inv = inverse

    @cached_property
    def is_constant(self) -> bool:
        return all(self.H.entry(i, j).is_constant() for i in range(self.rank) for j in range(self.rank))

    @property
    def inverse(self):
        if self._inv is None:
            self._inv = gram_inverse(self.H)
        return self._inv

    def is_hermitian(self) -> bool:
        return self.H == self.H.conj_t()


def gram_inverse(H):
    ring = H.ring
    rows = H.rows()
    cls = endo_class(ring)
    if all(x.is_constant() for r in rows for x in r):
        c = [[x.value() for x in r] for r in rows]
        try:
            inv = const_matrix_inverse(c, exact=ring.exact)
        except (ZeroDivisionError, ValueError) as exc:
            raise ValueError("Gram form is not invertible") from exc
        if not ring.exact:
            import numpy as np

            if not np.all(np.isfinite(inv)) or abs(np.linalg.det(np.array(c, dtype=complex))) < ring.tol:
                raise ValueError("Gram form is not invertible")
        return cls.from_rows(ring, [[ring.const(x) for x in r] for r in inv])
    try:
        inv = eps_matrix_invert(rows)
    except ZeroDivisionError as exc:
        raise ValueError("Gram form is not invertible") from exc
    return cls.from_rows(ring, inv)


def adjoint(A, gram):
    """``A^+ = H^{-1} conj(A)^T H``, the adjoint with respect to ``h``."""
    if not isinstance(gram, GramForm):
        gram = GramForm(gram)
    return gram.inverse @ A.conj_t() @ gram.H


@dataclass
class BundleStructure:
    """Vector bundle data on the chart: Gram form and connection ``d + Gamma^E``."""

    gram: GramForm
    conn: list
    rank: int = field(init=False)

    def __post_init__(self):
        if not isinstance(self.gram, GramForm):
            self.gram = GramForm(self.gram)
        self.rank = self.gram.rank
        if any(c.rank != self.rank for c in self.conn):
            raise ValueError("connection rank does not match Gram form")

    @property
    def ring(self):
        return self.gram.ring

    @cached_property
    def curvature(self):
        return bundle_curvature(self.conn)

    def compatibility_defects(self):
        """``d_i H - H Gamma_i - Gamma_i^dagger H`` for every direction."""
        H = self.gram.H
        return [H.deriv(i) - H @ g - g.conj_t() @ H for i, g in enumerate(self.conn)]

    def is_compatible(self) -> bool:
        return all(x.is_zero() for x in self.compatibility_defects())

    def scaled(self, s):
        return BundleStructure(self.gram, [g.mul_scalar(s) for g in self.conn])

    def is_flat_data(self) -> bool:
        return all(g.is_zero() for g in self.conn)

    @classmethod
    def trivial(cls, ring, dim: int, rank: int, gram_rows=None):
        E = endo_class(ring)
        H = E.identity(ring, rank) if gram_rows is None else E.from_rows(ring, gram_rows)
        return cls(GramForm(H), [E.zero(ring, rank) for _ in range(dim)])


def check_omega(geo: ChartGeometry) -> bool:
    d = geo.dim
    w, wi = geo.omega, geo.omega_inv
    anti = all(w[i][j] == -w[j][i] for i in range(d) for j in range(d))
    inv = all(sum(wi[i][s] * w[s][j] for s in range(d)) == int(i == j) for i in range(d) for j in range(d))
    return anti and inv
