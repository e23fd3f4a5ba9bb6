"""Seeded random admissible data: connections, Gram forms, sections."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .coefficients import Gauss, random_trig
from .endo import endo_class
from .geometry import BundleStructure, ChartGeometry, GramForm, SymplecticConnection


def _trig(ring, rng, K, n_modes, **kw):
    return random_trig(ring, rng, K, n_modes=n_modes, **kw)


def random_symplectic(geo: ChartGeometry, ring, rng: random.Random, K: int = 1,
                      n_modes: int | None = 1, density: float = 1.0) -> SymplecticConnection:
    """Totally symmetric real ``Gamma_{ijk}``; ``density`` drops components at random."""
    vals = {}
    for key in itertools.combinations_with_replacement(range(geo.dim), 3):
        if rng.random() <= density:
            vals[key] = _trig(ring, rng, K, n_modes)
    return SymplecticConnection.from_symmetric(geo, ring, vals)


def standard_gram(ring, rank: int, signature: tuple | None = None):
    """Diagonal ``diag(+1, .., -1, ..)`` Gram form (positive definite by default)."""
    E = endo_class(ring)
    signs = [1] * rank if signature is None else [1] * signature[0] + [-1] * signature[1]
    if len(signs) != rank:
        raise ValueError("signature does not match rank")
    rows = [[ring.const(signs[i] if i == j else 0) for j in range(rank)] for i in range(rank)]
    return GramForm(E.from_rows(ring, rows))


def random_gram(ring, rng: random.Random, rank: int, definite: bool = True):
    """Constant Hermitian Gram form; a small off-diagonal coupling keeps it generic."""
    E = endo_class(ring)
    rows = [[Gauss(0) for _ in range(rank)] for _ in range(rank)]
    for i in range(rank):
        rows[i][i] = Gauss(rank + 1 if definite else (rank + 1) * (-1) ** i)
        for j in range(i + 1, rank):
            c = Gauss(Fraction(rng.randint(-1, 1), 2), Fraction(rng.randint(-1, 1), 2))
            rows[i][j] = c
            rows[j][i] = c.conjugate()
    return GramForm(E.from_rows(ring, [[ring.const(x) for x in r] for r in rows]))


def random_anti_hermitian(ring, rng, rank: int, K: int = 1, n_modes: int | None = 1):
    """Matrix of trig polynomials with ``A^dagger = -A``."""
    E = endo_class(ring)
    rows = [[ring.zero() for _ in range(rank)] for _ in range(rank)]
    for i in range(rank):
        rows[i][i] = _trig(ring, rng, K, n_modes) * ring.const(Gauss(0, 1))
        for j in range(i + 1, rank):
            a = _trig(ring, rng, K, n_modes, real=False, complex_coeffs=True)
            rows[i][j] = a
            rows[j][i] = -a.conj()
    return E.from_rows(ring, rows)


def random_bundle(ring, rng: random.Random, dim: int, rank: int, K: int = 1, n_modes: int | None = 1,
                  gram: GramForm | None = None) -> BundleStructure:
    """Constant Gram ``H`` and ``Gamma^E_k = H^{-1} K_k`` with ``K_k`` anti-Hermitian."""
    gram = gram or random_gram(ring, rng, rank)
    conn = [gram.inverse @ random_anti_hermitian(ring, rng, rank, K, n_modes) for _ in range(dim)]
    b = BundleStructure(gram, conn)
    if not b.is_compatible():
        raise AssertionError("generated bundle connection is not compatible with H")
    return b


def random_endo(ring, rng: random.Random, rank: int, K: int = 1, n_modes: int | None = 1):
    """Generic complex ``End(E)``-valued trig polynomial."""
    E = endo_class(ring)
    rows = [[_trig(ring, rng, K, n_modes, real=False, complex_coeffs=True) for _ in range(rank)]
            for _ in range(rank)]
    return E.from_rows(ring, rows)


def random_section(space, rng: random.Random, K: int = 1, n_modes: int | None = 1, h_terms: int = 1):
    """``A = A_0 + h A_1 + ...`` with ``h_terms`` powers of ``h``."""
    out = space.zero()
    for p in range(h_terms):
        if 2 * p > space.order:
            break
        out = out + space.lift(random_endo(space.ring, rng, space.rank, K, n_modes), p)
    return out


def random_form_element(space, rng: random.Random, max_degree: int = 3, form_degree: int = 0,
                        K: int = 1, n_modes: int | None = 1, n_terms: int = 3):
    """Random element of ``W (x) Lambda^r`` with a few terms of low degree."""
    d = space.dim
    out = space.zero()
    for _ in range(n_terms):
        deg = rng.randint(0, max_degree)
        p = rng.randint(0, deg // 2)
        rest = deg - 2 * p
        alpha = [0] * d
        for _ in range(rest):
            alpha[rng.randrange(d)] += 1
        forms = tuple(sorted(rng.sample(range(d), form_degree)))
        out = out + space.term(random_endo(space.ring, rng, space.rank, K, n_modes), p, alpha, forms)
    return out
