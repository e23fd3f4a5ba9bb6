"""Sections of End(E): square matrices of coefficient functions.

:class:`ExactEndo` keeps a sparse ``{(row, col): (re, im)}`` map of FLINT
polynomials so that identity-valued coefficients (the scalar parts of the
Fedosov connection) multiply in ``O(rank^2)``.  :class:`FloatEndo` stores one
dense array of shape ``(eps, t, grid, rank, rank)`` and multiplies with
batched ``matmul``.

Both expose a *raw* product used by the Weyl-algebra kernels: many products
are summed before the single (comparatively expensive) normalisation step.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .coefficients import (
    ExactRing,
    ExactScalar,
    FloatRing,
    FloatScalar,
    Gauss,
    _fmpq,
)


class ExactEndo:
    __slots__ = ("ring", "rank", "e", "_scalar")

    def __init__(self, ring: ExactRing, rank: int, entries: dict):
        self.ring = ring
        self.rank = rank
        self.e = entries
        self._scalar = None

    # construction ---------------------------------------------------------
    @classmethod
    def zero(cls, ring, rank):
        return cls(ring, rank, {})

    @classmethod
    def identity(cls, ring, rank):
        one = ring._one
        return cls(ring, rank, {(i, i): (one, ring._zero) for i in range(rank)})

    @classmethod
    def scalar(cls, ring, rank, s):
        s = ring.lift(s)
        if s.is_zero():
            return cls.zero(ring, rank)
        return cls(ring, rank, {(i, i): (s.re, s.im) for i in range(rank)})

    @classmethod
    def from_rows(cls, ring, rows: Sequence[Sequence]):
        rank = len(rows)
        entries = {}
        for i, row in enumerate(rows):
            if len(row) != rank:
                raise ValueError("endomorphism must be square")
            for j, x in enumerate(row):
                s = ring.lift(x)
                if not s.is_zero():
                    entries[(i, j)] = (s.re, s.im)
        return cls(ring, rank, entries)

    def entry(self, i, j) -> ExactScalar:
        re, im = self.e.get((i, j), (self.ring._zero, self.ring._zero))
        return ExactScalar(self.ring, re, im)

    def rows(self):
        return [[self.entry(i, j) for j in range(self.rank)] for i in range(self.rank)]

    # linear structure -----------------------------------------------------
    def _combine(self, other, sign):
        if not isinstance(other, ExactEndo) or other.rank != self.rank:
            raise ValueError("rank mismatch")
        out = dict(self.e)
        for key, (re, im) in other.e.items():
            if key in out:
                r0, i0 = out[key]
                nr, ni = (r0 + re, i0 + im) if sign > 0 else (r0 - re, i0 - im)
                if nr.is_zero() and ni.is_zero():
                    del out[key]
                else:
                    out[key] = (nr, ni)
            else:
                out[key] = (re, im) if sign > 0 else (-re, -im)
        return ExactEndo(self.ring, self.rank, out)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return ExactEndo(self.ring, self.rank, {k: (-r, -i) for k, (r, i) in self.e.items()})

    def scale(self, c):
        g = Gauss.coerce(c)
        if not g:
            return ExactEndo.zero(self.ring, self.rank)
        re = _fmpq(g.re)
        if not g.im:
            return ExactEndo(self.ring, self.rank, {k: (r * re, i * re) for k, (r, i) in self.e.items()})
        im = _fmpq(g.im)
        if not g.re:
            return ExactEndo(self.ring, self.rank, {k: (-i * im, r * im) for k, (r, i) in self.e.items()})
        return ExactEndo(
            self.ring, self.rank, {k: (r * re - i * im, r * im + i * re) for k, (r, i) in self.e.items()}
        )

    def mul_scalar(self, s):
        """Multiply every entry by the coefficient function ``s``."""
        return self @ ExactEndo.scalar(self.ring, self.rank, s)

    # products -------------------------------------------------------------
    def raw_product(self, other) -> dict:
        """Matrix product with entries at doubled exponent offset (unnormalised)."""
        by_row: dict = {}
        for (k, j), v in other.e.items():
            by_row.setdefault(k, []).append((j, v))
        out: dict = {}
        for (i, k), (ar, ai) in self.e.items():
            row = by_row.get(k)
            if not row:
                continue
            a_real = ai.is_zero()
            for j, (br, bi) in row:
                b_real = bi.is_zero()
                if a_real:
                    re = ar * br
                    im = None if b_real else ar * bi
                elif b_real:
                    re = ar * br
                    im = ai * br
                else:
                    re = ar * br - ai * bi
                    im = ar * bi + ai * br
                cur = out.get((i, j))
                if cur is None:
                    out[(i, j)] = [re, im]
                else:
                    cur[0] = cur[0] + re
                    if im is not None:
                        cur[1] = im if cur[1] is None else cur[1] + im
        return out

    def _from_raw(self, raw: dict):
        ring = self.ring
        zero = ring._zero
        entries = {}
        for key, (re, im) in raw.items():
            nr = ring._norm(re)
            ni = ring._norm(im) if im is not None else zero
            if not (nr.is_zero() and ni.is_zero()):
                entries[key] = (nr, ni)
        return ExactEndo(ring, self.rank, entries)

    def __matmul__(self, other):
        if other.rank != self.rank:
            raise ValueError("rank mismatch")
        return self._from_raw(self.raw_product(other))

    # calculus -------------------------------------------------------------
    def _map(self, f):
        out = {}
        for k, (r, i) in self.e.items():
            s = f(ExactScalar(self.ring, r, i))
            if not s.is_zero():
                out[k] = (s.re, s.im)
        return ExactEndo(self.ring, self.rank, out)

    def deriv(self, j):
        return self._map(lambda s: s.deriv(j))

    def t_deriv(self):
        return self._map(lambda s: s.t_deriv())

    def t_integral(self):
        return self._map(lambda s: s.t_integral())

    def t_eval(self, value):
        return self._map(lambda s: s.t_eval(value))

    def eps_coeff(self, m):
        return self._map(lambda s: s.eps_coeff(m))

    def conj_t(self):
        """Entrywise complex conjugate of the transpose."""
        out = {}
        for (i, j), (r, im) in self.e.items():
            s = ExactScalar(self.ring, r, im).conj()
            out[(j, i)] = (s.re, s.im)
        return ExactEndo(self.ring, self.rank, out)

    def transpose(self):
        return ExactEndo(self.ring, self.rank, {(j, i): v for (i, j), v in self.e.items()})

    def trace(self) -> ExactScalar:
        out = self.ring.zero()
        for i in range(self.rank):
            if (i, i) in self.e:
                r, im = self.e[(i, i)]
                out = ExactScalar(self.ring, out.re + r, out.im + im)
        return out

    def is_zero(self):
        return not self.e

    def __eq__(self, other):
        if not isinstance(other, ExactEndo):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def is_scalar(self) -> bool:
        """Multiple of the identity (cached; endomorphisms are never mutated)."""
        if self._scalar is None:
            self._scalar = self._check_scalar()
        return self._scalar

    def _check_scalar(self) -> bool:
        if any(i != j for i, j in self.e):
            return False
        vals = [self.e.get((i, i)) for i in range(self.rank)]
        if any(v is None for v in vals):
            return all(v is None for v in vals)
        r0, i0 = vals[0]
        return all(r == r0 and i == i0 for r, i in vals[1:])

    def __repr__(self):
        return f"ExactEndo({self.rows()})"


class ExactAccumulator:
    """Sums scaled (raw or normalised) matrices per key, normalising once."""

    def __init__(self, ring: ExactRing, rank: int):
        self.ring = ring
        self.rank = rank
        self.raw: dict = {}
        self.plain: dict = {}

    def add_raw(self, key, raw: dict, coeff: Fraction, imag: bool):
        c = _fmpq(coeff)
        slot = self.raw.setdefault(key, {})
        for ij, (re, im) in raw.items():
            if imag:
                nre = None if im is None else -(im * c)
                nim = re * c
            else:
                nre = re * c
                nim = None if im is None else im * c
            cur = slot.get(ij)
            if cur is None:
                slot[ij] = [nre, nim]
            else:
                if nre is not None:
                    cur[0] = nre if cur[0] is None else cur[0] + nre
                if nim is not None:
                    cur[1] = nim if cur[1] is None else cur[1] + nim

    def add(self, key, endo: ExactEndo, coeff=1):
        cur = self.plain.get(key)
        term = endo if coeff == 1 else endo.scale(coeff)
        self.plain[key] = term if cur is None else cur + term

    def finish(self) -> dict:
        ring = self.ring
        zero = ring._zero
        out = {}
        for key in set(self.raw) | set(self.plain):
            entries = {}
            for ij, (re, im) in self.raw.get(key, {}).items():
                nr = ring._norm(re) if re is not None else zero
                ni = ring._norm(im) if im is not None else zero
                if not (nr.is_zero() and ni.is_zero()):
                    entries[ij] = (nr, ni)
            m = ExactEndo(ring, self.rank, entries)
            if key in self.plain:
                m = m + self.plain[key]
            if not m.is_zero():
                out[key] = m
        return out


# ---------------------------------------------------------------------------
# float
# ---------------------------------------------------------------------------


class FloatEndo:
    """Dense float endomorphism; payload ``(ne, nt, G, r, r)`` with ``G`` grid points."""

    __slots__ = ("ring", "rank", "a")

    def __init__(self, ring: FloatRing, rank: int, a):
        self.ring = ring
        self.rank = rank
        self.a = a

    @classmethod
    def _blank(cls, ring, rank, nt=1):
        g = ring.grid ** ring.dim
        return np.zeros((ring.ne, nt, g, rank, rank), dtype=complex)

    @classmethod
    def zero(cls, ring, rank):
        return cls(ring, rank, cls._blank(ring, rank))

    @classmethod
    def identity(cls, ring, rank):
        a = cls._blank(ring, rank)
        a[0, 0, :] = np.eye(rank)
        return cls(ring, rank, a)

    @classmethod
    def scalar(cls, ring, rank, s):
        s = ring.lift(s)
        g = ring.grid ** ring.dim
        sa = s.a.reshape(s.a.shape[0], s.a.shape[1], g)
        a = sa[..., None, None] * np.eye(rank)
        return cls(ring, rank, a)

    @classmethod
    def from_rows(cls, ring, rows):
        rank = len(rows)
        scal = [[ring.lift(x) for x in row] for row in rows]
        nt = max(s.a.shape[1] for row in scal for s in row)
        g = ring.grid ** ring.dim
        a = np.zeros((ring.ne, nt, g, rank, rank), dtype=complex)
        for i, row in enumerate(scal):
            if len(row) != rank:
                raise ValueError("endomorphism must be square")
            for j, s in enumerate(row):
                a[:, : s.a.shape[1], :, i, j] = s.a.reshape(s.a.shape[0], s.a.shape[1], g)
        return cls(ring, rank, a)

    def entry(self, i, j):
        r = self.ring
        return FloatScalar(r, self.a[..., i, j].reshape(self.a.shape[:2] + r.shape).copy())

    def rows(self):
        return [[self.entry(i, j) for j in range(self.rank)] for i in range(self.rank)]

    def __add__(self, other):
        return FloatEndo(self.ring, self.rank, self.ring._add(self.a, other.a))

    def __sub__(self, other):
        return FloatEndo(self.ring, self.rank, self.ring._add(self.a, -other.a))

    def __neg__(self):
        return FloatEndo(self.ring, self.rank, -self.a)

    def scale(self, c):
        return FloatEndo(self.ring, self.rank, self.a * complex(c))

    def mul_scalar(self, s):
        return self @ FloatEndo.scalar(self.ring, self.rank, s)

    def raw_product(self, other):
        return self.ring._cauchy(self.a, other.a, np.matmul)

    def _from_raw(self, raw):
        return FloatEndo(self.ring, self.rank, raw)

    def __matmul__(self, other):
        return FloatEndo(self.ring, self.rank, self.raw_product(other))

    def _grid_view(self):
        return self.a.reshape(self.a.shape[:2] + self.ring.shape + (self.rank, self.rank))

    def deriv(self, j):
        d = self.ring._deriv(self._grid_view(), j, lead=2, trail=2)
        return FloatEndo(self.ring, self.rank, d.reshape(self.a.shape))

    def t_deriv(self):
        nt = self.a.shape[1]
        if nt == 1:
            return FloatEndo(self.ring, self.rank, np.zeros_like(self.a))
        w = np.arange(1, nt).reshape(1, nt - 1, 1, 1, 1)
        return FloatEndo(self.ring, self.rank, self.a[:, 1:] * w)

    def t_integral(self):
        nt = self.a.shape[1]
        out = np.zeros((self.a.shape[0], nt + 1) + self.a.shape[2:], dtype=complex)
        out[:, 1:] = self.a * (1.0 / np.arange(1, nt + 1)).reshape(1, nt, 1, 1, 1)
        return FloatEndo(self.ring, self.rank, out)

    def t_eval(self, value):
        powers = float(value) ** np.arange(self.a.shape[1])
        v = np.tensordot(self.a, powers, axes=([1], [0]))
        return FloatEndo(self.ring, self.rank, v[:, None])

    def eps_coeff(self, m):
        out = np.zeros_like(self.a)
        if m < self.a.shape[0]:
            out[0] = self.a[m]
        return FloatEndo(self.ring, self.rank, out)

    def conj_t(self):
        return FloatEndo(self.ring, self.rank, np.conj(np.swapaxes(self.a, -1, -2)))

    def transpose(self):
        return FloatEndo(self.ring, self.rank, np.swapaxes(self.a, -1, -2).copy())

    def trace(self):
        t = np.trace(self.a, axis1=-2, axis2=-1)
        return FloatScalar(self.ring, t.reshape(t.shape[:2] + self.ring.shape))

    def is_zero(self, tol=None):
        tol = self.ring.tol if tol is None else tol
        return float(np.max(np.abs(self.a), initial=0.0)) <= tol

    def __eq__(self, other):
        if not isinstance(other, FloatEndo):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def is_scalar(self):
        d = np.einsum("...ii->...i", self.a)
        off = self.a - d[..., None] * np.eye(self.rank)
        return float(np.max(np.abs(off), initial=0.0)) <= self.ring.tol and np.allclose(
            d, d[..., :1], atol=self.ring.tol
        )

    def __repr__(self):
        return f"FloatEndo(rank={self.rank}, shape={self.a.shape})"


class FloatAccumulator:
    def __init__(self, ring, rank):
        self.ring = ring
        self.rank = rank
        self.acc: dict = {}

    def _put(self, key, arr):
        cur = self.acc.get(key)
        self.acc[key] = arr if cur is None else self.ring._add(cur, arr)

    def add_raw(self, key, raw, coeff, imag):
        c = complex(0, float(coeff)) if imag else float(coeff)
        self._put(key, raw * c)

    def add(self, key, endo, coeff=1):
        self._put(key, endo.a * complex(coeff))

    def finish(self):
        out = {}
        for key, arr in self.acc.items():
            m = FloatEndo(self.ring, self.rank, arr)
            if not m.is_zero():
                out[key] = m
        return out


def endo_class(ring):
    return ExactEndo if ring.exact else FloatEndo


def accumulator(ring, rank):
    return ExactAccumulator(ring, rank) if ring.exact else FloatAccumulator(ring, rank)


Endo = ExactEndo | FloatEndo
