"""Scalar layer: Gaussian rationals and finite Fourier series on the torus chart.

A coefficient function lives in the commutative ring

    Q(i)[e^{+-i x^1}, ..., e^{+-i x^d}][t][eps] / (eps^{E+1})

where ``t`` is the homotopy parameter used when flattening connections and
``eps`` the metric perturbation parameter.  Both are carried as extra
polynomial variables so that every higher layer (matrices, Weyl elements)
only ever sees one scalar type.

Two backends share the same interface:

* :class:`ExactRing` stores the real and imaginary parts as FLINT
  multivariate rational polynomials.  Frequency ``k_j`` is stored as the
  exponent ``k_j + offset`` of ``z_j``; products are shifted back by one
  offset.  All identities hold with equality.
* :class:`FloatRing` samples each Fourier coefficient on a uniform grid of
  ``2B+1`` points per direction (physical space), so products are pointwise
  and derivatives go through the FFT.  Results are exact up to rounding as
  long as every product stays inside the bandwidth cap ``B``.
"""

from __future__ import annotations

import itertools
import logging
import math
from fractions import Fraction
from typing import Mapping, Sequence

import flint
import numpy as np

log = logging.getLogger(__name__)

TWO_PI_SYMBOL = "(2pi)"


class Gauss:
    """Exact Gaussian rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, x) -> "Gauss":
        if isinstance(x, Gauss):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, flint.fmpq):
            return cls(Fraction(int(x.p), int(x.q)))
        return cls(x)

    def __add__(self, other):
        o = Gauss.coerce(other)
        return Gauss(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = Gauss.coerce(other)
        return Gauss(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return Gauss.coerce(other) - self

    def __neg__(self):
        return Gauss(-self.re, -self.im)

    def __mul__(self, other):
        o = Gauss.coerce(other)
        return Gauss(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * Gauss.coerce(other).inverse()

    def __rtruediv__(self, other):
        return Gauss.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        out = Gauss(1)
        base = self if n >= 0 else self.inverse()
        for _ in range(abs(n)):
            out = out * base
        return out

    def inverse(self) -> "Gauss":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("Gaussian rational 0 has no inverse")
        return Gauss(self.re / n, -self.im / n)

    def conjugate(self) -> "Gauss":
        return Gauss(self.re, -self.im)

    def __eq__(self, other):
        try:
            o = Gauss.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"Gauss({self})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        im = f"{abs(self.im)}i"
        if not self.re:
            return ("-" if self.im < 0 else "") + im
        return f"{self.re}{'-' if self.im < 0 else '+'}{im}"

    @classmethod
    def parse(cls, text: str) -> "Gauss":
        """Inverse of ``str``: ``"3/4"``, ``"-1/2i"``, ``"3/4-1/2i"``."""
        text = text.strip()
        if not text.endswith("i"):
            return cls(Fraction(text))
        body = text[:-1]
        # split at the last sign that is not a leading sign or part of p/q
        for pos in range(len(body) - 1, 0, -1):
            if body[pos] in "+-" and body[pos - 1] not in "/":
                return cls(Fraction(body[:pos]), Fraction(body[pos:]))
        return cls(0, Fraction(body))


I = Gauss(0, 1)


def _is_const(x) -> bool:
    return isinstance(x, (int, Fraction, Gauss, complex, float, flint.fmpq))


def _fmpq(x: Fraction) -> flint.fmpq:
    return flint.fmpq(x.numerator, x.denominator)


def _exact_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    p, r = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if p * p == q.numerator and r * r == q.denominator:
        return Fraction(p, r)
    return None


# ---------------------------------------------------------------------------
# exact backend
# ---------------------------------------------------------------------------


class ExactRing:
    """Exact coefficient ring on the torus ``T^dim``.

    ``eps_order`` is the truncation order ``E`` of the eps-series (``None``
    when no eps dependence is used).  ``offset`` bounds the largest negative
    frequency that can be represented; it is far beyond anything the
    truncated recursions produce.
    """

    exact = True

    def __init__(self, dim: int, eps_order: int | None = None, offset: int = 256):
        if dim < 1:
            raise ValueError("torus dimension must be positive")
        if eps_order is not None and eps_order < 0:
            raise ValueError("eps truncation order must be >= 0")
        self.dim = dim
        self.eps_order = eps_order
        self.offset = offset
        names = tuple(f"z{j + 1}" for j in range(dim)) + ("t", "e")
        self.ctx = flint.fmpq_mpoly_ctx.get(names, "lex")
        gens = self.ctx.gens()
        self._tvar = dim
        self._evar = dim + 1
        shift = self.ctx.from_dict({(offset,) * dim + (0, 0): 1})
        self._shift = shift
        self._one = shift
        self._zero = self.ctx.from_dict({})
        self._t = shift * gens[dim]
        self._e = shift * gens[dim + 1]
        self._eps_mod = gens[dim + 1] ** (eps_order + 1) if eps_order is not None else None

    def __repr__(self):
        return f"ExactRing(dim={self.dim}, eps_order={self.eps_order})"

    # polynomial plumbing --------------------------------------------------
    def _norm(self, p):
        """Shift a raw product (exponent offset 2*offset) back to one offset."""
        p = p // self._shift
        if self._eps_mod is not None:
            p = p % self._eps_mod
        return p

    def _poly_mode(self, k: Sequence[int], coeff: Fraction, tpow=0, epow=0):
        if len(k) != self.dim:
            raise ValueError(f"frequency vector {tuple(k)} has wrong dimension (expected {self.dim})")
        exps = tuple(int(kj) + self.offset for kj in k) + (tpow, epow)
        if min(exps[: self.dim]) < 0:
            raise OverflowError("frequency below representable offset")
        return self.ctx.from_dict({exps: _fmpq(coeff)})

    # constructors ---------------------------------------------------------
    def zero(self) -> "ExactScalar":
        return ExactScalar(self, self._zero, self._zero)

    def one(self) -> "ExactScalar":
        return ExactScalar(self, self._one, self._zero)

    def const(self, c) -> "ExactScalar":
        g = Gauss.coerce(c)
        return ExactScalar(self, self._one * _fmpq(g.re), self._one * _fmpq(g.im))

    def mode(self, k: Sequence[int], c=1) -> "ExactScalar":
        """``c * exp(i k.x)``."""
        g = Gauss.coerce(c)
        return ExactScalar(self, self._poly_mode(k, g.re), self._poly_mode(k, g.im))

    def from_modes(self, modes: Mapping[tuple, object]) -> "ExactScalar":
        """Build ``sum_k c_k e^{i k.x}``; keys may be ``k`` or ``(k, tpow, epow)``."""
        re, im = {}, {}
        for key, c in modes.items():
            if len(key) == 3 and isinstance(key[0], tuple):
                k, tp, ep = key
            else:
                k, tp, ep = key, 0, 0
            if len(k) != self.dim:
                raise ValueError(f"frequency vector {k} has wrong dimension")
            exps = tuple(int(kj) + self.offset for kj in k) + (tp, ep)
            g = Gauss.coerce(c)
            if g.re:
                re[exps] = re.get(exps, 0) + g.re
            if g.im:
                im[exps] = im.get(exps, 0) + g.im
        to = lambda d: self.ctx.from_dict({e: _fmpq(v) for e, v in d.items() if v})
        return self._trunc(ExactScalar(self, to(re), to(im)))

    def cos(self, k: Sequence[int], c=1) -> "ExactScalar":
        """``c cos(k.x)`` (real when ``c`` is real)."""
        half = Gauss.coerce(c) * Fraction(1, 2)
        return self.mode(k, half) + self.mode([-x for x in k], half)

    def sin(self, k: Sequence[int], c=1) -> "ExactScalar":
        half = Gauss.coerce(c) * Gauss(0, Fraction(-1, 2))
        return self.mode(k, half) - self.mode([-x for x in k], half)

    def t(self) -> "ExactScalar":
        return ExactScalar(self, self._t, self._zero)

    def eps(self) -> "ExactScalar":
        if self.eps_order is None:
            raise ValueError("ring has no eps variable")
        return self._trunc(ExactScalar(self, self._e, self._zero))

    def _trunc(self, s):
        if self._eps_mod is not None:
            s.re = s.re % self._eps_mod
            s.im = s.im % self._eps_mod
        return s

    def lift(self, x) -> "ExactScalar":
        if isinstance(x, ExactScalar):
            return x
        return self.const(x)

    def to_value(self, c):
        return Gauss.coerce(c)


class ExactScalar:
    """Element of :class:`ExactRing` (the FourierScalar of the build)."""

    __slots__ = ("ring", "re", "im")

    def __init__(self, ring: ExactRing, re, im):
        self.ring = ring
        self.re = re
        self.im = im

    # arithmetic -----------------------------------------------------------
    def _other(self, other):
        if isinstance(other, ExactScalar):
            if other.ring is not self.ring:
                raise ValueError("scalars from different rings (dimension mismatch?)")
            return other
        if _is_const(other):
            return self.ring.const(other)
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return ExactScalar(self.ring, self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return ExactScalar(self.ring, self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ExactScalar(self.ring, -self.re, -self.im)

    def scale(self, c) -> "ExactScalar":
        g = Gauss.coerce(c)
        re = _fmpq(g.re)
        if not g.im:
            return ExactScalar(self.ring, self.re * re, self.im * re)
        im = _fmpq(g.im)
        return ExactScalar(self.ring, self.re * re - self.im * im, self.re * im + self.im * re)

    def __mul__(self, other):
        if _is_const(other):
            return self.scale(other)
        o = self._other(other)
        if o is NotImplemented:
            return o
        ring = self.ring
        ar, ai, br, bi = self.re, self.im, o.re, o.im
        if ai.is_zero():
            if bi.is_zero():
                return ExactScalar(ring, ring._norm(ar * br), ring._zero)
            return ExactScalar(ring, ring._norm(ar * br), ring._norm(ar * bi))
        if bi.is_zero():
            return ExactScalar(ring, ring._norm(ar * br), ring._norm(ai * br))
        return ExactScalar(ring, ring._norm(ar * br - ai * bi), ring._norm(ar * bi + ai * br))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if _is_const(other):
            return self.scale(Gauss.coerce(other).inverse())
        return self * eps_invert(other)

    def __pow__(self, n: int):
        if n < 0:
            return eps_invert(self) ** (-n)
        out = self.ring.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return (self.re - o.re).is_zero() and (self.im - o.im).is_zero()

    __hash__ = None

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()

    # calculus on the torus ------------------------------------------------
    def conj(self) -> "ExactScalar":
        """Complex conjugate function: ``c_k -> conj(c_{-k})``."""
        ring = self.ring
        d, two = ring.dim, 2 * ring.offset

        def flip(p):
            return ring.ctx.from_dict(
                {tuple(two - e for e in exps[:d]) + exps[d:]: c for exps, c in p.to_dict().items()}
            )

        return ExactScalar(ring, flip(self.re), -flip(self.im))

    def deriv(self, j: int) -> "ExactScalar":
        """Partial derivative along ``x^{j+1}`` (0-based ``j``): ``c_k -> i k_j c_k``."""
        ring = self.ring
        if not 0 <= j < ring.dim:
            raise IndexError(f"coordinate index {j} out of range for dimension {ring.dim}")
        z = ring.ctx.gens()[j]
        o = ring.offset
        kre = z * self.re.derivative(j) - o * self.re
        kim = z * self.im.derivative(j) - o * self.im
        return ExactScalar(ring, -kim, kre)

    def integrate(self) -> "ExactScalar":
        """Integral over ``[0, 2pi)^d`` of the (t, eps)-dependent function.

        The result has no Fourier dependence; the ``(2 pi)^d`` volume factor
        is *not* a rational number, so it is returned separately by
        :func:`four_integrate`.  This method returns the constant mode ``c_0``.
        """
        ring = self.ring
        d, o = ring.dim, ring.offset

        def const_part(p):
            keep = {exps: c for exps, c in p.to_dict().items() if all(e == o for e in exps[:d])}
            return ring.ctx.from_dict(keep)

        return ExactScalar(ring, const_part(self.re), const_part(self.im))

    # homotopy parameter ---------------------------------------------------
    def t_deriv(self) -> "ExactScalar":
        v = self.ring._tvar
        return ExactScalar(self.ring, self.re.derivative(v), self.im.derivative(v))

    def t_integral(self) -> "ExactScalar":
        """Antiderivative in ``t`` vanishing at ``t = 0``."""
        v = self.ring._tvar
        return ExactScalar(self.ring, self.re.integral(v), self.im.integral(v))

    def t_eval(self, value) -> "ExactScalar":
        name = self.ring.ctx.names()[self.ring._tvar]
        val = _fmpq(Fraction(value))
        return ExactScalar(self.ring, self.re.subs({name: val}), self.im.subs({name: val}))

    def t_degree(self) -> int:
        v = self.ring._tvar
        return max(self.re.degrees()[v] if not self.re.is_zero() else 0,
                   self.im.degrees()[v] if not self.im.is_zero() else 0)

    # eps series -----------------------------------------------------------
    def eps_coeff(self, m: int) -> "ExactScalar":
        """Coefficient of ``eps^m`` (as a scalar without eps dependence)."""
        ring = self.ring
        ev = ring._evar

        def pick(p):
            return ring.ctx.from_dict(
                {exps[:ev] + (0,): c for exps, c in p.to_dict().items() if exps[ev] == m}
            )

        return ExactScalar(ring, pick(self.re), pick(self.im))

    def eps_degree(self) -> int:
        v = self.ring._evar
        degs = [p.degrees()[v] for p in (self.re, self.im) if not p.is_zero()]
        return max(degs) if degs else 0

    # inspection -----------------------------------------------------------
    def terms(self) -> dict:
        """``{(k, tpow, epow): Gauss}`` for every nonzero coefficient."""
        ring = self.ring
        d, o = ring.dim, ring.offset
        out: dict = {}
        for part, unit in ((self.re, 1), (self.im, 0)):
            for exps, c in part.to_dict().items():
                key = (tuple(int(e) - o for e in exps[:d]), int(exps[d]), int(exps[d + 1]))
                q = Fraction(int(c.p), int(c.q))
                g = Gauss(q) if unit else Gauss(0, q)
                out[key] = out.get(key, Gauss()) + g
        return {k: v for k, v in out.items() if v}

    def modes(self) -> dict:
        """Fourier coefficients ``{k: Gauss}``; requires no t/eps dependence."""
        out = {}
        for (k, tp, ep), c in self.terms().items():
            if tp or ep:
                raise ValueError("scalar depends on t or eps; use terms()")
            out[k] = c
        return out

    def bandwidth(self) -> int:
        keys = self.terms()
        return max((max(abs(x) for x in k) for k, _, _ in keys), default=0)

    def is_constant(self) -> bool:
        """No Fourier, t or eps dependence."""
        return all(not any(k) and not tp and not ep for k, tp, ep in self.terms())

    def value(self) -> Gauss:
        """The constant value of a constant scalar."""
        terms = self.terms()
        if not all(not any(k) and not tp and not ep for k, tp, ep in terms):
            raise ValueError("scalar is not constant")
        return sum(terms.values(), Gauss())

    def is_real(self) -> bool:
        """``c_{-k} = conj(c_k)`` for every mode (t and eps treated as real)."""
        return self == self.conj()

    def __repr__(self):
        terms = self.terms()
        if not terms:
            return "0"
        parts = []
        for (k, tp, ep), c in sorted(terms.items()):
            mono = []
            if any(k):
                mono.append(f"e^(i{k})")
            if tp:
                mono.append(f"t^{tp}")
            if ep:
                mono.append(f"eps^{ep}")
            parts.append(f"({c})" + ("*" + "*".join(mono) if mono else ""))
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# floating-point backend
# ---------------------------------------------------------------------------


class FloatRing:
    """Complex floating point coefficient ring sampled on a grid.

    ``bandwidth`` caps the Fourier frequencies that are represented without
    aliasing; a product whose true bandwidth exceeds it folds back onto the
    grid.  The gravity pipeline stays inside the cap by construction (the
    ``eps^m`` coefficient of every field has bandwidth ``<= m K``).
    """

    exact = False

    def __init__(self, dim: int, bandwidth: int, eps_order: int | None = None, tol: float = 1e-9):
        if tol <= 0:
            raise ValueError("float tolerance must be positive")
        if bandwidth < 0:
            raise ValueError("bandwidth must be >= 0")
        self.dim = dim
        self.bandwidth = bandwidth
        self.eps_order = eps_order
        self.tol = tol
        self.grid = 2 * bandwidth + 1
        self.ne = (eps_order + 1) if eps_order is not None else 1
        self.shape = (self.grid,) * dim
        axes = np.meshgrid(*[2 * np.pi * np.arange(self.grid) / self.grid] * dim, indexing="ij")
        self._x = axes
        freqs = np.fft.fftfreq(self.grid, d=1.0 / self.grid)
        self._k = np.meshgrid(*[freqs] * dim, indexing="ij")
        log.info("float backend: bandwidth cap %d (grid %d^%d)", bandwidth, self.grid, dim)

    def __repr__(self):
        return f"FloatRing(dim={self.dim}, bandwidth={self.bandwidth}, eps_order={self.eps_order})"

    def _blank(self, nt=1):
        return np.zeros((self.ne, nt) + self.shape, dtype=complex)

    def zero(self):
        return FloatScalar(self, self._blank())

    def one(self):
        return self.const(1)

    def const(self, c):
        a = self._blank()
        a[0, 0] = complex(c)
        return FloatScalar(self, a)

    def mode(self, k, c=1):
        if len(k) != self.dim:
            raise ValueError(f"frequency vector {tuple(k)} has wrong dimension (expected {self.dim})")
        if max((abs(x) for x in k), default=0) > self.bandwidth:
            log.warning("mode %s exceeds float bandwidth cap %d", tuple(k), self.bandwidth)
        a = self._blank()
        phase = sum(kj * xj for kj, xj in zip(k, self._x))
        a[0, 0] = complex(c) * np.exp(1j * phase)
        return FloatScalar(self, a)

    def from_modes(self, modes):
        out = self.zero()
        for key, c in modes.items():
            if len(key) == 3 and isinstance(key[0], tuple):
                k, tp, ep = key
            else:
                k, tp, ep = key, 0, 0
            s = self.mode(k, c)
            if tp:
                s = s * (self.t() ** tp)
            if ep:
                s = s * (self.eps() ** ep)
            out = out + s
        return out

    def cos(self, k, c=1):
        return self.mode(k, complex(c) / 2) + self.mode([-x for x in k], complex(c) / 2)

    def sin(self, k, c=1):
        return self.mode(k, complex(c) * -0.5j) - self.mode([-x for x in k], complex(c) * -0.5j)

    def t(self):
        a = self._blank(2)
        a[0, 1] = 1.0
        return FloatScalar(self, a)

    def eps(self):
        if self.eps_order is None:
            raise ValueError("ring has no eps variable")
        a = self._blank()
        if self.ne > 1:
            a[1, 0] = 1.0
        return FloatScalar(self, a)

    def lift(self, x):
        if isinstance(x, FloatScalar):
            return x
        return self.const(x)

    def to_value(self, c):
        return complex(c)

    # shared array kernels (leading axes: eps, t) ---------------------------
    def _pad_t(self, a, nt):
        if a.shape[1] == nt:
            return a
        pad = [(0, 0)] * a.ndim
        pad[1] = (0, nt - a.shape[1])
        return np.pad(a, pad)

    def _add(self, a, b):
        nt = max(a.shape[1], b.shape[1])
        return self._pad_t(a, nt) + self._pad_t(b, nt)

    def _cauchy(self, a, b, op):
        ne = self.ne
        nt = a.shape[1] + b.shape[1] - 1
        out = None
        for i in range(ne):
            for j in range(ne - i):
                for ta in range(a.shape[1]):
                    for tb in range(b.shape[1]):
                        term = op(a[i, ta], b[j, tb])
                        if out is None:
                            out = np.zeros((ne, nt) + term.shape, dtype=complex)
                        out[i + j, ta + tb] += term
        return out

    def _deriv(self, a, j, lead=2, trail=0):
        axes = tuple(range(lead, lead + self.dim))
        spec = np.fft.fftn(a, axes=axes)
        k = self._k[j].reshape(self._k[j].shape + (1,) * trail)
        return np.fft.ifftn(1j * k * spec, axes=axes)


class FloatScalar:
    """Element of :class:`FloatRing`; payload shape ``(ne, nt, grid...)``."""

    __slots__ = ("ring", "a")

    def __init__(self, ring: FloatRing, a):
        self.ring = ring
        self.a = a

    def _other(self, other):
        if isinstance(other, FloatScalar):
            return other
        if _is_const(other):
            return self.ring.const(complex(Gauss.coerce(other)) if isinstance(other, (Gauss, Fraction, flint.fmpq)) else other)
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FloatScalar(self.ring, self.ring._add(self.a, o.a))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FloatScalar(self.ring, self.ring._add(self.a, -o.a))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return FloatScalar(self.ring, -self.a)

    def scale(self, c):
        return FloatScalar(self.ring, self.a * complex(c))

    def __mul__(self, other):
        if _is_const(other):
            return self.scale(other)
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FloatScalar(self.ring, self.ring._cauchy(self.a, o.a, np.multiply))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if _is_const(other):
            return self.scale(1 / complex(other))
        return self * eps_invert(other)

    def __pow__(self, n):
        if n < 0:
            return eps_invert(self) ** (-n)
        out = self.ring.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return (self - o).is_zero()

    __hash__ = None

    def is_zero(self, tol=None):
        tol = self.ring.tol if tol is None else tol
        return not self.a.size or float(np.max(np.abs(self.a))) <= tol

    def conj(self):
        return FloatScalar(self.ring, np.conj(self.a))

    def deriv(self, j):
        if not 0 <= j < self.ring.dim:
            raise IndexError(f"coordinate index {j} out of range for dimension {self.ring.dim}")
        return FloatScalar(self.ring, self.ring._deriv(self.a, j))

    def integrate(self):
        mean = self.a.mean(axis=tuple(range(2, 2 + self.ring.dim)))
        out = np.broadcast_to(mean.reshape(mean.shape + (1,) * self.ring.dim), self.a.shape).copy()
        return FloatScalar(self.ring, out)

    def t_deriv(self):
        nt = self.a.shape[1]
        if nt == 1:
            return FloatScalar(self.ring, np.zeros_like(self.a))
        w = np.arange(1, nt).reshape((1, nt - 1) + (1,) * self.ring.dim)
        return FloatScalar(self.ring, self.a[:, 1:] * w)

    def t_integral(self):
        nt = self.a.shape[1]
        w = (1.0 / np.arange(1, nt + 1)).reshape((1, nt) + (1,) * self.ring.dim)
        out = np.zeros((self.a.shape[0], nt + 1) + self.a.shape[2:], dtype=complex)
        out[:, 1:] = self.a * w
        return FloatScalar(self.ring, out)

    def t_eval(self, value):
        powers = float(value) ** np.arange(self.a.shape[1])
        v = np.tensordot(self.a, powers, axes=([1], [0]))
        return FloatScalar(self.ring, v[:, None])

    def t_degree(self):
        mags = np.abs(self.a).reshape(self.a.shape[0], self.a.shape[1], -1).max(axis=(0, 2))
        nz = np.nonzero(mags > self.ring.tol)[0]
        return int(nz[-1]) if nz.size else 0

    def eps_coeff(self, m):
        out = np.zeros_like(self.a)
        if m < self.a.shape[0]:
            out[0] = self.a[m]
        return FloatScalar(self.ring, out)

    def eps_degree(self):
        mags = np.abs(self.a).reshape(self.a.shape[0], -1).max(axis=1)
        nz = np.nonzero(mags > self.ring.tol)[0]
        return int(nz[-1]) if nz.size else 0

    def terms(self):
        out = {}
        spec = np.fft.fftn(self.a, axes=tuple(range(2, 2 + self.ring.dim))) / self.ring.grid ** self.ring.dim
        kgrid = [k.astype(int) for k in self.ring._k]
        for ep in range(spec.shape[0]):
            for tp in range(spec.shape[1]):
                block = spec[ep, tp]
                for idx in zip(*np.nonzero(np.abs(block) > self.ring.tol)):
                    k = tuple(int(kg[idx]) for kg in kgrid)
                    out[(k, tp, ep)] = complex(block[idx])
        return out

    def modes(self):
        out = {}
        for (k, tp, ep), c in self.terms().items():
            if tp or ep:
                raise ValueError("scalar depends on t or eps; use terms()")
            out[k] = c
        return out

    def bandwidth(self):
        return max((max(abs(x) for x in k) for k, _, _ in self.terms()), default=0)

    def is_constant(self):
        return all(not any(k) and not tp and not ep for k, tp, ep in self.terms())

    def value(self):
        if not self.is_constant():
            raise ValueError("scalar is not constant")
        return complex(self.a[0, 0].flat[0])

    def is_real(self):
        return self == self.conj()

    def __repr__(self):
        return f"FloatScalar({self.terms()})"


Scalar = ExactScalar | FloatScalar


# ---------------------------------------------------------------------------
# named operations
# ---------------------------------------------------------------------------


def four_mul(a, b):
    """Product of two Fourier series (frequency-space convolution)."""
    if a.ring is not b.ring:
        raise ValueError("dimension mismatch: scalars live on different torus charts")
    return a * b


def four_derive(a, i: int):
    """Partial derivative along coordinate ``i`` (1-based, as in ``x^i``)."""
    if not 1 <= i <= a.ring.dim:
        raise IndexError(f"coordinate index {i} out of range 1..{a.ring.dim}")
    return a.deriv(i - 1)


class TorusIntegral:
    """Value ``(2 pi)^d * c`` kept symbolic in the transcendental factor."""

    __slots__ = ("dim", "c")

    def __init__(self, dim: int, c):
        self.dim = dim
        self.c = c

    def __eq__(self, other):
        if isinstance(other, TorusIntegral):
            return self.dim == other.dim and self.c == other.c
        return NotImplemented

    def __complex__(self):
        return complex(self.c) * (2 * math.pi) ** self.dim

    def __repr__(self):
        return f"{TWO_PI_SYMBOL}^{self.dim} * ({self.c})"


def four_integrate(a) -> TorusIntegral:
    """Integral over the torus of a scalar without t/eps dependence."""
    return TorusIntegral(a.ring.dim, a.integrate().value())


# ---------------------------------------------------------------------------
# eps series
# ---------------------------------------------------------------------------


def _eps_order(ring) -> int:
    return ring.eps_order if ring.eps_order is not None else 0


def eps_invert(u):
    """Inverse of an eps-series whose order-0 coefficient is a nonzero constant."""
    ring = u.ring
    lead = u.eps_coeff(0)
    if not lead.is_constant() or lead.is_zero():
        raise ZeroDivisionError("order-0 coefficient is not an invertible constant")
    c = lead.value()
    inv_c = Gauss.coerce(c).inverse() if ring.exact else 1 / complex(c)
    w = (u - lead).scale(inv_c)  # O(eps)
    out = ring.one()
    term = ring.one()
    for _ in range(_eps_order(ring)):
        term = -(term * w)
        out = out + term
    return out.scale(inv_c)


_HALF_BINOM_CACHE: dict[int, Fraction] = {}


def _half_binom(m: int) -> Fraction:
    if m not in _HALF_BINOM_CACHE:
        v = Fraction(1)
        for j in range(m):
            v *= (Fraction(1, 2) - j) / (j + 1)
        _HALF_BINOM_CACHE[m] = v
    return _HALF_BINOM_CACHE[m]


def eps_sqrt(u):
    """Square root of an eps-series with a positive constant leading term."""
    ring = u.ring
    lead = u.eps_coeff(0)
    if not lead.is_constant():
        raise ValueError("order-0 coefficient must be constant")
    c = lead.value()
    if ring.exact:
        g = Gauss.coerce(c)
        root = _exact_sqrt(g.re) if not g.im and g.re > 0 else None
        if root is None:
            raise ValueError(
                f"leading coefficient {g} has no exact square root; normalize the background "
                "metric to |det| = 1 or use the float backend"
            )
        inv_c = g.inverse()
    else:
        cc = complex(c)
        if abs(cc.imag) > ring.tol or cc.real <= 0:
            raise ValueError(f"leading coefficient {cc} is not a positive real")
        root, inv_c = math.sqrt(cc.real), 1 / cc.real
    w = u.scale(inv_c) - 1
    out = ring.one()
    power = ring.one()
    for m in range(1, _eps_order(ring) + 1):
        power = power * w
        out = out + power.scale(_half_binom(m))
    return out.scale(root)


def eps_matrix_invert(mat: Sequence[Sequence]):
    """Inverse of a square matrix of eps-series with constant invertible order-0 part."""
    n = len(mat)
    ring = mat[0][0].ring
    lead = [[mat[i][j].eps_coeff(0) for j in range(n)] for i in range(n)]
    if not all(x.is_constant() for row in lead for x in row):
        raise ValueError("order-0 matrix must be constant")
    c = [[x.value() for x in row] for row in lead]
    cinv = const_matrix_inverse(c, exact=ring.exact)
    cinv_s = [[ring.const(x) for x in row] for row in cinv]
    w = [[mat[i][j] - lead[i][j] for j in range(n)] for i in range(n)]
    x = mat_mul(cinv_s, w)  # O(eps)
    out = identity_matrix(ring, n)
    term = identity_matrix(ring, n)
    for _ in range(_eps_order(ring)):
        term = [[-v for v in row] for row in mat_mul(term, x)]
        out = mat_add(out, term)
    return mat_mul(out, cinv_s)


# ---------------------------------------------------------------------------
# small dense matrix helpers over scalars / constants
# ---------------------------------------------------------------------------


def identity_matrix(ring, n):
    return [[ring.one() if i == j else ring.zero() for j in range(n)] for i in range(n)]


def mat_mul(a, b):
    n, m, p = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            acc = None
            for k in range(m):
                term = a[i][k] * b[k][j]
                acc = term if acc is None else acc + term
            row.append(acc)
        out.append(row)
    return out


def mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def transpose(a):
    return [list(col) for col in zip(*a)]


def const_matrix_inverse(c, exact=True):
    """Gauss-Jordan inverse of a constant matrix (Gaussian rationals or complex)."""
    n = len(c)
    if exact:
        m = [[Gauss.coerce(x) for x in row] + [Gauss(int(i == j)) for j in range(n)] for i, row in enumerate(c)]
    else:
        try:
            return np.linalg.inv(np.array(c, dtype=complex)).tolist()
        except np.linalg.LinAlgError as exc:
            raise ZeroDivisionError("matrix is singular") from exc
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        inv = m[col][col].inverse()
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def const_det(c):
    """Determinant of a small constant matrix by Laplace expansion."""
    n = len(c)
    if n == 1:
        return Gauss.coerce(c[0][0]) if not isinstance(c[0][0], complex) else c[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in c[1:]]
        total = total + (-1) ** j * c[0][j] * const_det(minor)
    return total


def det(mat):
    """Determinant of a small scalar matrix (Leibniz expansion)."""
    n = len(mat)
    ring = mat[0][0].ring
    total = ring.zero()
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        term = ring.one()
        for i in range(n):
            term = term * mat[i][perm[i]]
        total = total + (-term if inversions % 2 else term)
    return total


def random_trig(ring, rng, bandwidth: int, real: bool = True, max_num: int = 3,
                n_modes: int | None = None, complex_coeffs: bool = False):
    """Seeded trig polynomial with small integer numerators.

    ``n_modes`` limits how many frequency pairs are drawn (sparser data keep
    exact runs fast); ``real`` enforces ``c_{-k} = conj(c_k)``.
    """
    d = ring.dim
    box = list(itertools.product(range(-bandwidth, bandwidth + 1), repeat=d))
    half = [k for k in box if k > tuple(-x for x in k)]  # one representative of each +-k pair
    chosen = half if n_modes is None else [half[i] for i in sorted(rng.sample(range(len(half)), min(n_modes, len(half))))]

    def num():
        v = 0
        while v == 0:
            v = rng.randint(-max_num, max_num)
        return Fraction(v, rng.choice([1, 2]))

    modes: dict = {}
    zero = (0,) * d
    modes[zero] = Gauss(num()) if (real or not complex_coeffs) else Gauss(num(), num())
    for k in chosen:
        c = Gauss(num(), num()) if (real or complex_coeffs) else Gauss(num())
        modes[k] = c
        neg = tuple(-x for x in k)
        if real:
            modes[neg] = c.conjugate()
        else:
            modes[neg] = Gauss(num(), num()) if complex_coeffs else Gauss(num())
    if ring.exact:
        return ring.from_modes(modes)
    return ring.from_modes({k: complex(v) for k, v in modes.items()})
