"""The graded algebra W (x) Lambda with End(E)-valued coefficients.

An element is a finite sum ``sum h^p a_{alpha,S}(x) y^alpha dx^S`` stored as
``{(p, alpha, S): Endo}`` where ``alpha`` is an exponent tuple for the fibre
variables ``y^1..y^d`` and ``S`` a bitmask of form indices (the wedge
``dx^{s_1} ^ ... ^ dx^{s_m}`` with ``s_1 < ... < s_m``).

Total degree is ``2p + |alpha|``; every term above the space's truncation
order ``N`` is dropped on construction.  The fibrewise Moyal product is

    a o b = sum_k (1/k!) (-i h / 2)^k omega^{i1 j1} ... omega^{ik jk}
            (d^k_y a)_{i1..ik} (d^k_y b)_{j1..jk},

with matrix multiplication of the coefficients and wedge product of forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

from .coefficients import Gauss
from .endo import accumulator, endo_class
from .geometry import ChartGeometry, GramForm, adjoint


# ---------------------------------------------------------------------------
# combinatorial tables
# ---------------------------------------------------------------------------


def mask_indices(mask: int) -> tuple:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@lru_cache(maxsize=None)
def wedge_sign(S: int, T: int) -> int:
    """Sign of ``dx^S ^ dx^T`` relative to the sorted wedge of ``S | T`` (0 if overlapping)."""
    if S & T:
        return 0
    inversions = 0
    for t in mask_indices(T):
        inversions += popcount(S >> (t + 1))
    return -1 if inversions % 2 else 1


# (-i/2)^k / k! as (rational, imaginary?)
def _moyal_prefactor(k: int) -> tuple[Fraction, bool]:
    mag = Fraction(1, 2**k * factorial(k))
    return [(mag, False), (-mag, True), (-mag, False), (mag, True)][k % 4]


@lru_cache(maxsize=None)
def moyal_table(alpha: tuple, beta: tuple, pairs: tuple) -> tuple:
    """``y^alpha o y^beta = sum h^k c y^gamma`` as ``((k, gamma, c, imag), ...)``."""
    out = []
    current = {(alpha, beta): Fraction(1)}
    k = 0
    while current:
        fac, imag = _moyal_prefactor(k)
        collected: dict = {}
        for (a, b), c in current.items():
            gamma = tuple(x + y for x, y in zip(a, b))
            collected[gamma] = collected.get(gamma, 0) + c
        for gamma, c in sorted(collected.items()):
            if c:
                out.append((k, gamma, c * fac, imag))
        nxt: dict = {}
        for (a, b), c in current.items():
            for i, j, w in pairs:
                if a[i] and b[j]:
                    na = a[:i] + (a[i] - 1,) + a[i + 1:]
                    nb = b[:j] + (b[j] - 1,) + b[j + 1:]
                    key = (na, nb)
                    nxt[key] = nxt.get(key, 0) + c * w * a[i] * b[j]
        current = {key: c for key, c in nxt.items() if c}
        k += 1
    return tuple(out)


# ---------------------------------------------------------------------------
# spaces and elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeylSpace:
    geo: ChartGeometry
    ring: object
    rank: int
    order: int

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("truncation order must be >= 0")
        if self.ring.dim != self.geo.dim:
            raise ValueError("coefficient ring and chart have different dimensions")

    @property
    def dim(self) -> int:
        return self.geo.dim

    @property
    def endo(self):
        return endo_class(self.ring)

    def compatible(self, other: "WeylSpace") -> bool:
        return (
            self is other
            or (self.geo == other.geo and self.ring is other.ring and self.rank == other.rank and self.order == other.order)
        )

    def zero(self) -> "WeylElement":
        return WeylElement(self, {})

    def one(self) -> "WeylElement":
        return self.lift(self.endo.identity(self.ring, self.rank))

    def identity_endo(self):
        return self.endo.identity(self.ring, self.rank)

    def zero_endo(self):
        return self.endo.zero(self.ring, self.rank)

    def scalar_endo(self, s):
        return self.endo.scalar(self.ring, self.rank, s)

    def lift(self, A, p: int = 0) -> "WeylElement":
        """``h^p A`` with no ``y`` or ``dx``."""
        return self.term(A, p=p)

    def term(self, coeff, p: int = 0, alpha=None, forms=()) -> "WeylElement":
        """Single term ``h^p coeff y^alpha dx^{forms}`` (``forms`` in any order)."""
        alpha = tuple(alpha) if alpha is not None else (0,) * self.dim
        if len(alpha) != self.dim:
            raise ValueError("y-exponent has wrong length")
        if not hasattr(coeff, "rank"):
            coeff = self.scalar_endo(coeff)
        mask, sign = 0, 1
        for f in forms:
            bit = 1 << f
            if mask & bit:
                return self.zero()
            sign *= wedge_sign(mask, bit)
            mask |= bit
        if sign < 0:
            coeff = -coeff
        return WeylElement(self, {(p, alpha, mask): coeff})

    def y(self, i: int) -> "WeylElement":
        alpha = [0] * self.dim
        alpha[i] = 1
        return self.term(self.identity_endo(), alpha=alpha)

    def dx(self, i: int) -> "WeylElement":
        return self.term(self.identity_endo(), forms=(i,))

    def h(self) -> "WeylElement":
        return self.term(self.identity_endo(), p=1)


def key_degree(key) -> int:
    p, alpha, _ = key
    return 2 * p + sum(alpha)


class WeylElement:
    __slots__ = ("space", "terms", "_by_degree")

    def __init__(self, space: WeylSpace, terms: dict):
        N = space.order
        self.space = space
        self.terms = {k: v for k, v in terms.items() if key_degree(k) <= N and not v.is_zero()}
        self._by_degree = None

    # structure ------------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, WeylElement):
            raise TypeError("expected a WeylElement")
        if not self.space.compatible(other.space):
            raise ValueError("Weyl elements from different spaces (geometry/truncation mismatch)")

    def by_degree(self) -> dict:
        if self._by_degree is None:
            groups: dict = {}
            for k, v in self.terms.items():
                groups.setdefault(key_degree(k), []).append((k, v))
            self._by_degree = groups
        return self._by_degree

    def degrees(self) -> list:
        return sorted(self.by_degree())

    def min_degree(self):
        return min(self.by_degree(), default=None)

    def homogeneous(self, m: int) -> "WeylElement":
        return WeylElement(self.space, dict(self.by_degree().get(m, [])))

    def truncated(self, m: int) -> "WeylElement":
        return WeylElement(self.space, {k: v for k, v in self.terms.items() if key_degree(k) <= m})

    def form_degrees(self) -> set:
        return {popcount(k[2]) for k in self.terms}

    def form_part(self, r: int) -> "WeylElement":
        return WeylElement(self.space, {k: v for k, v in self.terms.items() if popcount(k[2]) == r})

    def form_degree(self) -> int:
        degs = self.form_degrees()
        if len(degs) > 1:
            raise ValueError(f"element has mixed form degrees {sorted(degs)}")
        return degs.pop() if degs else 0

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    # linear ops -----------------------------------------------------------
    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return WeylElement(self.space, out)

    def __sub__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] - v if k in out else -v
        return WeylElement(self.space, out)

    def __neg__(self):
        return WeylElement(self.space, {k: -v for k, v in self.terms.items()})

    def scale(self, c) -> "WeylElement":
        return WeylElement(self.space, {k: v.scale(c) for k, v in self.terms.items()})

    def mul_h(self, n: int = 1) -> "WeylElement":
        out = {}
        for (p, a, S), v in self.terms.items():
            if p + n < 0:
                raise ValueError("negative power of h")
            out[(p + n, a, S)] = v
        return WeylElement(self.space, out)

    def map_coeffs(self, f) -> "WeylElement":
        return WeylElement(self.space, {k: f(v) for k, v in self.terms.items()})

    def __mul__(self, other):
        """Fibrewise Moyal product ``self o other``."""
        return moyal(self, other)

    def __eq__(self, other):
        if not isinstance(other, WeylElement):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    # t-dependence ---------------------------------------------------------
    def t_deriv(self):
        return self.map_coeffs(lambda v: v.t_deriv())

    def t_integral(self):
        return self.map_coeffs(lambda v: v.t_integral())

    def t_eval(self, value):
        return self.map_coeffs(lambda v: v.t_eval(value))

    # symbols --------------------------------------------------------------
    def symbol(self) -> "WeylElement":
        """Part with no ``y`` and no ``dx`` (``a|_{y=0, dx=0}``)."""
        zero = (0,) * self.space.dim
        return WeylElement(self.space, {k: v for k, v in self.terms.items() if k[1] == zero and k[2] == 0})

    def h_coeffs(self) -> dict:
        """``{p: Endo}`` of a y- and dx-free element."""
        zero = (0,) * self.space.dim
        out = {}
        for (p, a, S), v in self.terms.items():
            if a != zero or S:
                raise ValueError("element depends on y or dx")
            out[p] = v
        return out

    def witness(self):
        """First nonzero term, for failure reports."""
        if not self.terms:
            return None
        key = min(self.terms, key=lambda k: (key_degree(k), k))
        return key, self.terms[key]

    def __repr__(self):
        if not self.terms:
            return "WeylElement(0)"
        parts = []
        for (p, a, S), v in sorted(self.terms.items(), key=lambda kv: (key_degree(kv[0]), kv[0])):
            parts.append(f"h^{p} y^{a} dx{mask_indices(S)}: {v!r}")
        return "WeylElement(\n  " + "\n  ".join(parts) + "\n)"


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------


def _degree_groups(a: WeylElement, b: WeylElement, degree, N):
    ga, gb = a.by_degree(), b.by_degree()
    for da, ta in ga.items():
        for db, tb in gb.items():
            s = da + db
            if degree is not None:
                if s != degree:
                    continue
            elif s > N:
                continue
            yield ta, tb


def _moyal_into(acc, a, b, sign: int, degree, N, pairs, h_shift=0, times_i=False):
    """Accumulate ``sign * a o b`` (optionally times ``i``, with ``h^{h_shift}``)."""
    for ta, tb in _degree_groups(a, b, degree, N):
        for (pa, alpha, S), A in ta:
            for (pb, beta, T), B in tb:
                ws = wedge_sign(S, T)
                if not ws:
                    continue
                raw = A.raw_product(B)
                mask = S | T
                base = pa + pb + h_shift
                for k, gamma, c, imag in moyal_table(alpha, beta, pairs):
                    c = c * ws * sign
                    if times_i:
                        if imag:
                            c, imag = -c, False
                        else:
                            imag = True
                    acc.add_raw((base + k, gamma, mask), raw, c, imag)


def moyal(a: WeylElement, b: WeylElement, degree: int | None = None) -> WeylElement:
    """Moyal product; ``degree`` restricts the output to one total degree."""
    a._check(b)
    sp = a.space
    acc = accumulator(sp.ring, sp.rank)
    _moyal_into(acc, a, b, 1, degree, sp.order, tuple(sp.geo.pairs()))
    return WeylElement(sp, acc.finish())


def _split_forms(a: WeylElement) -> dict:
    out: dict = {}
    for k, v in a.terms.items():
        out.setdefault(popcount(k[2]), {})[k] = v
    return {r: WeylElement(a.space, t) for r, t in out.items()}


def _commutator_into(acc, a, b, degree, N, pairs, h_shift=0, times_i=False, symbol_only=False):
    """Accumulate ``[a, b]`` term by term (graded sign from the form degrees).

    When either coefficient is a multiple of the identity the two matrix
    products agree and only one is formed.  ``symbol_only`` keeps just the
    fully contracted (y-free) output of 0-forms.
    """
    zero = (0,) * a.space.dim
    for ta, tb in _degree_groups(a, b, degree, N):
        for (pa, alpha, S), A in ta:
            for (pb, beta, T), B in tb:
                if symbol_only and (S or T or sum(alpha) != sum(beta)):
                    continue
                ws = wedge_sign(S, T)
                if not ws:
                    continue
                r, s_ = popcount(S), popcount(T)
                # b o a carries wedge_sign(T, S) = (-1)^{rs} wedge_sign(S, T)
                back = -1 if (r * s_) % 2 == 0 else 1
                back *= wedge_sign(T, S)
                ab = A.raw_product(B)
                ba = ab if (A.is_scalar() or B.is_scalar()) else B.raw_product(A)
                mask = S | T
                base = pa + pb + h_shift
                terms: dict = {}
                for k, gamma, c, imag in moyal_table(alpha, beta, pairs):
                    terms[(k, gamma, imag)] = [c * ws, 0]
                for k, gamma, c, imag in moyal_table(beta, alpha, pairs):
                    slot = terms.setdefault((k, gamma, imag), [0, 0])
                    slot[1] += c * back
                for (k, gamma, imag), (c1, c2) in terms.items():
                    if symbol_only and gamma != zero:
                        continue
                    key = (base + k, gamma, mask)
                    if ba is ab:
                        c1, c2 = c1 + c2, 0
                    for raw, c in ((ab, c1), (ba, c2)):
                        if not c:
                            continue
                        im = imag
                        if times_i:
                            if im:
                                c, im = -c, False
                            else:
                                im = True
                        acc.add_raw(key, raw, c, im)


def moyal_symbol(a: WeylElement, b: WeylElement) -> WeylElement:
    """``(a o b)|_{y=0, dx=0}`` for 0-forms, keeping only fully contracted terms."""
    a._check(b)
    sp = a.space
    acc = accumulator(sp.ring, sp.rank)
    pairs = tuple(sp.geo.pairs())
    zero = (0,) * sp.dim
    N = sp.order
    for (pa, alpha, S), A in a.terms.items():
        if S:
            continue
        for (pb, beta, T), B in b.terms.items():
            if T or sum(alpha) != sum(beta) or 2 * (pa + pb) + 2 * sum(alpha) > N:
                continue
            raw = None
            for k, gamma, c, imag in moyal_table(alpha, beta, pairs):
                if gamma != zero:
                    continue
                if raw is None:
                    raw = A.raw_product(B)
                acc.add_raw((pa + pb + k, zero, 0), raw, c, imag)
    return WeylElement(sp, acc.finish())


def ih_product(a: WeylElement, b: WeylElement, degree: int | None = None) -> WeylElement:
    """``(i/h) a o b``; ``degree`` selects the output total degree."""
    a._check(b)
    sp = a.space
    acc = accumulator(sp.ring, sp.rank)
    in_degree = None if degree is None else degree + 2
    _moyal_into(acc, a, b, 1, in_degree, sp.order + 2, tuple(sp.geo.pairs()), h_shift=-1, times_i=True)
    return _no_negative_h(sp, acc.finish())


def _no_negative_h(sp, terms):
    bad = [k for k in terms if k[0] < 0]
    if bad:
        raise ArithmeticError(f"(i/h) applied to a term without h at {bad[0]}")
    return WeylElement(sp, terms)


def graded_commutator(a: WeylElement, b: WeylElement, degree: int | None = None) -> WeylElement:
    """``[a, b] = a o b - (-1)^{rs} b o a`` for pure form degrees ``r``, ``s``."""
    a._check(b)
    if len(a.form_degrees()) > 1 or len(b.form_degrees()) > 1:
        raise ValueError("graded_commutator needs pure form degrees; split the inputs first")
    sp = a.space
    acc = accumulator(sp.ring, sp.rank)
    _commutator_into(acc, a, b, degree, sp.order, tuple(sp.geo.pairs()))
    return WeylElement(sp, acc.finish())


def ih_bracket(a: WeylElement, b: WeylElement, degree: int | None = None,
               symbol_only: bool = False) -> WeylElement:
    """``(i/h) [a, b]`` (extended bilinearly over mixed form degrees).

    ``degree`` selects the output total degree.  A surviving ``h^{-1}``
    term means the inputs leave the algebra (non-central classical
    commutator) and raises ``ArithmeticError``.
    """
    a._check(b)
    sp = a.space
    acc = accumulator(sp.ring, sp.rank)
    in_degree = None if degree is None else degree + 2
    # the result drops one power of h; keep one extra order internally
    _commutator_into(acc, a, b, in_degree, sp.order + 2, tuple(sp.geo.pairs()), h_shift=-1, times_i=True,
                     symbol_only=symbol_only)
    return _no_negative_h(sp, acc.finish())


# ---------------------------------------------------------------------------
# delta, delta^{-1}, d
# ---------------------------------------------------------------------------


def _insert_form(S: int, k: int):
    """``dx^k ^ dx^S`` as (sign, mask); sign 0 when ``k`` already in ``S``."""
    bit = 1 << k
    if S & bit:
        return 0, S
    return (-1 if popcount(S & (bit - 1)) % 2 else 1), S | bit


def delta(a: WeylElement) -> WeylElement:
    """``delta a = dx^k ^ d a / d y^k``."""
    sp = a.space
    acc = accumulator(sp.ring, sp.rank)
    for (p, alpha, S), A in a.terms.items():
        for k in range(sp.dim):
            if not alpha[k]:
                continue
            sign, mask = _insert_form(S, k)
            if not sign:
                continue
            na = alpha[:k] + (alpha[k] - 1,) + alpha[k + 1:]
            acc.add((p, na, mask), A, sign * alpha[k])
    return WeylElement(sp, acc.finish())


def delta_inv(a: WeylElement) -> WeylElement:
    """``delta^{-1} a_{km} = (1/(k+m)) y^s iota(d/dx^s) a_{km}``; zero on ``(0,0)``."""
    sp = a.space
    acc = accumulator(sp.ring, sp.rank)
    for (p, alpha, S), A in a.terms.items():
        if not S:
            continue
        idx = mask_indices(S)
        total = sum(alpha) + len(idx)
        for pos, s in enumerate(idx):
            na = alpha[:s] + (alpha[s] + 1,) + alpha[s + 1:]
            c = Fraction(-1 if pos % 2 else 1, total)
            acc.add((p, na, S & ~(1 << s)), A, c)
    return WeylElement(sp, acc.finish())


def exterior_d(a: WeylElement) -> WeylElement:
    """``d a = dx^k ^ d a / d x^k`` acting on the coefficient functions."""
    sp = a.space
    acc = accumulator(sp.ring, sp.rank)
    for (p, alpha, S), A in a.terms.items():
        for k in range(sp.dim):
            sign, mask = _insert_form(S, k)
            if not sign:
                continue
            dA = A.deriv(k)
            if not dA.is_zero():
                acc.add((p, alpha, mask), dA, sign)
    return WeylElement(sp, acc.finish())


# ---------------------------------------------------------------------------
# connection and involution
# ---------------------------------------------------------------------------


def connection_element(space: WeylSpace, symp, bundle) -> WeylElement:
    """``(1/2) Gamma_{ijk} y^i y^j dx^k - i h Gamma^E_k dx^k``."""
    d = space.dim
    acc = accumulator(space.ring, space.rank)
    if symp is not None:
        for k in range(d):
            for i in range(d):
                for j in range(i, d):
                    g = symp.gamma[i][j][k]
                    if g.is_zero():
                        continue
                    alpha = [0] * d
                    alpha[i] += 1
                    alpha[j] += 1
                    # (1/2)(Gamma_ijk + Gamma_jik) for i != j, (1/2) Gamma_iik on the diagonal
                    c = Fraction(1) if i != j else Fraction(1, 2)
                    acc.add((0, tuple(alpha), 1 << k), space.scalar_endo(g), c)
    if bundle is not None:
        for k, G in enumerate(bundle.conn):
            if not G.is_zero():
                acc.add((1, (0,) * d, 1 << k), G, Gauss(0, -1))
    return WeylElement(space, acc.finish())


def covariant_deriv(a: WeylElement, gamma_tilde: WeylElement, degree: int | None = None) -> WeylElement:
    """``da + (i/h)[Gamma~, a]``; ``degree`` restricts to one output degree."""
    da = exterior_d(a if degree is None else a.homogeneous(degree))
    return da + ih_bracket(gamma_tilde, a, degree=degree)


def weyl_adjoint(a: WeylElement, gram, flip_forms: bool = False) -> WeylElement:
    """Coefficientwise Hermitian adjoint; ``h``, ``y`` and ``dx`` are real.

    ``flip_forms`` implements the deliberately wrong involution that also
    negates odd forms (negative control only).
    """
    if not isinstance(gram, GramForm):
        gram = GramForm(gram)
    out = {}
    for k, v in a.terms.items():
        w = adjoint(v, gram)
        if flip_forms and popcount(k[2]) % 2:
            w = -w
        out[k] = w
    return WeylElement(a.space, out)
