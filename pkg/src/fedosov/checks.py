"""Invariant suites shared by the command line and the acceptance tests.

Every routine returns :class:`CheckResult` objects.  A failed check always
carries a witness: the first offending coefficient with its multi-index.
Random data come from a ``random.Random`` passed in by the caller, so a
seed fixes every run.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from . import classical
from .coefficients import ExactRing, FloatRing, Gauss
from .core import FedosovContext, curvature_element, flat_context
from .data import random_bundle, random_form_element, random_section, random_symplectic, random_trig
from .endo import endo_class
from .geometry import ChartGeometry
from .gravity import (
    MetricField,
    TetradField,
    LorentzConnection,
    action,
    background_eta,
    build_eh_endos,
    build_palatini_endos,
    eh_setup,
    mat_mul,
    palatini_setup,
    reality_report,
    self_adjointness,
)
from .trace import HomotopyPath, trace_flat
from .weyl import WeylElement, WeylSpace, delta, ih_product, mask_indices, weyl_adjoint


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: dict | None = None
    seconds: float = 0.0
    count: int = 0
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = f" witness={self.witness}" if self.witness else ""
        return f"{verdict} {self.name} (n={self.count}, {self.seconds:.1f}s){extra}"


# ---------------------------------------------------------------------------
# formatting of coefficients and witnesses
# ---------------------------------------------------------------------------


def fmt_value(v) -> str:
    """``"p/q"`` (+ ``"i"`` part) for exact values, decimal text for floats."""
    if isinstance(v, Gauss):
        return str(v)
    z = complex(v)
    if not z.imag:
        return repr(z.real)
    return f"{z.real!r}{'-' if z.imag < 0 else '+'}{abs(z.imag)!r}i"


def scalar_witness(s) -> dict | None:
    terms = s.terms()
    if not terms:
        return None
    key = min(terms)
    k, tp, ep = key
    out = {"mode": list(k), "value": fmt_value(terms[key])}
    if tp:
        out["t"] = tp
    if ep:
        out["eps"] = ep
    return out


def endo_witness(A) -> dict | None:
    for i, j in itertools.product(range(A.rank), repeat=2):
        w = scalar_witness(A.entry(i, j))
        if w is not None:
            return {"entry": [i, j], **w}
    return None


def element_witness(a: WeylElement) -> dict | None:
    """Lowest-degree nonzero term of ``a``."""
    w = a.witness()
    if w is None:
        return None
    (p, alpha, S), v = w
    out = {"h": p, "y": list(alpha), "dx": list(mask_indices(S))}
    inner = endo_witness(v)
    if inner is None:
        # below the float tolerance after all; report the magnitude only
        inner = {"value": "below tolerance"}
    out.update(inner)
    return out


def table_witness(diff: dict) -> dict | None:
    for key in sorted(diff):
        if diff[key]:
            return {"h": key[0], "eps": key[1], "value": fmt_value(diff[key])}
    return None


def _timed(name, fn, *args, **kw) -> CheckResult:
    t0 = time.perf_counter()
    res = fn(*args, **kw)
    res.name = name
    res.seconds = time.perf_counter() - t0
    return res


def _first_failure(pairs):
    """``pairs`` yields ``(description, difference element)``; stop at the first nonzero."""
    n = 0
    for desc, diff in pairs:
        n += 1
        if not diff.is_zero():
            w = element_witness(diff) or {}
            w["case"] = desc
            return n, w
    return n, None


# ---------------------------------------------------------------------------
# Weyl algebra and Fedosov core
# ---------------------------------------------------------------------------


def moyal_involution(space: WeylSpace, gram, rng: random.Random, n_pairs: int = 50,
                     flip_forms: bool = False) -> CheckResult:
    """``(a o b)^+ = (-1)^{rs} b^+ o a^+`` on random forms of degree ``r, s``."""
    def cases():
        for n in range(n_pairs):
            r, s = rng.randint(0, space.dim), rng.randint(0, space.dim)
            a = random_form_element(space, rng, max_degree=3, form_degree=r)
            b = random_form_element(space, rng, max_degree=3, form_degree=s)
            lhs = weyl_adjoint(a * b, gram, flip_forms)
            rhs = (weyl_adjoint(b, gram, flip_forms) * weyl_adjoint(a, gram, flip_forms)).scale((-1) ** (r * s))
            yield f"pair {n} (r={r}, s={s})", lhs - rhs

    t0 = time.perf_counter()
    n, w = _first_failure(cases())
    return CheckResult("moyal-involution", w is None, w, time.perf_counter() - t0, n)


def core_identities(ctx: FedosovContext, rng: random.Random, n_forms: int = 2, pool: int = 4,
                    n_triples: int = 25, flip_forms: bool = False, slack: int = 3) -> list[CheckResult]:
    """Fedosov core identities, all compared through the working order ``N``.

    ``delta r`` is determined through degree ``N - 1`` by ``r`` itself.
    ``(D a)_m`` needs ``r`` up to degree ``m + 2`` and ``(D^2 a)_m`` reads
    ``(D a)_{m+1}`` through ``delta``, so both identities are evaluated in a
    context with ``slack = 3`` extra working degrees built from the same
    connections.
    """
    sp = ctx.space
    N = sp.order
    gram = ctx.bundle.gram if ctx.bundle is not None else sp.identity_endo()
    hi = FedosovContext(WeylSpace(sp.geo, sp.ring, sp.rank, N + slack), ctx.symp, ctx.bundle,
                        bundle_sign=ctx.bundle_sign)
    out = []

    def r_real():
        r = ctx.r
        diff = weyl_adjoint(r, gram, flip_forms) - r
        return CheckResult("", diff.is_zero(), element_witness(diff), count=1)

    def r_equation():
        r = ctx.r
        # reference curvature always carries the correct sign of the bundle term
        R = curvature_element(sp, ctx.symp, ctx.bundle)
        diff = (delta(r) - R - ctx.nabla(r) - ih_product(r, r)).truncated(N - 1)
        return CheckResult("", diff.is_zero(), element_witness(diff), count=1)

    def d_squared():
        def cases():
            for n in range(n_forms):
                a = random_form_element(hi.space, rng, max_degree=2, form_degree=n % sp.dim)
                yield f"form {n}", hi.D(hi.D(a, upto=N + 1), upto=N)
        n, w = _first_failure(cases())
        return CheckResult("", w is None, w, count=n)

    sections = [random_section(sp, rng, h_terms=2) for _ in range(pool)]
    qs = [ctx.quantize(A) for A in sections]

    def dq_flat():
        def cases():
            for i in range(n_forms):
                A = WeylElement(hi.space, sections[i].terms)
                yield f"section {i}", hi.D(hi.quantize(A, upto=N + 1), upto=N)
        n, w = _first_failure(cases())
        return CheckResult("", w is None, w, count=n)

    def inverse():
        n, w = _first_failure((f"section {i}", ctx.dequantize(q) - A)
                              for i, (q, A) in enumerate(zip(qs, sections)))
        return CheckResult("", w is None, w, count=n)

    def associativity():
        # pair products are computed once and reused across triples
        pair: dict = {}

        def prod(i, j):
            if (i, j) not in pair:
                pair[(i, j)] = ctx.quantize(ctx.star_q(qs[i], qs[j]))
            return pair[(i, j)]

        triples = list(itertools.product(range(pool), repeat=3))
        rng.shuffle(triples)
        triples = triples[:n_triples]

        def cases():
            for i, j, k in triples:
                left = ctx.star_q(prod(i, j), qs[k])
                right = ctx.star_q(qs[i], prod(j, k))
                yield f"triple {(i, j, k)}", left - right

        n, w = _first_failure(cases())
        return CheckResult("", w is None, w, count=n)

    out.append(_timed("r-selfadjoint", r_real))
    out.append(_timed("r-equation", r_equation))
    out.append(_timed("D-squared", d_squared))
    out.append(_timed("DQ-flat", dq_flat))
    out.append(_timed("Qinv-Q", inverse))
    out.append(_timed("associativity", associativity))
    return out


# ---------------------------------------------------------------------------
# flat closed form and first-order bracket
# ---------------------------------------------------------------------------


def plane_wave_oracle(ring, geo: ChartGeometry, k, l, h_max: int) -> dict:
    """``{p: scalar}`` for ``e^{i(k+l)x} exp((ih/2) omega^{ij} k_i l_j)`` through ``h^{h_max}``."""
    w = Fraction(0)
    for i, j, v in geo.pairs():
        w += v * k[i] * l[j]
    kl = [a + b for a, b in zip(k, l)]
    out = {}
    for p in range(h_max + 1):
        c = Gauss(0, Fraction(1, 2)) ** p * Gauss(w ** p) / factorial(p)
        if c:
            out[p] = ring.mode(kl, c)
    return out


def flat_closed_form(ring, geo: ChartGeometry, h_max: int = 3, kmax: int = 2) -> CheckResult:
    """Plane-wave star products on the flat chart for all ``|k_i|, |l_i| <= kmax``."""
    sp = WeylSpace(geo, ring, 1, 2 * h_max)
    ctx = flat_context(sp)
    box = list(itertools.product(range(-kmax, kmax + 1), repeat=geo.dim))
    waves = {k: sp.lift(sp.scalar_endo(ring.mode(k))) for k in box}
    qs = {k: ctx.quantize(A) for k, A in waves.items()}

    def cases():
        for k, l in itertools.product(box, repeat=2):
            got = ctx.star_q(qs[k], qs[l])
            want = sp.zero()
            for p, c in plane_wave_oracle(ring, geo, k, l, h_max).items():
                want = want + sp.lift(sp.scalar_endo(c), p)
            yield f"k={k}, l={l}", got - want

    n, w = _first_failure(cases())
    return CheckResult("flat-closed-form", w is None, w, count=n)


def poisson(f, g, geo: ChartGeometry):
    """``omega^{ij} d_i f d_j g``."""
    out = f.ring.zero()
    for i, j, v in geo.pairs():
        out = out + f.deriv(i) * g.deriv(j) * f.ring.const(v)
    return out


def first_order_bracket(ctx: FedosovContext, rng: random.Random, n_pairs: int = 20) -> CheckResult:
    """Find the single sign ``s`` with ``f*g - g*f = s i h {f, g} + O(h^2)``."""
    sp = ctx.space
    ring, geo = sp.ring, sp.geo
    zero = (0,) * sp.dim
    signs = set()
    witness = None
    n = 0
    for n in range(1, n_pairs + 1):
        f = random_trig(ring, rng, 1, n_modes=2)
        g = random_trig(ring, rng, 1, n_modes=2)
        F, G = sp.lift(sp.scalar_endo(f)), sp.lift(sp.scalar_endo(g))
        comm = ctx.star(F, G) - ctx.star(G, F)
        h0 = comm.terms.get((0, zero, 0))
        h1 = comm.terms.get((1, zero, 0))
        pb = poisson(f, g, geo) * ring.const(Gauss(0, 1))
        h1 = h1.entry(0, 0) if h1 is not None else ring.zero()
        if h0 is not None and not h0.is_zero():
            witness = {"case": f"pair {n}", "h": 0, **(endo_witness(h0) or {})}
            break
        if pb.is_zero():
            continue
        matched = [s for s in (1, -1) if (h1 - pb * ring.const(s)).is_zero()]
        if not matched:
            witness = {"case": f"pair {n}", "h": 1, **(scalar_witness(h1 - pb) or {})}
            break
        signs.add(matched[0])
    ok = witness is None and len(signs) == 1
    if witness is None and len(signs) != 1:
        witness = {"signs": sorted(signs)}
    return CheckResult("first-order-bracket", ok, witness, count=n,
                       detail={"s": signs.pop() if len(signs) == 1 else None})


# ---------------------------------------------------------------------------
# flattening and trace
# ---------------------------------------------------------------------------


class FlatteningPool:
    """Random sections with cached stars and flattenings.

    Criteria on ``M`` and ``tr_*`` share the expensive pieces: ``M`` of each
    element, of its adjoint and of the ordered pair products.
    """

    def __init__(self, ctx: FedosovContext, path: HomotopyPath, rng: random.Random, size: int = 5):
        self.ctx, self.path = ctx, path
        sp = ctx.space
        self.gram = ctx.bundle.gram if ctx.bundle is not None else sp.identity_endo()
        self.elements = [random_section(sp, rng, h_terms=2) for _ in range(size)]
        self.pairs = [(i, j) for i in range(size) for j in range(size) if i != j]
        self._q, self._m, self._prod = {}, {}, {}

    def q(self, i):
        if i not in self._q:
            self._q[i] = self.ctx.quantize(self.elements[i], upto=self.ctx.target)
        return self._q[i]

    def product(self, i, j) -> WeylElement:
        if (i, j) not in self._prod:
            self._prod[(i, j)] = self.ctx.star_q(self.q(i), self.q(j))
        return self._prod[(i, j)]

    def flat(self, key) -> WeylElement:
        """``key`` is ``i``, ``("adj", i)``, ``(i, j)`` or ``("adj", i, j)``."""
        if key not in self._m:
            if isinstance(key, int):
                A = self.elements[key]
            elif key[0] == "adj":
                base = self.elements[key[1]] if len(key) == 2 else self.product(*key[1:])
                A = weyl_adjoint(base, self.gram)
            else:
                A = self.product(*key)
            self._m[key] = self.path.flatten(A)
        return self._m[key]


def flattening_checks(pool: FlatteningPool) -> list[CheckResult]:
    """``M(A * B) = M(A) *_T M(B)`` and ``M(A^+) = M(A)^+``."""
    path = pool.path
    n_target = path.target

    def hom():
        def cases():
            for i, j in pool.pairs:
                lhs = pool.flat((i, j))
                rhs = path.end.star(pool.flat(i), pool.flat(j))
                yield f"pair {(i, j)}", (lhs - rhs).truncated(n_target)
        n, w = _first_failure(cases())
        return CheckResult("", w is None, w, count=n)

    def inv():
        def cases():
            for i in range(len(pool.elements)):
                yield f"element {i}", pool.flat(("adj", i)) - weyl_adjoint(pool.flat(i), pool.gram)
            for i, j in pool.pairs:
                yield f"product {(i, j)}", pool.flat(("adj", i, j)) - weyl_adjoint(pool.flat((i, j)), pool.gram)
        n, w = _first_failure(cases())
        return CheckResult("", w is None, w, count=n)

    return [_timed("M-homomorphism", hom), _timed("M-involution", inv)]


def _trace_failure(a, b, desc):
    diff = (a - b).table()
    w = table_witness(diff)
    if w is not None:
        w["case"] = desc
    return w


def trace_checks(pool: FlatteningPool) -> list[CheckResult]:
    """Cyclicity and reality of ``tr_*`` on the pair products of the pool."""
    def cyc():
        n = 0
        for i, j in pool.pairs:
            if i > j:
                continue
            n += 1
            w = _trace_failure(trace_flat(pool.flat((i, j))), trace_flat(pool.flat((j, i))), f"pair {(i, j)}")
            if w:
                return CheckResult("", False, w, count=n)
        return CheckResult("", True, count=n)

    def real():
        n = 0
        for key in list(range(len(pool.elements))) + pool.pairs:
            n += 1
            adj = ("adj", key) if isinstance(key, int) else ("adj", *key)
            w = _trace_failure(trace_flat(pool.flat(adj)), trace_flat(pool.flat(key)).conj(), f"element {key}")
            if w:
                return CheckResult("", False, w, count=n)
        return CheckResult("", True, count=n)

    return [_timed("trace-cyclicity", cyc), _timed("trace-reality", real)]


def trace_tables(pool: FlatteningPool, key=(0, 1)) -> dict:
    """``tr_*(A^+)`` and ``conj tr_*(A)`` coefficient tables for one pool element."""
    adj = ("adj", key) if isinstance(key, int) else ("adj", *key)
    return {
        "element": list(key) if isinstance(key, tuple) else key,
        "tr(A+)": trace_flat(pool.flat(adj)).table(),
        "conj tr(A)": trace_flat(pool.flat(key)).conj().table(),
    }


# ---------------------------------------------------------------------------
# gravity actions
# ---------------------------------------------------------------------------


def gravity_inputs(kind: str, ring, rng: random.Random, K: int = 1, lorentzian: bool | None = None):
    """Seeded perturbation data: ``(setup, endos, oracle)``; ``oracle`` gives the classical density."""
    dim = ring.dim
    if kind == "P":
        eta = background_eta(dim, True if lorentzian is None else lorentzian)
        tet = TetradField.random(ring, rng, eta, K=K)
        con = LorentzConnection.random(ring, rng, eta, dim, K=K)
        endos = build_palatini_endos(tet, con)
        return palatini_setup(tet, con), endos, classical.palatini_density(tet.theta, eta, con.gamma)
    eta = background_eta(dim, bool(lorentzian))
    met = MetricField.random(ring, rng, eta, K=K)
    endos = build_eh_endos(met)
    return eh_setup(met, kind), endos, classical.eh_density(met.g)


def _density(kind, endos, ring):
    E = endo_class(ring)
    if kind == "P":
        return E.from_rows(ring, mat_mul(endos.RLv, endos.T)).trace()
    return E.from_rows(ring, endos.R1v if kind.startswith("EH1") else endos.R2v).trace()


def action_checks(kind: str, ring, geo: ChartGeometry, N: int, rng: random.Random, K: int = 1,
                  curved_background: bool = True, lorentzian: bool | None = None,
                  float_tol: float = 1e-9) -> tuple[list[CheckResult], dict]:
    """Self-adjointness, reality and classical limit for one action kind.

    Returns the checks and the reality report (coefficient table included).
    """
    t0 = time.perf_counter()
    setup, endos, oracle_density = gravity_inputs(kind, ring, rng, K=K, lorentzian=lorentzian)
    symp = random_symplectic(geo, ring, rng, K=K) if curved_background else None
    out = []

    sa = self_adjointness(endos, "P" if kind == "P" else "EH")
    bad = [k for k, v in sa.items() if not v]
    out.append(CheckResult(f"{kind}:self-adjointness", not bad, {"relation": bad[0]} if bad else None,
                           time.perf_counter() - t0, len(sa)))

    t1 = time.perf_counter()
    dens = _density(kind, endos, ring) - oracle_density
    out.append(CheckResult(f"{kind}:classical-density", dens.is_zero(), scalar_witness(dens),
                           time.perf_counter() - t1, 1))

    t1 = time.perf_counter()
    series = action(setup, geo, N, symp=symp)
    oracle = {ep: v for (k, tp, ep), v in oracle_density.integrate().terms().items()}
    rep = reality_report(series, oracle=oracle, tol=None if ring.exact else float_tol)
    elapsed = time.perf_counter() - t1
    out.append(CheckResult(f"{kind}:reality", rep["real"], rep["imaginary_witness"], elapsed, len(series.table)))
    out.append(CheckResult(f"{kind}:classical-limit", rep["oracle_match"], rep["oracle_witness"], 0.0,
                           len(rep["h0"])))
    return out, rep


# ---------------------------------------------------------------------------
# data for the standard scenarios
# ---------------------------------------------------------------------------


def make_ring(dim: int, backend: str = "exact", eps_order: int | None = None, bandwidth: int = 6,
              tol: float = 1e-9):
    if backend == "exact":
        return ExactRing(dim, eps_order=eps_order)
    return FloatRing(dim, bandwidth=bandwidth, eps_order=eps_order, tol=tol)


def curved_context(ring, rank: int, order: int, rng: random.Random, K: int = 1, target: int | None = None,
                   bundle_sign: int = 1) -> FedosovContext:
    """Random symplectic connection and compatible bundle connection on ``T^dim``."""
    geo = ChartGeometry(ring.dim // 2)
    sp = WeylSpace(geo, ring, rank, order)
    symp = random_symplectic(geo, ring, rng, K=K)
    bundle = random_bundle(ring, rng, geo.dim, rank, K=K)
    return FedosovContext(sp, symp, bundle, bundle_sign=bundle_sign, target=target)


def torus4_smoke(kind: str = "P", N: int = 2, seed: int = 0, eps_order: int = 2, K: int = 1,
                 tol: float = 1e-9) -> tuple[list[CheckResult], dict]:
    """Float run on ``T^4`` (``SO(3,1)`` fibre for Palatini) with a flat symplectic background.

    The ``eps^m`` part of every field has bandwidth ``<= m K``, so a grid
    cap of ``eps_order * K`` represents the whole pipeline without aliasing.
    """
    ring = FloatRing(4, bandwidth=eps_order * K, eps_order=eps_order, tol=tol)
    return action_checks(kind, ring, ChartGeometry(2), N, random.Random(seed), K=K,
                         curved_background=False, float_tol=tol)
