"""Flattening homotopy, Heisenberg transport and the trace functional.

The path scales both connections linearly to zero, ``Gamma(t) = (1-t) Gamma``
and ``Gamma^E(t) = (1-t) Gamma^E``; with a constant Gram form every point
of the path is admissible.  ``t`` is a variable of the scalar ring, so
``r(t)``, ``H(t)`` and ``a(t)`` are exact polynomials in ``t`` and the
Heisenberg equation is solved by Picard iteration with exact integration.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .coefficients import Gauss, TorusIntegral
from .core import FedosovContext, flat_context
from .endo import accumulator
from .weyl import WeylElement, ih_bracket

log = logging.getLogger(__name__)


class HomotopyPath:
    """Linear homotopy from ``(Gamma, Gamma^E)`` to the flat connection.

    ``target`` is the total degree through which ``M`` is returned.  The
    degree-``m`` symbol of ``M(A)`` needs ``H`` and ``r`` one degree higher,
    so the space's order must exceed ``target`` (default: one less).
    """

    def __init__(self, ctx: FedosovContext, target: int | None = None):
        bundle = ctx.bundle
        if bundle is not None and not bundle.gram.is_constant:
            raise ValueError("the linear homotopy needs a constant Gram form")
        sp = ctx.space
        ring = sp.ring
        self.start = ctx
        self.space = sp
        s = ring.one() - ring.t()
        symp = ctx.symp.scaled(s) if ctx.symp is not None else None
        moving_bundle = bundle.scaled(s) if bundle is not None else None
        self.moving = FedosovContext(sp, symp, moving_bundle, bundle_sign=ctx.bundle_sign)
        if target is None:
            target = ctx.target if ctx.target < sp.order else sp.order - 1
        self.target = target
        self.end = flat_context(sp, bundle, target=target)
        if target >= sp.order and not ctx.flat:
            raise ValueError("flattening target must be below the working order")
        self._H = None

    # t-dependent objects --------------------------------------------------
    def r_of_t(self) -> WeylElement:
        return self.moving.r

    def gamma_dot(self) -> WeylElement:
        """``d/dt (Gamma~(t) + r(t))``."""
        return (self.moving.gamma_tilde + self.moving.r).t_deriv()

    def hamiltonian_seed(self) -> WeylElement:
        """``i h Gammadot^E_j y^j - (1/6) Gammadot_{ijk} y^i y^j y^k``."""
        sp = self.space
        d = sp.dim
        acc = accumulator(sp.ring, sp.rank)
        symp = self.moving.symp
        if symp is not None:
            for key in itertools.combinations_with_replacement(range(d), 3):
                g = symp.gamma[key[0]][key[1]][key[2]].t_deriv()
                if g.is_zero():
                    continue
                alpha = [0] * d
                for i in key:
                    alpha[i] += 1
                # number of index orderings hitting this monomial
                mult = factorial(3)
                for a in alpha:
                    mult //= factorial(a)
                acc.add((0, tuple(alpha), 0), sp.scalar_endo(g), Fraction(-mult, 6))
        bundle = self.moving.bundle
        if bundle is not None:
            for j, G in enumerate(bundle.conn):
                Gd = G.t_deriv()
                if Gd.is_zero():
                    continue
                alpha = [0] * d
                alpha[j] = 1
                acc.add((1, tuple(alpha), 0), Gd, Gauss(0, 1))
        return WeylElement(sp, acc.finish())

    def hamiltonian(self) -> WeylElement:
        """``H(t) = Q_t(seed)``; equals ``-Q_t delta^{-1} gammadot``."""
        if self._H is None:
            self._H = self.moving.quantize(self.hamiltonian_seed())
        return self._H

    # transport ------------------------------------------------------------
    def transport(self, a0: WeylElement, t_end=1, upto: int | None = None,
                  symbol_top: bool = False) -> WeylElement:
        """Solve ``da/dt + (i/h)[H, a] = 0`` with ``a(0) = a0``; return ``a(t_end)``.

        The degree-``m`` part of ``(i/h)[H, a]`` involves only parts of ``a``
        below ``m`` (``H`` starts in degree 3), so one sweep over degrees is
        the whole Picard iteration.  ``upto`` stops after that degree and
        ``symbol_top`` keeps only the y-free part of the last one.
        """
        H = self.hamiltonian()
        top = self.space.order if upto is None else upto
        sol = self.space.zero()
        for m in range(top + 1):
            comp = a0.homogeneous(m)
            if m >= 1 and not H.is_zero():
                only = symbol_top and m == top
                if only:
                    comp = comp.symbol()
                comp = comp - ih_bracket(H, sol, degree=m, symbol_only=only).t_integral()
            sol = sol + comp
        return sol if t_end is None else sol.t_eval(t_end)

    def flatten(self, A: WeylElement) -> WeylElement:
        """``M(A) = Q_1^{-1}(T(Q_0(A)))`` through the target degree.

        ``T(Q_0 A)`` is flat for the trivial connection, where ``Q_1^{-1}``
        is the symbol map.
        """
        if self.start.flat:
            return A.truncated(self.target)
        return self.flatten_q(self.start.quantize(A, upto=self.target))

    def flatten_q(self, qa: WeylElement) -> WeylElement:
        """``M`` applied to an already quantized section."""
        n = self.target
        b = self.transport(qa.truncated(n), upto=n, symbol_top=True)
        return b.symbol().truncated(n)

    def flatten_full(self, A: WeylElement) -> WeylElement:
        """Same map with the full ``Q_1^{-1} = id - delta^{-1} d`` (no shortcuts)."""
        b = self.transport(self.start.quantize(A))
        return self.end.dequantize(b).truncated(self.target)


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------


@dataclass
class TraceSeries:
    """``sum_p h^p (2 pi)^d c_p``; each ``c_p`` is a constant scalar (possibly an eps-series)."""

    dim: int
    coeffs: dict = field(default_factory=dict)

    def conj(self) -> "TraceSeries":
        return TraceSeries(self.dim, {p: c.conj() for p, c in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, TraceSeries) or other.dim != self.dim:
            return NotImplemented
        keys = set(self.coeffs) | set(other.coeffs)
        for p in keys:
            a, b = self.coeffs.get(p), other.coeffs.get(p)
            if a is None:
                if not b.is_zero():
                    return False
            elif b is None:
                if not a.is_zero():
                    return False
            elif not a == b:
                return False
        return True

    def __sub__(self, other):
        keys = set(self.coeffs) | set(other.coeffs)
        out = {}
        for p in keys:
            a, b = self.coeffs.get(p), other.coeffs.get(p)
            out[p] = a - b if (a is not None and b is not None) else (a if b is None else -b)
        return TraceSeries(self.dim, out)

    def table(self) -> dict:
        """``{(p, eps power): Gauss}`` of nonzero coefficients (volume factor omitted)."""
        out = {}
        for p, c in sorted(self.coeffs.items()):
            for (k, tp, ep), v in c.terms().items():
                cur = out.get((p, ep))
                out[(p, ep)] = v if cur is None else cur + v
        return {k: v for k, v in out.items() if v}

    def integral(self, p: int) -> TorusIntegral:
        return TorusIntegral(self.dim, self.coeffs[p].value())

    def witness(self):
        t = self.table()
        if not t:
            return None
        k = min(t)
        return k, t[k]


def trace_flat(A: WeylElement) -> TraceSeries:
    """``int Tr A omega^n / n!`` per power of ``h`` (normalisation 1)."""
    coeffs = A.h_coeffs()
    return TraceSeries(A.space.dim, {p: v.trace().integrate() for p, v in sorted(coeffs.items())})


def trace_star(path: HomotopyPath | FedosovContext, A: WeylElement) -> TraceSeries:
    """``tr_*(A) = trace_flat(M(A))``."""
    if isinstance(path, FedosovContext):
        if not path.flat:
            path = HomotopyPath(path)
        else:
            return trace_flat(A)
    return trace_flat(path.flatten(A))
