"""Abelian connection, quantization map and the star product.

All recursions are solved one total degree at a time: the degree-``m`` part
of ``r`` (resp. ``Q(A)``) only needs the lower parts, so nothing is
recomputed as the iteration proceeds.
"""

from __future__ import annotations

import logging
from fractions import Fraction

from .coefficients import Gauss
from .endo import accumulator
from .weyl import (
    WeylElement,
    WeylSpace,
    connection_element,
    covariant_deriv,
    delta,
    delta_inv,
    ih_bracket,
    ih_product,
    moyal_symbol,
)
from .geometry import sympl_curvature

log = logging.getLogger(__name__)


def curvature_element(space: WeylSpace, symp, bundle, bundle_sign: int = 1) -> WeylElement:
    """``(1/4) R_{ijkl} y^i y^j dx^k dx^l - (i h / 2) R^E_{kl} dx^k dx^l``.

    ``bundle_sign = -1`` flips the ``R^E`` term (negative control).
    """
    d = space.dim
    acc = accumulator(space.ring, space.rank)
    if symp is not None and not symp.is_flat_data():
        R = sympl_curvature(symp, space.geo)
        for k in range(d):
            for l in range(k + 1, d):
                mask = (1 << k) | (1 << l)
                for i in range(d):
                    for j in range(i, d):
                        # symmetric in ij; the k<l sum doubles the 1/4
                        v = R[i][j][k][l]
                        if v.is_zero():
                            continue
                        alpha = [0] * d
                        alpha[i] += 1
                        alpha[j] += 1
                        c = Fraction(1) if i != j else Fraction(1, 2)
                        acc.add((0, tuple(alpha), mask), space.scalar_endo(v), c)
    if bundle is not None and not bundle.is_flat_data():
        RE = bundle.curvature
        for k in range(d):
            for l in range(k + 1, d):
                if RE[k][l].is_zero():
                    continue
                acc.add((1, (0,) * d, (1 << k) | (1 << l)), RE[k][l], Gauss(0, -bundle_sign))
    return WeylElement(space, acc.finish())


class FedosovContext:
    """Fedosov data for one choice of ``(Gamma, Gamma^E)`` on a chart.

    Builds ``Gamma~``, the curvature element and the abelian correction
    ``r`` through the truncation order of ``space``.  ``target`` is the total
    degree through which star products are reported; it may sit below the
    working order so that the flattening map has the extra degree it needs.
    """

    def __init__(self, space: WeylSpace, symp=None, bundle=None, bundle_sign: int = 1,
                 target: int | None = None):
        self.space = space
        self.target = space.order if target is None else target
        if not 0 <= self.target <= space.order:
            raise ValueError("target degree must lie between 0 and the working order")
        self.symp = symp
        self.bundle = bundle
        self.bundle_sign = bundle_sign
        self.gamma_tilde = connection_element(space, symp, bundle)
        self.curvature = curvature_element(space, symp, bundle, bundle_sign)
        self.flat = self.gamma_tilde.is_zero()
        self._r = None

    # r ----------------------------------------------------------------------
    @property
    def r(self) -> WeylElement:
        if self._r is None:
            self._r = self._solve_r()
        return self._r

    def _solve_r(self) -> WeylElement:
        r = delta_inv(self.curvature)  # homogeneous of degree 3
        for m in range(4, self.space.order + 1):
            rhs = covariant_deriv(r, self.gamma_tilde, degree=m - 1)
            rhs = rhs + ih_product(r, r, degree=m - 1)
            r = r + delta_inv(rhs)
            log.debug("r: degree %d done, %d terms", m, len(r.terms))
        return r

    # operators --------------------------------------------------------------
    def nabla(self, a: WeylElement, degree=None) -> WeylElement:
        return covariant_deriv(a, self.gamma_tilde, degree=degree)

    def D(self, a: WeylElement, upto: int | None = None) -> WeylElement:
        """``D a = -delta a + nabla a + (i/h)[r, a]``; ``upto`` bounds the output degree."""
        if upto is None:
            return -delta(a) + self.nabla(a) + ih_bracket(self.r, a)
        out = -delta(a.truncated(upto + 1))
        for m in range(upto + 1):
            out = out + self.nabla(a, degree=m) + ih_bracket(self.r, a, degree=m)
        return out

    def quantize(self, a: WeylElement, upto: int | None = None) -> WeylElement:
        """Unique flat section with symbol ``a`` (``a`` a 0-form, may contain ``y``).

        ``b_m = a_m + delta^{-1}[(nabla b)_{m-1} + ((i/h)[r, b])_{m-1}]``;
        ``upto`` stops after that degree.
        """
        if a.form_degrees() - {0}:
            raise ValueError("quantize expects a 0-form")
        top = self.space.order if upto is None else min(upto, self.space.order)
        lower = self.space.zero()
        for m in range(0, top + 1):
            comp = a.homogeneous(m)
            if m >= 1:
                x = self.nabla(lower, degree=m - 1) + ih_bracket(self.r, lower, degree=m - 1)
                comp = comp + delta_inv(x)
            lower = lower + comp
        return lower

    def dequantize(self, b: WeylElement) -> WeylElement:
        """``Q^{-1} = id - delta^{-1}(D + delta)``; for flat ``b`` this is its symbol."""
        return b - delta_inv(self.nabla(b) + ih_bracket(self.r, b))

    def star(self, A: WeylElement, B: WeylElement, exact_inverse: bool = False) -> WeylElement:
        """``A * B = Q^{-1}(Q(A) o Q(B))``.

        The Moyal product of flat sections is flat, so ``Q^{-1}`` reduces to
        taking the symbol; ``exact_inverse`` applies the full formula instead.
        """
        if exact_inverse:
            return self.dequantize(self.quantize(A) * self.quantize(B)).truncated(self.target)
        n = self.target
        return self.star_q(self.quantize(A, upto=n), self.quantize(B, upto=n))

    def star_q(self, qa: WeylElement, qb: WeylElement) -> WeylElement:
        """Star product from already quantized factors."""
        return moyal_symbol(qa, qb).truncated(self.target)

    def h_order(self) -> int:
        """Highest power of ``h`` that is complete at this truncation."""
        return self.space.order // 2


def flat_context(space: WeylSpace, bundle=None, target: int | None = None) -> FedosovContext:
    """Context with ``Gamma = 0``; keeps the bundle's Gram form if given."""
    from .geometry import BundleStructure

    if bundle is not None:
        bundle = BundleStructure(bundle.gram, [space.zero_endo() for _ in range(space.dim)])
    return FedosovContext(space, None, bundle, target=target)
