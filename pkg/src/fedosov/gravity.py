"""Perturbative metric/tetrad data, curvature endomorphisms and the five actions.

Every field is an eps-series (``eps`` is a variable of the scalar ring with
truncation order ``E``).  The Fedosov data for each action kind is set up in
an orthonormal frame: conjugating by the frame is a bundle isomorphism, so
star products and traces agree with the coordinate-basis construction,
while the Gram form becomes the constant background metric, which is what
the flattening homotopy needs.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .coefficients import (
    Gauss,
    det,
    eps_matrix_invert,
    eps_sqrt,
    identity_matrix,
    mat_add,
    mat_mul,
    random_trig,
    transpose,
)
from .core import FedosovContext
from .endo import endo_class
from .geometry import BundleStructure, ChartGeometry, GramForm, adjoint
from .trace import HomotopyPath, TraceSeries, trace_star
from .weyl import WeylSpace

log = logging.getLogger(__name__)

KINDS = ("EH1A", "EH1B", "EH2A", "EH2B", "P")


# ---------------------------------------------------------------------------
# matrix plumbing (lists of scalars)
# ---------------------------------------------------------------------------


def const_matrix(ring, rows):
    return [[ring.const(x) for x in r] for r in rows]


def mat_deriv(m, j):
    return [[x.deriv(j) for x in r] for r in m]


def mat_scale(m, s):
    return [[x * s for x in r] for r in m]


def kron(a, b):
    n, m = len(a), len(b)
    return [[a[i // m][j // m] * b[i % m][j % m] for j in range(n * m)] for i in range(n * m)]


def is_zero_matrix(m) -> bool:
    return all(x.is_zero() for r in m for x in r)


def _binom(a: Fraction, m: int) -> Fraction:
    v = Fraction(1)
    for j in range(m):
        v *= (a - j) / (j + 1)
    return v


def unipotent_power(Y, a: Fraction):
    """``(1 + Y)^a`` for ``Y = O(eps)``, as a truncated binomial series."""
    ring = Y[0][0].ring
    n = len(Y)
    out = identity_matrix(ring, n)
    power = identity_matrix(ring, n)
    for m in range(1, (ring.eps_order or 0) + 1):
        power = mat_mul(power, Y)
        out = mat_add(out, mat_scale(power, ring.const(_binom(a, m))))
    return out


def background_eta(dim: int, lorentzian: bool = False):
    """``diag(-1, 1, ..)`` or the identity; ``|det eta| = 1`` either way."""
    return [[(-1 if (lorentzian and i == 0) else 1) if i == j else 0 for j in range(dim)] for i in range(dim)]


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass
class MetricField:
    """``g_ab = eta_ab + eps p_ab`` with constant diagonal ``eta``."""

    ring: object
    eta: list
    p: list

    def __post_init__(self):
        n = len(self.eta)
        if any(self.eta[i][j] != (0 if i != j else self.eta[i][i]) for i in range(n) for j in range(n)):
            raise ValueError("background metric must be diagonal")
        if any(abs(self.eta[i][i]) != 1 for i in range(n)):
            raise ValueError("background metric must have |det eta| = 1 with unit entries")
        for i, j in itertools.product(range(n), repeat=2):
            if not self.p[i][j] == self.p[j][i]:
                raise ValueError("metric perturbation is not symmetric")
            if not self.p[i][j].is_real():
                raise ValueError("metric perturbation is not real")

    @property
    def dim(self) -> int:
        return len(self.eta)

    @property
    def g(self):
        eps = self.ring.eps()
        return mat_add(const_matrix(self.ring, self.eta), mat_scale(self.p, eps))

    @classmethod
    def random(cls, ring, rng: random.Random, eta, K: int = 1, n_modes: int | None = 1):
        n = len(eta)
        p = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                p[i][j] = p[j][i] = random_trig(ring, rng, K, n_modes=n_modes)
        return cls(ring, eta, p)


@dataclass
class TetradField:
    """``theta^A_a = delta^A_a + eps q^A_a``; rows are the fibre index ``A``."""

    ring: object
    eta: list
    q: list

    @property
    def theta(self):
        eps = self.ring.eps()
        return mat_add(identity_matrix(self.ring, len(self.eta)), mat_scale(self.q, eps))

    def metric(self):
        """``g_ab = theta^A_a eta_AB theta^B_b``."""
        th = self.theta
        return mat_mul(mat_mul(transpose(th), const_matrix(self.ring, self.eta)), th)

    @classmethod
    def random(cls, ring, rng, eta, K: int = 1, n_modes: int | None = 1):
        n = len(eta)
        q = [[random_trig(ring, rng, K, n_modes=n_modes) for _ in range(n)] for _ in range(n)]
        return cls(ring, eta, q)


@dataclass
class LorentzConnection:
    """``(Gamma^L_i)^A_B``; lowering with ``eta`` gives an antisymmetric matrix."""

    ring: object
    eta: list
    gamma: list  # per direction i: matrix [A][B]

    def __post_init__(self):
        if not self.is_compatible():
            raise ValueError("Lorentz connection is not eta-compatible")

    def is_compatible(self) -> bool:
        eta = const_matrix(self.ring, self.eta)
        for G in self.gamma:
            low = mat_mul(eta, G)
            if not is_zero_matrix(mat_add(low, transpose(low))):
                return False
        return True

    @classmethod
    def random(cls, ring, rng, eta, dim: int, K: int = 1, n_modes: int | None = 1):
        """``eps`` times an ``eta``-antisymmetric trig polynomial in every direction."""
        n = len(eta)
        eps = ring.eps()
        eta_inv = const_matrix(ring, eta)  # diagonal +-1: its own inverse
        gam = []
        for _ in range(dim):
            low = [[ring.zero() for _ in range(n)] for _ in range(n)]
            for A in range(n):
                for B in range(A + 1, n):
                    f = random_trig(ring, rng, K, n_modes=n_modes) * eps
                    low[A][B] = f
                    low[B][A] = -f
            gam.append(mat_mul(eta_inv, low))
        return cls(ring, eta, gam)

    def curvature(self):
        """``R^A_{B ij} = d_i G_j - d_j G_i + [G_i, G_j]`` as ``R[i][j]`` matrices."""
        d = len(self.gamma)
        G = self.gamma
        R = [[None] * d for _ in range(d)]
        for i, j in itertools.product(range(d), repeat=2):
            R[i][j] = mat_add(
                mat_add(mat_deriv(G[j], i), mat_scale(mat_deriv(G[i], j), self.ring.const(-1))),
                mat_add(mat_mul(G[i], G[j]), mat_scale(mat_mul(G[j], G[i]), self.ring.const(-1))),
            )
        return R


# ---------------------------------------------------------------------------
# Riemannian pipeline
# ---------------------------------------------------------------------------


def inverse_metric(g):
    try:
        return eps_matrix_invert(g)
    except (ZeroDivisionError, ValueError) as exc:
        raise ValueError("degenerate order-0 metric") from exc


def levi_civita(g, g_inv=None):
    """``Gamma^a_{bc} = (1/2) g^{as}(d_b g_{sc} + d_c g_{sb} - d_s g_{bc})``."""
    n = len(g)
    g_inv = g_inv or inverse_metric(g)
    half = g[0][0].ring.const(Fraction(1, 2))
    dg = [mat_deriv(g, k) for k in range(n)]
    low = [[[(dg[b][s][c] + dg[c][s][b] - dg[s][b][c]) * half for c in range(n)] for b in range(n)]
           for s in range(n)]
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for a, b, c in itertools.product(range(n), repeat=3):
        acc = g_inv[a][0] * low[0][b][c]
        for s in range(1, n):
            acc = acc + g_inv[a][s] * low[s][b][c]
        out[a][b][c] = acc
    return out


def connection_matrices(Gamma):
    """``(Gamma_i)^a_b = Gamma^a_{ib}``, the matrix form used by bundle connections."""
    n = len(Gamma)
    return [[[Gamma[a][i][b] for b in range(n)] for a in range(n)] for i in range(n)]


def riemann_ricci(Gamma, g_inv):
    """``R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{cs} Gamma^s_{db} - Gamma^a_{ds} Gamma^s_{cb}``.

    Returns ``(R^a_{bcd}, R_{bd} = R^a_{bad}, g^{bd} R_{bd})``.
    """
    n = len(Gamma)
    ring = Gamma[0][0][0].ring
    R = [[[[ring.zero() for _ in range(n)] for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for a, b in itertools.product(range(n), repeat=2):
        for c in range(n):
            for d in range(c + 1, n):
                v = Gamma[a][d][b].deriv(c) - Gamma[a][c][b].deriv(d)
                for s in range(n):
                    v = v + Gamma[a][c][s] * Gamma[s][d][b] - Gamma[a][d][s] * Gamma[s][c][b]
                R[a][b][c][d] = v
                R[a][b][d][c] = -v
    ric = [[sum((R[a][b][a][d] for a in range(1, n)), R[0][b][0][d]) for d in range(n)] for b in range(n)]
    scal = ring.zero()
    for b, d in itertools.product(range(n), repeat=2):
        scal = scal + g_inv[b][d] * ric[b][d]
    return R, ric, scal


def volume_factor(g):
    """``v = sqrt|det g|`` as an eps-series (``|det eta| = 1``)."""
    dg = det(g)
    lead = complex(dg.eps_coeff(0).value())
    return eps_sqrt(-dg if lead.real < 0 else dg)


# ---------------------------------------------------------------------------
# endomorphisms in the coordinate basis
# ---------------------------------------------------------------------------


@dataclass
class EHEndos:
    R1: list  # R_^a_b = g^{ac} R_{cb}
    R1v: list
    V1: list
    R2: list  # R__^{ab}_{cd} = g^{bs} R^a_{scd}, pair index a*n+b
    R2v: list
    V2: list
    gram1: list  # g
    gram2: list  # g (x) g
    v: object


def build_eh_endos(metric: MetricField) -> EHEndos:
    g = metric.g
    n = len(g)
    ring = metric.ring
    g_inv = inverse_metric(g)
    Gamma = levi_civita(g, g_inv)
    R, ric, _ = riemann_ricci(Gamma, g_inv)
    v = volume_factor(g)
    R1 = mat_mul(g_inv, ric)
    # R__^{ab}_{cd}
    R2 = [[ring.zero() for _ in range(n * n)] for _ in range(n * n)]
    for a, b, c, d in itertools.product(range(n), repeat=4):
        acc = ring.zero()
        for s in range(n):
            acc = acc + g_inv[b][s] * R[a][s][c][d]
        R2[a * n + b][c * n + d] = acc
    V1 = mat_scale(identity_matrix(ring, n), v)
    V2 = mat_scale(identity_matrix(ring, n * n), v)
    return EHEndos(R1, mat_scale(R1, v), V1, R2, mat_scale(R2, v), V2, g, kron(g, g), v)


@dataclass
class PalatiniEndos:
    RL: list  # (A a),(B b): g^{ai} R^A_{B i b}
    RLv: list
    T: list  # theta^{A a} theta_{B b}
    gram: list  # eta (x) g
    v: object


def build_palatini_endos(tetrad: TetradField, conn: LorentzConnection) -> PalatiniEndos:
    ring = tetrad.ring
    n = len(tetrad.eta)
    th = tetrad.theta
    g = tetrad.metric()
    g_inv = inverse_metric(g)
    eta = const_matrix(ring, tetrad.eta)
    RLc = conn.curvature()
    v = volume_factor(g)
    th_up = mat_mul(g_inv, transpose(th))  # [a][A] = g^{ab} theta^A_b
    th_low = mat_mul(eta, th)  # [B][b] = eta_BC theta^C_b
    N = n * n
    RL = [[ring.zero() for _ in range(N)] for _ in range(N)]
    T = [[ring.zero() for _ in range(N)] for _ in range(N)]
    for A, a, B, b in itertools.product(range(n), repeat=4):
        acc = ring.zero()
        for i in range(n):
            acc = acc + g_inv[a][i] * RLc[i][b][A][B]
        RL[A * n + a][B * n + b] = acc
        T[A * n + a][B * n + b] = th_up[a][A] * th_low[B][b]
    return PalatiniEndos(RL, mat_scale(RL, v), T, kron(eta, g), v)


def self_adjointness(endos, kind: str) -> dict:
    """The relations ``X^+ = X`` in the coordinate basis, each as a bool."""
    if kind == "EH":
        ring = endos.v.ring
        E = endo_class(ring)
        g1, g2 = GramForm(E.from_rows(ring, endos.gram1)), GramForm(E.from_rows(ring, endos.gram2))
        items = {"R_": (endos.R1, g1), "R_v": (endos.R1v, g1), "V": (endos.V1, g1),
                 "R__": (endos.R2, g2), "R__v": (endos.R2v, g2), "V~": (endos.V2, g2)}
    else:
        ring = endos.v.ring
        E = endo_class(ring)
        gg = GramForm(E.from_rows(ring, endos.gram))
        items = {"R_L": (endos.RL, gg), "R_L v": (endos.RLv, gg), "T": (endos.T, gg)}
    out = {}
    for name, (m, gram) in items.items():
        A = E.from_rows(ring, m)
        out[name] = adjoint(A, gram) == A
    return out


# ---------------------------------------------------------------------------
# orthonormal frames and the Fedosov data per kind
# ---------------------------------------------------------------------------


def metric_frame(metric: MetricField):
    """``e`` (frame -> coordinates) with ``e^T g e = eta``, and its inverse.

    ``e = (1 + eps X)^{-1/2}`` with ``X = eta^{-1} p``; every power of ``X`` is
    ``eta``-symmetric, so ``e^T eta = eta e``.
    """
    ring = metric.ring
    eta = const_matrix(ring, metric.eta)  # diagonal +-1, its own inverse
    Y = mat_scale(mat_mul(eta, metric.p), ring.eps())
    return unipotent_power(Y, Fraction(-1, 2)), unipotent_power(Y, Fraction(1, 2))


def frame_connection(e, e_inv, Gmats):
    """``e^{-1} d_i e + e^{-1} Gamma_i e`` for each direction."""
    n_dir = len(Gmats)
    return [mat_add(mat_mul(e_inv, mat_deriv(e, i)), mat_mul(mat_mul(e_inv, Gmats[i]), e)) for i in range(n_dir)]


def conjugate(e, e_inv, A):
    return mat_mul(mat_mul(e_inv, A), e)


@dataclass
class GravitySetup:
    """Frame-normalized Fedosov data and endomorphisms for one action kind."""

    kind: str
    bundle: BundleStructure
    endos: dict  # name -> Endo (frame basis)
    v: object
    coord: object = field(repr=False, default=None)


def _bundle(ring, gram_rows, conn_mats) -> BundleStructure:
    E = endo_class(ring)
    gram = GramForm(E.from_rows(ring, gram_rows))
    b = BundleStructure(gram, [E.from_rows(ring, m) for m in conn_mats])
    return b


def eh_setup(metric: MetricField, kind: str) -> GravitySetup:
    ring = metric.ring
    n = metric.dim
    E = endo_class(ring)
    endos = build_eh_endos(metric)
    g_inv = inverse_metric(endos.gram1)
    G = connection_matrices(levi_civita(endos.gram1, g_inv))
    e, e_inv = metric_frame(metric)
    if kind.startswith("EH1"):
        conn = frame_connection(e, e_inv, G)
        eta = metric.eta
        names = {"R": endos.R1, "Rv": endos.R1v, "V": endos.V1}
    else:
        one = identity_matrix(ring, n)
        G2 = [mat_add(kron(Gi, one), kron(one, Gi)) for Gi in G]
        e, e_inv = kron(e, e), kron(e_inv, e_inv)
        conn = frame_connection(e, e_inv, G2)
        eta = kron(metric.eta, metric.eta)
        names = {"R": endos.R2, "Rv": endos.R2v, "V": endos.V2}
    bundle = _bundle(ring, const_matrix(ring, eta), conn)
    frame = {k: E.from_rows(ring, conjugate(e, e_inv, m)) for k, m in names.items()}
    return GravitySetup(kind, bundle, frame, endos.v, endos)


def palatini_setup(tetrad: TetradField, conn: LorentzConnection) -> GravitySetup:
    """Frame ``1 (x) theta^{-1}`` on ``L (x) TM``.

    ``nabla`` on ``TM`` is ``theta^{-1}(d + Gamma^L) theta``, so in the frame the
    connection is ``Gamma^L (x) 1 + 1 (x) Gamma^L`` and the Gram form ``eta (x) eta``.
    """
    ring = tetrad.ring
    n = len(tetrad.eta)
    E = endo_class(ring)
    endos = build_palatini_endos(tetrad, conn)
    th = tetrad.theta
    th_inv = eps_matrix_invert(th)
    one = identity_matrix(ring, n)
    nabla = [mat_add(mat_mul(th_inv, mat_deriv(th, i)), mat_mul(mat_mul(th_inv, G), th))
             for i, G in enumerate(conn.gamma)]
    coord_conn = [mat_add(kron(G, one), kron(one, Nb)) for G, Nb in zip(conn.gamma, nabla)]
    e, e_inv = kron(one, th_inv), kron(one, th)
    frame_conn = frame_connection(e, e_inv, coord_conn)
    bundle = _bundle(ring, const_matrix(ring, kron(tetrad.eta, tetrad.eta)), frame_conn)
    names = {"RLv": endos.RLv, "T": endos.T, "RL": endos.RL}
    frame = {k: E.from_rows(ring, conjugate(e, e_inv, m)) for k, m in names.items()}
    return GravitySetup("P", bundle, frame, endos.v, endos)


# ---------------------------------------------------------------------------
# actions
# ---------------------------------------------------------------------------


@dataclass
class ActionSeries:
    """``(h power, eps power) -> Gauss`` coefficient table (times ``(2 pi)^d``)."""

    kind: str
    dim: int
    table: dict
    h_order: int
    eps_order: int

    def real_part(self) -> dict:
        return {k: v.re if hasattr(v, "re") else complex(v).real for k, v in self.table.items()}

    def imag_part(self) -> dict:
        return {k: v.im if hasattr(v, "im") else complex(v).imag for k, v in self.table.items()}

    def h_row(self, p: int) -> dict:
        return {m: v for (q, m), v in self.table.items() if q == p}


def action_integrand(setup: GravitySetup, ctx: FedosovContext):
    """The star-product argument of ``tr_*`` for the setup's kind."""
    sp = ctx.space
    X = setup.endos
    if setup.kind in ("EH1A", "EH2A"):
        return sp.lift(X["Rv"])
    if setup.kind in ("EH1B", "EH2B"):
        return ctx.star(sp.lift(X["R"]), sp.lift(X["V"]))
    if setup.kind == "P":
        return ctx.star(sp.lift(X["RLv"]), sp.lift(X["T"]))
    raise ValueError(f"unknown action kind {setup.kind!r}")


def action(setup: GravitySetup, geo: ChartGeometry, N: int, symp=None) -> ActionSeries:
    """``tr_*`` of the kind's endomorphism through total degree ``N`` (``h^{N/2}``)."""
    ring = setup.bundle.ring
    if setup.kind not in KINDS:
        raise ValueError(f"unknown action kind {setup.kind!r}")
    if not setup.bundle.is_compatible():
        raise ValueError("frame connection is not compatible with the Gram form")
    space = WeylSpace(geo, ring, setup.bundle.rank, N + 1)
    ctx = FedosovContext(space, symp, setup.bundle, target=N)
    A = action_integrand(setup, ctx)
    tr: TraceSeries = trace_star(HomotopyPath(ctx, target=N), A)
    return ActionSeries(setup.kind, geo.dim, tr.table(), N // 2, ring.eps_order or 0)


def reality_report(s: ActionSeries, oracle: dict | None = None, tol: float | None = None) -> dict:
    """Real and imaginary parts per ``(h, eps)`` order and the verdict.

    ``tol`` switches to the float criterion ``|Im| / |Re| < tol`` on
    coefficients that are nonzero; ``oracle`` maps eps powers to the
    classical ``h^0`` values.
    """
    rows = []
    im_witness = None
    for key in sorted(s.table):
        v = s.table[key]
        z = complex(v)
        if tol is None:
            bad = bool(Gauss.coerce(v).im)
        else:
            bad = abs(z) > tol and abs(z.imag) >= tol * abs(z.real)
        rows.append({"h": key[0], "eps": key[1], "re": v.re if tol is None else z.real,
                     "im": v.im if tol is None else z.imag})
        if bad and im_witness is None:
            im_witness = {"h": key[0], "eps": key[1], "im": str(rows[-1]["im"])}
    h0 = s.h_row(0)
    match, o_witness = True, None
    if oracle is not None:
        for m in sorted(set(h0) | set(oracle)):
            a, b = h0.get(m, 0), oracle.get(m, 0)
            same = Gauss.coerce(a) == Gauss.coerce(b) if tol is None else abs(complex(a) - complex(b)) <= tol * max(1.0, abs(complex(b)))
            if not same:
                match, o_witness = False, {"eps": m, "quantum": str(a), "classical": str(b)}
                break
    return {
        "kind": s.kind,
        "rows": rows,
        "real": im_witness is None,
        "imaginary_witness": im_witness,
        "h0": h0,
        "oracle": oracle,
        "oracle_match": match,
        "oracle_witness": o_witness,
        "passed": im_witness is None and match,
    }
