"""Trace asymptotics of periodic-orbit contributions, forward and inverse.

For the normal form h = E + theta.p + tau + sum c_{r,s,k} p^r tau^s hbar^k,
the spectrum on the model space is h((mu + 1/2) hbar, nu hbar, hbar), and
the smoothed trace sum_{mu,nu} phi((lambda - E)/hbar) splits into periodic
contributions indexed by the integer l with Fourier weight phi_hat near
2 pi l.  Writing G(t, theta) = e^{i t sum theta_i / 2} / prod_i (1 - e^{i t theta_i}),
Poisson summation in nu and geometric summation in mu give, per l,

    sum_m  d_l^m hbar^m,
    d_l^m = sum over multisets {entry_a ^ q_a} with sum q_a m_a = m of
            prod_a (c_a^{q_a} / q_a!) * Psi_l(K, R, S),
    Psi_l(K, R, S) = i^{K + S} (-i)^{|R|}
                     d_t^S d_theta^R [ t^{K - |R|} phi_hat(t) G(t, theta) ] at t = 2 pi l,

with K = sum q_a, R = sum q_a r_a, S = sum q_a s_a, and m_a = |r_a| + s_a + k_a - 1
the hbar-order at which an entry first contributes.  Everything here is exact
symbolic differentiation of truncated jets; the only analytic input is the
jet of phi_hat at 2 pi l.

The inverse direction recovers the nonlinear c_{r,s,k} order by order in m:
at each m the unknowns enter d_l^m linearly through the K = 1 columns
Psi_l(1, r, s), and the already-recovered lower orders contribute the known
K >= 2 terms, so each step is one (conditioned, overdetermined) linear solve
across the available l.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    IllConditionedError,
    InconsistentDataError,
    JetDepthError,
    ResonanceError,
)
from .normalform import NormalForm
from .series import RotationData, nonresonance_margin  # re-exported

__all__ = [
    "GaussianBump",
    "TestFunctionJet",
    "TraceExpansion",
    "g_function",
    "forward_trace_expansion",
    "invert_trace_expansion",
    "nonresonance_margin",
    "psi_kernel",
]


# -- test functions ---------------------------------------------------------------


@dataclass(frozen=True)
class GaussianBump:
    """phi_hat(t) = exp(-(t - 2 pi l)^2 / (2 width^2)), one periodic window.

    With width about 0.7 the value at the neighboring lattice points
    2 pi (l +- 1) is ~3e-18, so the bump isolates the single period l.
    phi(x) = (width / sqrt(2 pi)) e^{i 2 pi l x} e^{-width^2 x^2 / 2} in the
    convention phi(x) = (1/2 pi) integral phi_hat(t) e^{i t x} dt.
    """

    l: int
    width: float = 0.7

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("period index l must be >= 1")
        if not 0 < self.width < 1.5:
            raise ValueError("width must be in (0, 1.5) to isolate one period")

    def phi_hat(self, t: float) -> float:
        u = t - 2.0 * math.pi * self.l
        return math.exp(-(u * u) / (2.0 * self.width**2))

    def phi(self, x: float) -> complex:
        w = self.width
        return (
            w / math.sqrt(2.0 * math.pi)
            * cmath.exp(1j * 2.0 * math.pi * self.l * x)
            * math.exp(-(w * x) ** 2 / 2.0)
        )

    def jet(self, depth: int) -> "TestFunctionJet":
        """Exact derivatives at the center: odd vanish, even alternate
        as phi_hat^(2a) = (-1)^a (2a-1)!! / width^(2a)."""
        derivs = []
        for kk in range(depth + 1):
            if kk % 2:
                derivs.append(0.0 + 0.0j)
            else:
                a = kk // 2
                v = (-1.0) ** a / self.width ** (2 * a)
                for odd in range(1, 2 * a, 2):
                    v *= odd
                derivs.append(complex(v))
        return TestFunctionJet(self.l, tuple(derivs))

    def quadrature_window(self, points_per_width: int = 64):
        """(t_min, t_max, n_points) covering +-8 widths, for numeric traces."""
        c = 2.0 * math.pi * self.l
        half = 8.0 * self.width
        n = int(2 * 8 * points_per_width) + 1
        return (c - half, c + half, n)


@dataclass(frozen=True)
class TestFunctionJet:
    """Derivatives phi_hat^(k)(2 pi l), k = 0..depth, for one period index l."""

    l: int
    derivs: tuple

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("period index l must be >= 1")
        object.__setattr__(self, "derivs", tuple(complex(v) for v in self.derivs))
        if not all(math.isfinite(v.real) and math.isfinite(v.imag) for v in self.derivs):
            raise ValueError("jet derivatives must be finite")

    @property
    def depth(self) -> int:
        return len(self.derivs) - 1

    @property
    def base_point(self) -> float:
        return 2.0 * math.pi * self.l

    def deriv(self, k: int) -> complex:
        if k > self.depth:
            raise JetDepthError(
                f"jet at l={self.l} has depth {self.depth}, derivative {k} requested"
            )
        return self.derivs[k]


# -- truncated jets in (t, theta) --------------------------------------------------


class TaylorPoly:
    """Jet at (t, theta) = (2 pi l, theta0): dict (t_pow, theta_pows) -> complex."""

    __slots__ = ("dim", "tcap", "rcap", "terms")

    def __init__(self, dim, tcap, rcap, terms=None):
        self.dim = dim
        self.tcap = tcap
        self.rcap = rcap
        self.terms = {}
        if terms:
            for key, c in terms.items():
                if key[0] <= tcap and sum(key[1]) <= rcap and c != 0:
                    self.terms[key] = complex(c)

    @staticmethod
    def constant(dim, tcap, rcap, value):
        return TaylorPoly(dim, tcap, rcap, {(0, (0,) * dim): value})

    def __add__(self, other):
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0.0) + c
        return TaylorPoly(self.dim, self.tcap, self.rcap, out)

    def scaled(self, v):
        return TaylorPoly(
            self.dim, self.tcap, self.rcap, {k: c * v for k, c in self.terms.items()}
        )

    def __mul__(self, other):
        out = {}
        for (a1, r1), c1 in self.terms.items():
            for (a2, r2), c2 in other.terms.items():
                a = a1 + a2
                if a > self.tcap:
                    continue
                r = tuple(x + y for x, y in zip(r1, r2))
                if sum(r) > self.rcap:
                    continue
                key = (a, r)
                v = c1 * c2
                out[key] = out.get(key, 0.0) + v
        return TaylorPoly(self.dim, self.tcap, self.rcap, out)

    def exp(self):
        """exp of a jet with zero constant term (finite on the truncation)."""
        zero = (0, (0,) * self.dim)
        if zero in self.terms:
            raise ValueError("exp expects a jet with zero constant term")
        total = TaylorPoly.constant(self.dim, self.tcap, self.rcap, 1.0)
        power = TaylorPoly.constant(self.dim, self.tcap, self.rcap, 1.0)
        fact = 1.0
        for n in range(1, self.tcap + self.rcap + 1):
            power = power * self
            if not power.terms:
                break
            fact *= n
            total = total + power.scaled(1.0 / fact)
        return total

    def coeff(self, t_pow, theta_pows):
        return self.terms.get((t_pow, tuple(theta_pows)), 0.0)


def _tpow_jet(dim, exponent, l, tcap, rcap):
    """Jet of t^exponent around t = 2 pi l (generalized binomial, any integer)."""
    base = 2.0 * math.pi * l
    terms = {}
    zero = (0,) * dim
    for j in range(tcap + 1):
        if exponent >= 0 and j > exponent:
            break
        c = 1.0
        for step in range(j):
            c *= (exponent - step)
        c /= math.factorial(j)
        terms[(j, zero)] = c * base ** (exponent - j)
    return TaylorPoly(dim, tcap, rcap, terms)


@lru_cache(maxsize=None)
def _g_poly(l, rot: RotationData, tcap, rcap, threshold=1e-9):
    """Jet of G(t, theta) = e^{i t thetabar} / prod (1 - e^{i t theta_i}).

    Built factor by factor: the exponential of a linear jet, and geometric
    inverses of 1 - g0 e^X with X the zero-constant jet of i t theta_i.
    """
    dim = rot.dim
    base = 2.0 * math.pi * l
    zero = (0,) * dim

    def linear_jet(coef_t, coef_theta_index):
        # jet of i * t * theta_j minus its value at the base point
        th = rot.theta[coef_theta_index]
        e_j = tuple(1 if i == coef_theta_index else 0 for i in range(dim))
        return TaylorPoly(
            dim,
            tcap,
            rcap,
            {
                (1, zero): 1j * th * coef_t,
                (0, e_j): 1j * base,
                (1, e_j): 1j,
            },
        )

    # e^{i t thetabar} = prod_i e^{i t theta_i / 2}
    total = TaylorPoly.constant(dim, tcap, rcap, 1.0)
    for i in range(dim):
        X = linear_jet(1.0, i).scaled(0.5)
        const = cmath.exp(1j * base * rot.theta[i] / 2.0)
        total = total * X.exp().scaled(const)
    # 1 / (1 - e^{i t theta_i})
    for i in range(dim):
        g0 = cmath.exp(1j * base * rot.theta[i])
        if abs(1.0 - g0) < threshold:
            raise ResonanceError(
                f"1 - e^(2 pi i l theta_{i+1}) = {1.0 - g0:.3e} at l={l}: "
                "the periodic denominator degenerates"
            )
        X = linear_jet(1.0, i)
        expm1 = X.exp() + TaylorPoly.constant(dim, tcap, rcap, -1.0)
        Y = expm1.scaled(g0 / (1.0 - g0))
        geom = TaylorPoly.constant(dim, tcap, rcap, 1.0)
        power = TaylorPoly.constant(dim, tcap, rcap, 1.0)
        for _ in range(tcap + rcap):
            power = power * Y
            if not power.terms:
                break
            geom = geom + power
        total = total * geom.scaled(1.0 / (1.0 - g0))
    return total


def _phi_jet_poly(jet: TestFunctionJet, dim, tcap, rcap):
    zero = (0,) * dim
    terms = {}
    for kk in range(min(jet.depth, tcap) + 1):
        terms[(kk, zero)] = jet.derivs[kk] / math.factorial(kk)
    return TaylorPoly(dim, tcap, rcap, terms)


_I_POWERS = (1.0 + 0.0j, 1j, -1.0 + 0.0j, -1j)


def psi_kernel(K, R, S, jet: TestFunctionJet, rot: RotationData, threshold=1e-9):
    """Psi_l(K, R, S): the assembled derivative of t^{K-|R|} phi_hat G at 2 pi l.

    Linear in the jet.  Requires jet depth >= S (deeper derivatives of
    phi_hat never enter the (S, R) coefficient because the other factors
    are polynomial jets with nonnegative valuation in delta t).
    """
    R = tuple(R)
    if len(R) != rot.dim:
        raise ValueError("R has wrong dimension")
    if jet.depth < S:
        raise JetDepthError(
            f"Psi needs d_t^{S} but jet at l={jet.l} has depth {jet.depth}"
        )
    tcap, rcap = S, sum(R)
    G = _g_poly(jet.l, rot, tcap, rcap, threshold)
    phi = _phi_jet_poly(jet, rot.dim, tcap, rcap)
    tp = _tpow_jet(rot.dim, K - sum(R), jet.l, tcap, rcap)
    f = G * phi * tp
    c = f.coeff(S, R)
    scale = math.factorial(S)
    for ri in R:
        scale *= math.factorial(ri)
    phase = _I_POWERS[(K + S) % 4] * _I_POWERS[(-sum(R)) % 4]
    return phase * scale * c


def g_function(r, s, jet: TestFunctionJet, rot: RotationData, threshold=1e-9):
    """g^l_{r,s} = (-i)^{|r|+s} (2 pi l)^{-|r|} d_theta^r d_t^s [G t phi_hat] at 2 pi l.

    The printed normalization of the one-orbit amplitude; exposed for direct
    inspection and finite-difference checking.  The assembly and inversion
    use psi_kernel, which differs from this by i-phases and the placement
    of the t-power (both conventions are linear in the jet).
    """
    r = tuple(r)
    if len(r) != rot.dim:
        raise ValueError("r has wrong dimension")
    if jet.depth < s:
        raise JetDepthError(
            f"g_function needs d_t^{s} but jet at l={jet.l} has depth {jet.depth}"
        )
    tcap, rcap = s, sum(r)
    G = _g_poly(jet.l, rot, tcap, rcap, threshold)
    phi = _phi_jet_poly(jet, rot.dim, tcap, rcap)
    tp = _tpow_jet(rot.dim, 1, jet.l, tcap, rcap)
    f = G * phi * tp
    c = f.coeff(s, r)
    scale = math.factorial(s)
    for ri in r:
        scale *= math.factorial(ri)
    base = 2.0 * math.pi * jet.l
    return _I_POWERS[(-(sum(r) + s)) % 4] * scale * c * base ** (-sum(r))


# -- forward expansion -------------------------------------------------------------


@dataclass
class TraceExpansion:
    """Coefficient table d_l^m with the jets and rotation data that made it."""

    rot: RotationData
    entries: dict  # (l, m) -> complex
    jets: dict  # l -> TestFunctionJet
    order: int  # entries cover m < order

    def d(self, l, m) -> complex:
        return self.entries.get((l, m), 0.0 + 0.0j)

    def to_csv(self) -> str:
        lines = ["l,m,re,im"]
        for (l, m) in sorted(self.entries):
            v = self.entries[(l, m)]
            lines.append(f"{l},{m},{v.real!r},{v.imag!r}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_csv(text, rot: RotationData, jets, order) -> "TraceExpansion":
        entries = {}
        rows = [ln for ln in text.strip().splitlines() if ln.strip()]
        if rows and rows[0].lower().startswith("l,"):
            rows = rows[1:]
        for ln in rows:
            l_s, m_s, re_s, im_s = ln.split(",")
            entries[(int(l_s), int(m_s))] = complex(float(re_s), float(im_s))
        return TraceExpansion(rot, entries, dict(jets), order)


def _nonlinear_entries(nf: NormalForm, rot: RotationData, theta_tol=1e-9):
    """Validate linear content against rot and list (r, s, k, c, m_a)."""
    if nf.dim != rot.dim:
        raise ValueError("dimension mismatch")
    th = nf.theta()
    for a, b in zip(th, rot.theta):
        if abs(a - b) > theta_tol:
            raise ValueError(
                f"normal form linear part {th} does not match rotation data {rot.theta}"
            )
    if abs(nf.tau_coefficient() - 1.0) > theta_tol:
        raise ValueError("normal form tau coefficient must be 1")
    out = []
    for (r, s, k), c in nf.nonlinear_items():
        m_a = sum(r) + s + k - 1
        if m_a < 1:
            raise ValueError(
                f"entry {(r, s, k)} contributes at hbar order 0: a bare hbar "
                "constant shifts the test-function argument uniformly and must "
                "be folded into the energy or the test function before expanding"
            )
        out.append((r, s, k, float(c), m_a))
    return out


def _multisets(entries, m):
    """Yield lists [(entry_index, q), ...] with sum q * m_a = m."""

    def rec(i, remaining, picked):
        if remaining == 0:
            yield list(picked)
            return
        if i >= len(entries):
            return
        m_a = entries[i][4]
        qmax = remaining // m_a
        for q in range(qmax, -1, -1):
            if q:
                picked.append((i, q))
            yield from rec(i + 1, remaining - q * m_a, picked)
            if q:
                picked.pop()

    yield from rec(0, m, [])


def forward_trace_expansion(
    nf: NormalForm, jets, M: int, threshold=1e-9
) -> TraceExpansion:
    """Assemble d_l^m for m < M from the normal form and one jet per l.

    The trace argument is (spectrum - E)/hbar with E = nf.energy(), so the
    energy entry never appears; d_l^0 = phi_hat(2 pi l) G(2 pi l, theta), and
    the m-th coefficient consumes entries with m_a <= m only (triangular).
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    rot = _rot_of(nf)
    entries = _nonlinear_entries(nf, rot)
    table = {}
    for jet in jets:
        l = jet.l
        table[(l, 0)] = psi_kernel(0, (0,) * nf.dim, 0, jet, rot, threshold)
        for m in range(1, M):
            acc = 0.0 + 0.0j
            for multiset in _multisets(entries, m):
                K = 0
                S = 0
                R = [0] * nf.dim
                factor = 1.0
                for idx, q in multiset:
                    r, s, k, c, m_a = entries[idx]
                    K += q
                    S += q * s
                    for i, ri in enumerate(r):
                        R[i] += q * ri
                    factor *= c**q / math.factorial(q)
                acc += factor * psi_kernel(K, tuple(R), S, jet, rot, threshold)
            table[(l, m)] = acc
    return TraceExpansion(rot, table, {jet.l: jet for jet in jets}, M)


def _rot_of(nf: NormalForm):
    """RotationData implied by the normal form's linear part, order-certified."""
    degrees = [sum(r) + s + k for (r, s, k), _ in nf.items()]
    order = max([2] + degrees)
    return nonresonance_margin(nf.theta(), order)


# -- inversion ----------------------------------------------------------------------


def invert_trace_expansion(
    tr: TraceExpansion,
    rot: RotationData,
    M: int,
    k_max: int = 0,
    cond_threshold: float = 1e10,
    residual_tol: float = 1e-6,
    threshold: float = 1e-9,
):
    """Recover the nonlinear c_{r,s,k} with |r| + s + k <= M from trace data.

    Works order by order in m = 1..M-1: the unknowns of step m are the keys
    with |r| + s + k = m + 1 and k <= k_max; they enter d_l^m linearly with
    coefficient Psi_l(1, r, s), while all multiset terms built from already
    recovered entries are subtracted from the data first.  Each step solves
    the real-stacked overdetermined system across l with column scaling.

    Returns (NormalForm of recovered nonlinear entries, report dict with
    per-step condition numbers and residuals).

    Raises
    ------
    IllConditionedError
        If a step's scaled condition number exceeds cond_threshold.
    InconsistentDataError
        If the free part d_l^0 disagrees with the jets, or a step's
        least-squares residual exceeds residual_tol * scale.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    dim = rot.dim
    ls = sorted(tr.jets)
    # free-part consistency
    for l in ls:
        jet = tr.jets[l]
        free = psi_kernel(0, (0,) * dim, 0, jet, rot, threshold)
        if abs(tr.d(l, 0) - free) > residual_tol * (1.0 + abs(free)):
            raise InconsistentDataError(
                f"d_{l}^0 = {tr.d(l, 0)} disagrees with the jet's free part {free}"
            )
    recovered = []  # (r, s, k, c, m_a)
    report = {"condition_numbers": {}, "residuals": {}, "unknown_counts": {}}
    for m in range(1, M):
        unknowns = []
        for total in range(m + 1, m + 2):
            for k in range(0, min(k_max, total - 0) + 1):
                deg = total - k
                for s in range(deg + 1):
                    for r in _compositions(deg - s, dim):
                        unknowns.append((r, s, k))
        # keys sorted for determinism
        unknowns.sort(key=lambda e: (e[2], e[1], e[0]))
        nu = len(unknowns)
        report["unknown_counts"][m] = nu
        if nu == 0:
            continue
        if 2 * len(ls) < nu:
            raise IllConditionedError(
                f"step m={m}: {nu} unknowns but only {len(ls)} period indices"
            )
        A = np.zeros((2 * len(ls), nu))
        b = np.zeros(2 * len(ls))
        for li, l in enumerate(ls):
            jet = tr.jets[l]
            known = 0.0 + 0.0j
            for multiset in _multisets(recovered, m):
                K = 0
                S = 0
                R = [0] * dim
                factor = 1.0
                for idx, q in multiset:
                    r, s, k, c, m_a = recovered[idx]
                    K += q
                    S += q * s
                    for i, ri in enumerate(r):
                        R[i] += q * ri
                    factor *= c**q / math.factorial(q)
                if K == 0:
                    continue
                known += factor * psi_kernel(K, tuple(R), S, jet, rot, threshold)
            rhs = tr.d(l, m) - known
            b[li] = rhs.real
            b[len(ls) + li] = rhs.imag
            for ui, (r, s, k) in enumerate(unknowns):
                col = psi_kernel(1, r, s, jet, rot, threshold)
                A[li, ui] = col.real
                A[len(ls) + li, ui] = col.imag
        scale = np.max(np.abs(A), axis=0)
        if np.any(scale == 0):
            raise IllConditionedError(
                f"step m={m}: a column is identically zero (increase jet depth "
                "or add period indices)"
            )
        As = A / scale
        sv = np.linalg.svd(As, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        report["condition_numbers"][m] = cond
        if cond > cond_threshold:
            raise IllConditionedError(
                f"step m={m}: condition number {cond:.3e} exceeds "
                f"{cond_threshold:.1e}; add more period indices l, or, if the "
                "unknowns include hbar powers, vary the test-function widths "
                "across l (a single rigid family satisfies exact derivative "
                "identities that make those columns dependent)"
            )
        x, *_ = np.linalg.lstsq(As, b, rcond=None)
        resid = float(np.linalg.norm(As @ x - b))
        report["residuals"][m] = resid
        bscale = 1.0 + float(np.linalg.norm(b))
        if resid > residual_tol * bscale:
            raise InconsistentDataError(
                f"step m={m}: least-squares residual {resid:.3e} exceeds "
                f"{residual_tol:g} * {bscale:.3e}; the data is not a trace "
                "expansion of this model"
            )
        vals = x / scale
        for (r, s, k), v in zip(unknowns, vals):
            recovered.append((r, s, k, float(v), m))
    coeffs = {(r, s, k): c for (r, s, k, c, _m) in recovered}
    nf = NormalForm(dim, coeffs, route="inverted")
    return nf, report


def _compositions(total, dim):
    """All multi-indices r with |r| = total (lexicographic)."""
    if dim == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, dim - 1):
            yield (first,) + rest
