"""Classical and semiclassical Birkhoff normal forms via Lie series.

The homological equation {H0, F} = G + G1 with H0 = E + tau + theta.p is
solved monomial-wise: the ad_{H0} eigenvalue of each monomial is obtained by
actually applying the requested bracket to that monomial (never transcribed),
which makes the construction immune to sign-convention drift.  Iterating the
graded solves and Lie conjugations yields the normal form; with the Moyal
bracket at a given hbar order, the same engine produces the semiclassical
normal form whose hbar^0 slice is the classical one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import NonNilpotentError, ResonanceError
from .normalform import NormalForm
from .series import FTSeries, RotationData, moyal_bracket, poisson_bracket


def bracket_operation(bracket):
    """Resolve a bracket spec: "poisson" or ("moyal", hbar_order)."""
    if bracket == "poisson":
        return lambda a, b, cap=None: poisson_bracket(a, b, max_weight=cap)
    if (
        isinstance(bracket, (tuple, list))
        and len(bracket) == 2
        and bracket[0] == "moyal"
    ):
        order = int(bracket[1])
        return lambda a, b, cap=None: moyal_bracket(a, b, order, max_weight=cap)
    raise ValueError(f"unknown bracket spec {bracket!r}; use 'poisson' or ('moyal', order)")


def h0_series(rot: RotationData, E=0.0, max_weight=math.inf) -> FTSeries:
    """The normalized quadratic part E + tau + theta.p as a series."""
    n = rot.dim
    zero = (0,) * n
    terms = {(zero, zero, 0, 1, 0): 1.0 + 0j}
    if E:
        terms[(zero, zero, 0, 0, 0)] = complex(E)
    for i, th in enumerate(rot.theta):
        e = tuple(1 if a == i else 0 for a in range(n))
        terms[(e, e, 0, 0, 0)] = th / 2.0  # p_i = z_i zbar_i / 2
    return FTSeries(n, terms, max_weight)


def is_resonant_key(key) -> bool:
    """Kernel of ad_{H0}: mu = nu and Fourier mode 0 (any tau/hbar powers)."""
    mu, nu, m, _j, _k = key
    return mu == nu and m == 0


def validate_quadratic_part(H: FTSeries, rot: RotationData, tol=1e-12) -> float:
    """Check that the weight <= 2 slice of H is exactly E + tau + theta.p.

    Returns E.  Raises ValueError describing every offending key otherwise.
    """
    n = H.dim
    if n != rot.dim:
        raise ValueError("Hamiltonian and rotation data dimension mismatch")
    zero = (0,) * n
    expected = {(zero, zero, 0, 1, 0): 1.0}
    for i, th in enumerate(rot.theta):
        e = tuple(1 if a == i else 0 for a in range(n))
        expected[(e, e, 0, 0, 0)] = th / 2.0
    defects = []
    E = 0.0
    found = {}
    for key, c in H.items():
        w = sum(key[0]) + sum(key[1]) + 2 * key[3] + 2 * key[4]
        if w > 2:
            continue
        if key == (zero, zero, 0, 0, 0):
            if abs(complex(c).imag) > tol:
                defects.append(f"energy term not real: {c}")
            E = complex(c).real
        elif key in expected:
            found[key] = c
        elif abs(c) > tol:
            defects.append(f"unexpected low-weight key {key} with coefficient {c}")
    for key, want in expected.items():
        got = found.get(key, 0.0)
        if abs(got - want) > tol:
            defects.append(f"key {key}: expected {want}, found {got}")
    if defects:
        raise ValueError(
            "quadratic part is not in the normalized form E + tau + theta.p: "
            + "; ".join(defects)
        )
    return E


class _AdEigenvalues:
    """Cache of ad_{H0} eigenvalues, obtained by applying the bracket to a
    representative monomial of each Fourier-shift class (anti-sign-drift)."""

    def __init__(self, rot: RotationData, bracket):
        self._h0 = h0_series(rot)
        self._apply = bracket_operation(bracket)
        self._cache = {}
        self._dim = rot.dim

    def __call__(self, key) -> complex:
        mu, nu, m, _j, _k = key
        shift = tuple(a - b for a, b in zip(mu, nu))
        token = (shift, m)
        lam = self._cache.get(token)
        if lam is None:
            rep_mu = tuple(max(e, 0) for e in shift)
            rep_nu = tuple(max(-e, 0) for e in shift)
            rep_key = (rep_mu, rep_nu, m, 0, 0)
            mono = FTSeries.monomial(self._dim, rep_mu, rep_nu, m=m)
            image = self._apply(self._h0, mono)
            lam = complex(image.coeff(rep_key))
            leak = image - FTSeries.monomial(self._dim, rep_mu, rep_nu, m=m, coeff=lam)
            if leak.max_abs_coeff() > 1e-14:
                raise AssertionError("ad_{H0} did not act diagonally on a monomial")
            self._cache[token] = lam
        return lam


def solve_homological_classical(
    G: FTSeries,
    rot: RotationData,
    bracket="poisson",
    margin_threshold=1e-9,
):
    """Solve bracket(H0, F) = G + G1 with G1 = -(resonant part of G).

    Returns (F, G1) with F supported on the non-resonant keys of G (each
    coefficient divided by its computed ad-eigenvalue) and G1 a NormalForm.
    H0 is quadratic, so the Moyal bracket acts on monomials exactly like the
    Poisson bracket and both bracket specs give the same F.

    Raises
    ------
    ResonanceError
        If |eigenvalue| < margin_threshold at a non-resonant key, reporting
        the offending Fourier shift (mu - nu, m).
    """
    if G.dim != rot.dim:
        raise ValueError("dimension mismatch")
    needed = max(
        (sum(abs(a - b) for a, b in zip(key[0], key[1])) for key in G.keys()),
        default=0,
    )
    rot.require_order(needed)
    eig = _AdEigenvalues(rot, bracket)
    f_terms = {}
    resonant = {}
    for key, c in G.items():
        if is_resonant_key(key):
            resonant[key] = -c
            continue
        lam = eig(key)
        if abs(lam) < margin_threshold:
            mu, nu, m, _j, _k = key
            shift = tuple(a - b for a, b in zip(mu, nu))
            raise ResonanceError(
                f"small divisor |{lam:.3e}| < {margin_threshold:g} at "
                f"(mu - nu, m) = ({shift}, {m})"
            )
        f_terms[key] = c / lam
    F = FTSeries(G.dim, f_terms, G.max_weight)
    G1 = NormalForm.from_resonant_series(FTSeries(G.dim, resonant, G.max_weight))
    return F, G1


def homological_residual(
    F: FTSeries, G: FTSeries, G1: NormalForm, rot: RotationData, bracket="poisson"
) -> float:
    """max |coefficient| of bracket(H0, F) - G - G1 (the solve contract)."""
    apply = bracket_operation(bracket)
    res = apply(h0_series(rot), F) - G - G1.as_series()
    return res.max_abs_coeff()


def lie_conjugate(H: FTSeries, F: FTSeries, bracket="poisson", max_weight=None) -> FTSeries:
    """sum_k (1/k!) ad_F^k H with ad_F = bracket(F, .), truncated at max_weight.

    Requires min stored weight of F >= 3 so that each application of ad_F
    gains at least one weight unit and the series terminates exactly on the
    truncation.
    """
    cap = H.max_weight if max_weight is None else min(H.max_weight, max_weight)
    if cap == math.inf:
        raise ValueError("lie_conjugate needs a finite truncation weight")
    if F and F.min_weight() < 3:
        raise NonNilpotentError(
            f"generator has a term of weight {F.min_weight()} < 3; "
            "the Lie series would not terminate on the truncation"
        )
    apply = bracket_operation(bracket)
    total = H.truncated(cap)
    term = total
    k = 0
    while term:
        k += 1
        if k > cap + 2:  # unreachable given the weight gain; hard stop
            raise NonNilpotentError("Lie series failed to terminate")
        term = apply(F, term, cap).scaled(1.0 / k)
        total = total + term
    return total


@dataclass(frozen=True)
class GeneratorStep:
    """One normal-form sweep: the generating series for its weight grading."""

    grading: int
    F: FTSeries


@dataclass
class GeneratorLog:
    """Ordered record of the conjugations performed by a BNF run."""

    bracket: object = "poisson"
    steps: list = field(default_factory=list)

    def replay(self, H: FTSeries, max_weight=None) -> FTSeries:
        """Re-apply every logged conjugation to H."""
        cur = H
        for step in self.steps:
            cur = lie_conjugate(cur, step.F, self.bracket, max_weight)
        return cur

    def to_json(self) -> str:
        bracket = self.bracket if isinstance(self.bracket, str) else list(self.bracket)
        return json.dumps(
            {
                "bracket": bracket,
                "steps": [
                    {"grading": s.grading, "dim": s.F.dim, "series": s.F.to_records()}
                    for s in self.steps
                ],
            },
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(text) -> "GeneratorLog":
        blob = json.loads(text)
        bracket = blob["bracket"]
        if isinstance(bracket, list):
            bracket = (bracket[0], bracket[1])
        log = GeneratorLog(bracket=bracket)
        for s in blob["steps"]:
            log.steps.append(
                GeneratorStep(s["grading"], FTSeries.from_records(s["dim"], s["series"]))
            )
        return log


def _birkhoff_sweep(H, rot, order, bracket, work_weight, margin_threshold, route):
    """Shared classical/semiclassical normal-form iteration."""
    if order < 2:
        raise ValueError("order must be >= 2")
    work = max(order, work_weight if work_weight is not None else order)
    validate_quadratic_part(H, rot, tol=1e-12)
    rot.require_order(order)
    cur = FTSeries(H.dim, dict(H.items()), work)
    log = GeneratorLog(bracket=bracket)
    for w in range(3, order + 1):
        G = cur.weight_slice(w).filtered(lambda key: not is_resonant_key(key))
        if not G:
            continue
        F, _ = solve_homological_classical(G, rot, bracket, margin_threshold)
        cur = lie_conjugate(cur, F, bracket, work)
        log.steps.append(GeneratorStep(w, F))
    resonant = cur.filtered(
        lambda key: is_resonant_key(key)
        and sum(key[0]) + sum(key[1]) + 2 * key[3] + 2 * key[4] <= order
    )
    nf = NormalForm.from_resonant_series(resonant, route=route, imag_tol=1e-9)
    remainder = cur - resonant
    return nf, log, remainder


def birkhoff_classical(
    H: FTSeries,
    rot: RotationData,
    order: int,
    work_weight=None,
    margin_threshold=1e-9,
):
    """Classical Birkhoff normal form through the given weight.

    Returns (NormalForm, GeneratorLog, remainder).  Resonant content
    (including any higher tau-powers of the input) passes through to the
    normal form; the remainder carries everything of weight > order kept by
    the working truncation (max(order, work_weight)) plus sub-tolerance
    conjugation residue.
    """
    return _birkhoff_sweep(
        H, rot, order, "poisson", work_weight, margin_threshold, "classical"
    )


def birkhoff_semiclassical(
    H: FTSeries,
    rot: RotationData,
    order: int,
    hbar_order: int,
    work_weight=None,
    margin_threshold=1e-9,
):
    """Semiclassical normal form: same sweep with the Moyal bracket.

    The output table carries explicit hbar powers k <= hbar_order; its
    hbar^0 slice coincides with birkhoff_classical's output.
    """
    if hbar_order < 0:
        raise ValueError("hbar_order must be >= 0")
    nf, log, remainder = _birkhoff_sweep(
        H.hbar_truncated(hbar_order),
        rot,
        order,
        ("moyal", hbar_order),
        work_weight,
        margin_threshold,
        "semiclassical",
    )
    return nf.hbar_truncated(hbar_order), log, remainder
