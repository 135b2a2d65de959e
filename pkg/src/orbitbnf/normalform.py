"""Normal-form coefficient tables: real polynomials in (p, tau, hbar).

A :class:`NormalForm` stores the canonical output of every normal-form route
(classical, semiclassical, quantum): coefficients ``c[(r, s, k)]`` of

    sum c * p^r * tau^s * hbar^k

with ``r`` a multi-index over the transverse actions ``p_i``.  The
distinguished linear part is the energy ``E = c[(0,..,0), 0, 0]``, the
rotation angles ``theta_i = c[(e_i, 0, 0)]`` and the tau coefficient
``c[(0, 1, 0)] = 1``.
"""

from __future__ import annotations

import csv
import io
import json
import math


def _entry_key(r, s, k):
    r = tuple(int(e) for e in r)
    if any(e < 0 for e in r) or s < 0 or k < 0:
        raise ValueError(f"negative exponent in entry ({r}, {s}, {k})")
    return (r, int(s), int(k))


def entry_weight(entry) -> int:
    """Weight 2(|r| + s + k) of an entry in the joint grading."""
    r, s, k = entry
    return 2 * (sum(r) + s + k)


def entry_degree(entry) -> int:
    """Total degree |r| + s + k (p, tau, hbar each count 1)."""
    r, s, k = entry
    return sum(r) + s + k


class NormalForm:
    """Real coefficient table c[(r, s, k)] of sum c p^r tau^s hbar^k.

    Parameters
    ----------
    dim : int
    coeffs : mapping (r, s, k) -> real (complex accepted if |imag| <= imag_tol)
    route : str or None
        Which construction produced it: "classical", "semiclassical",
        "quantum", or None for hand-built tables.
    """

    __slots__ = ("dim", "route", "_coeffs")

    def __init__(self, dim, coeffs=None, route=None, imag_tol=1e-9):
        self.dim = int(dim)
        self.route = route
        store = {}
        if coeffs:
            for (r, s, k), c in coeffs.items():
                entry = _entry_key(r, s, k)
                if len(entry[0]) != self.dim:
                    raise ValueError(f"entry {entry} has wrong dim (expected {self.dim})")
                c = complex(c)
                if abs(c.imag) > imag_tol * max(1.0, abs(c.real)):
                    raise ValueError(
                        f"normal-form coefficient at {entry} is not real: {c}"
                    )
                v = c.real
                if v:
                    store[entry] = store.get(entry, 0.0) + v
                    if not store[entry]:
                        del store[entry]
        self._coeffs = store

    # -- accessors -----------------------------------------------------------

    def items(self):
        return self._coeffs.items()

    def coeff(self, r, s, k) -> float:
        return self._coeffs.get(_entry_key(r, s, k), 0.0)

    def __len__(self):
        return len(self._coeffs)

    def __bool__(self):
        return bool(self._coeffs)

    def __repr__(self):
        return f"NormalForm(dim={self.dim}, entries={len(self._coeffs)}, route={self.route!r})"

    def energy(self) -> float:
        return self.coeff((0,) * self.dim, 0, 0)

    def theta(self) -> tuple:
        out = []
        for i in range(self.dim):
            e = tuple(1 if a == i else 0 for a in range(self.dim))
            out.append(self.coeff(e, 0, 0))
        return tuple(out)

    def tau_coefficient(self) -> float:
        return self.coeff((0,) * self.dim, 1, 0)

    def linear_entries(self):
        """The distinguished entries: constant, theta_i, tau."""
        zero = (0,) * self.dim
        keys = {(zero, 0, 0), (zero, 1, 0)}
        for i in range(self.dim):
            e = tuple(1 if a == i else 0 for a in range(self.dim))
            keys.add((e, 0, 0))
        return keys

    def nonlinear_items(self):
        """Entries beyond the linear part (the trace-relevant corrections)."""
        linear = self.linear_entries()
        return [(entry, c) for entry, c in self._coeffs.items() if entry not in linear]

    # -- algebra on tables -----------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, NormalForm):
            return NotImplemented
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out = dict(self._coeffs)
        for entry, c in other._coeffs.items():
            out[entry] = out.get(entry, 0.0) + c
        return NormalForm(self.dim, {e: c for e, c in out.items() if c}, route=self.route)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, scalar) -> "NormalForm":
        return NormalForm(
            self.dim, {e: c * scalar for e, c in self._coeffs.items()}, route=self.route
        )

    def with_route(self, route) -> "NormalForm":
        nf = NormalForm(self.dim, route=route)
        nf._coeffs.update(self._coeffs)
        return nf

    def filtered(self, pred) -> "NormalForm":
        nf = NormalForm(self.dim, route=self.route)
        nf._coeffs.update({e: c for e, c in self._coeffs.items() if pred(e)})
        return nf

    def hbar_truncated(self, kmax) -> "NormalForm":
        return self.filtered(lambda e: e[2] <= kmax)

    def weight_truncated(self, max_weight) -> "NormalForm":
        return self.filtered(lambda e: entry_weight(e) <= max_weight)

    def chop(self, tol) -> "NormalForm":
        return NormalForm(
            self.dim,
            {e: c for e, c in self._coeffs.items() if abs(c) > tol},
            route=self.route,
        )

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._coeffs.values()), default=0.0)

    def difference(self, other) -> float:
        """max over entries of |self[e] - other[e]|."""
        worst = 0.0
        for e in set(self._coeffs) | set(other._coeffs):
            worst = max(worst, abs(self._coeffs.get(e, 0.0) - other._coeffs.get(e, 0.0)))
        return worst

    def allclose(self, other, tol=1e-10) -> bool:
        return self.difference(other) <= tol

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, p, tau=0.0, hbar=0.0) -> float:
        """Polynomial value at actions p (length dim), tau, hbar."""
        if len(p) != self.dim:
            raise ValueError("action vector has wrong length")
        total = 0.0
        for (r, s, k), c in self._coeffs.items():
            v = c
            for i in range(self.dim):
                if r[i]:
                    v *= p[i] ** r[i]
            if s:
                v *= tau**s
            if k:
                v *= hbar**k
            total += v
        return total

    # -- conversions -----------------------------------------------------------

    def as_series(self, max_weight=math.inf):
        """The same function as an FTSeries: p^r -> 2^{-|r|} z^r zbar^r."""
        from .series import FTSeries

        terms = {}
        for (r, s, k), c in self._coeffs.items():
            terms[(r, r, 0, s, k)] = c * 2.0 ** (-sum(r))
        return FTSeries(self.dim, terms, max_weight)

    @staticmethod
    def from_resonant_series(series, route=None, imag_tol=1e-9, atol=0.0) -> "NormalForm":
        """Convert a resonant FTSeries (keys mu=nu, m=0) to a table.

        z^mu zbar^mu = (2p)^mu, so the p^mu coefficient is 2^{|mu|} times the
        stored one.  Non-resonant keys with |coefficient| > atol raise.
        """
        coeffs = {}
        for (mu, nu, m, j, k), c in series.items():
            if mu != nu or m != 0:
                if abs(c) > atol:
                    raise ValueError(
                        f"series is not resonant: key {(mu, nu, m, j, k)} has coefficient {c}"
                    )
                continue
            coeffs[(mu, j, k)] = coeffs.get((mu, j, k), 0.0) + c * 2.0 ** sum(mu)
        return NormalForm(series.dim, coeffs, route=route, imag_tol=imag_tol)

    # -- serialization -----------------------------------------------------------

    def to_records(self):
        recs = []
        for entry in sorted(self._coeffs, key=lambda e: (entry_weight(e), e[2], e[1], e[0])):
            r, s, k = entry
            recs.append({"r": list(r), "s": s, "k": k, "c": self._coeffs[entry]})
        return recs

    @staticmethod
    def from_records(dim, records, route=None) -> "NormalForm":
        coeffs = {}
        for rec in records:
            entry = (tuple(rec["r"]), int(rec["s"]), int(rec["k"]))
            coeffs[entry] = coeffs.get(entry, 0.0) + float(rec["c"])
        return NormalForm(dim, coeffs, route=route)

    def to_json(self) -> str:
        return json.dumps(
            {"dim": self.dim, "route": self.route, "coeffs": self.to_records()},
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(text) -> "NormalForm":
        blob = json.loads(text)
        return NormalForm.from_records(blob["dim"], blob["coeffs"], route=blob.get("route"))

    def to_csv(self) -> str:
        """Table with columns route, r (space-separated), s, k, coeff."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["route", "r", "s", "k", "coeff"])
        for rec in self.to_records():
            writer.writerow(
                [self.route or "", " ".join(str(e) for e in rec["r"]), rec["s"], rec["k"], repr(rec["c"])]
            )
        return buf.getvalue()

    @staticmethod
    def from_csv(text) -> "NormalForm":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["route", "r", "s", "k", "coeff"]:
            raise ValueError("bad normal-form CSV header")
        coeffs = {}
        route = None
        dim = None
        for row in rows[1:]:
            if not row:
                continue
            route = row[0] or route
            r = tuple(int(e) for e in row[1].split()) if row[1].strip() else ()
            dim = len(r) if dim is None else dim
            entry = (r, int(row[2]), int(row[3]))
            coeffs[entry] = coeffs.get(entry, 0.0) + float(row[4])
        if dim is None:
            raise ValueError("empty normal-form CSV")
        return NormalForm(dim, coeffs, route=route)

    def pretty(self, tol=0.0) -> str:
        pieces = []
        for rec in self.to_records():
            if abs(rec["c"]) <= tol:
                continue
            factors = []
            for i, e in enumerate(rec["r"]):
                if e:
                    factors.append(f"p{i + 1}" + (f"^{e}" if e > 1 else ""))
            if rec["s"]:
                factors.append("tau" + (f"^{rec['s']}" if rec["s"] > 1 else ""))
            if rec["k"]:
                factors.append("hbar" + (f"^{rec['k']}" if rec["k"] > 1 else ""))
            body = "*".join(factors) if factors else "1"
            pieces.append(f"({rec['c']})*{body}")
        return " + ".join(pieces) if pieces else "0"
