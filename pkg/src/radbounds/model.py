"""Problem description and proposition regime validation.

A norm is meaningless without its exponent, and the same datum is paired
with different exponents by different propositions, so every datum carries a
small exponent -> value table (NormSet) rather than a bare number.  A zero
datum (recorded norm 0 at any exponent) is zero almost everywhere and hence
satisfies every integrability pairing; lookups exploit that.

Regime failures are data, not exceptions: check_regime returns a report
listing each violated hypothesis by name so sweep tooling can record
emptiness instead of aborting.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from .constants import (
    EmbeddingConstants,
    IntervalDomain,
    RectangleDomain,
    combined_constants,
    poincare_constant,
)
from .errors import ConfigurationError, RegimeError


def conjugate(e: float) -> float:
    """Hoelder conjugate e/(e-1)."""
    if e <= 1.0:
        raise ValueError(f"conjugate exponent needs e > 1, got {e!r}")
    return e / (e - 1.0)


def _key(e: float) -> float:
    return round(float(e), 12)


class Proposition(enum.Enum):
    Energy = "Energy"
    Lq = "Lq"
    DeGiorgi = "DeGiorgi"
    Moser = "Moser"
    CInfinity = "CInfinity"
    BoundaryLinf = "BoundaryLinf"
    LinearRN = "LinearRN"
    L1Data = "L1Data"
    Green = "Green"
    DualityW1q = "DualityW1q"


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeometryMeasures:
    n: int
    vol_omega: float
    surf_gamma: float
    surf_gamma_n: float
    surf_boundary: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("dimension n must be >= 1")
        if self.surf_boundary is None:
            object.__setattr__(self, "surf_boundary", self.surf_gamma + self.surf_gamma_n)
        if self.vol_omega <= 0:
            raise ConfigurationError("vol_omega must be positive")
        if self.surf_gamma <= 0:
            raise ConfigurationError("surf_gamma must be positive (radiative part nonempty)")
        if self.surf_gamma_n < 0:
            raise ConfigurationError("surf_gamma_n must be nonnegative")
        total = self.surf_gamma + self.surf_gamma_n
        if abs(total - self.surf_boundary) > 1e-12 * max(1.0, self.surf_boundary):
            raise ConfigurationError("surf_gamma + surf_gamma_n must equal surf_boundary")

    @property
    def conormal(self) -> bool:
        """Gamma = boundary (no Neumann part)."""
        return self.surf_gamma_n == 0.0

    def to_dict(self):
        return {"n": self.n, "vol_omega": self.vol_omega,
                "surf_gamma": self.surf_gamma, "surf_gamma_n": self.surf_gamma_n,
                "surf_boundary": self.surf_boundary}


@dataclass(frozen=True)
class CoefficientBounds:
    a_low: float
    a_high: float
    b_low: float
    b_high: float
    ell: float
    linear_b_star: Optional[float] = None
    symmetric: bool = True

    def __post_init__(self):
        if not 0 < self.a_low <= self.a_high:
            raise ConfigurationError("need 0 < a_low <= a_high")
        if not 0 < self.b_low <= self.b_high:
            raise ConfigurationError("need 0 < b_low <= b_high")
        if self.ell < 2.0:
            raise ConfigurationError("need ell >= 2")
        if self.linear_b_star is not None:
            if self.ell != 2.0:
                raise ConfigurationError("linear boundary term requires ell = 2")
            if not (self.b_low == self.b_high == self.linear_b_star):
                raise ConfigurationError("linear boundary term requires b_low = b_high = b_star")

    def to_dict(self):
        return {"a_low": self.a_low, "a_high": self.a_high, "b_low": self.b_low,
                "b_high": self.b_high, "ell": self.ell,
                "linear_b_star": self.linear_b_star, "symmetric": self.symmetric}


class NormSet:
    """Exponent -> norm-value table for one datum."""

    def __init__(self, values=None):
        self._v = {}
        for e, val in (values or {}).items():
            e = float(e)
            val = float(val)
            if e < 1.0:
                raise ConfigurationError(f"norm exponent must be >= 1, got {e!r}")
            if val < 0.0:
                raise ConfigurationError(f"norm value must be >= 0, got {val!r}")
            self._v[_key(e)] = val

    @classmethod
    def zero(cls):
        return cls({2.0: 0.0})

    @property
    def is_zero(self) -> bool:
        return bool(self._v) and any(v == 0.0 for v in self._v.values())

    @property
    def is_empty(self) -> bool:
        return not self._v

    def exponents(self):
        return sorted(self._v)

    def has(self, e: float) -> bool:
        return self.is_zero or _key(e) in self._v

    def at(self, e: float) -> float:
        k = _key(e)
        if k in self._v:
            return self._v[k]
        if self.is_zero:
            return 0.0
        raise ConfigurationError(f"norm at exponent {e!r} not recorded (have {self.exponents()})")

    def scaled(self, lam: float) -> "NormSet":
        return NormSet({e: lam * v for e, v in self._v.items()})

    def to_dict(self):
        return {repr(e): v for e, v in sorted(self._v.items())}

    def __repr__(self):
        return f"NormSet({self._v})"


@dataclass
class DataNorms:
    fvec: NormSet
    f: NormSet
    g: NormSet
    h: NormSet

    @classmethod
    def from_dict(cls, d):
        return cls(fvec=NormSet(d.get("fvec", {})), f=NormSet(d.get("f", {})),
                   g=NormSet(d.get("g", {})), h=NormSet(d.get("h", {})))

    def to_dict(self):
        return {"fvec": self.fvec.to_dict(), "f": self.f.to_dict(),
                "g": self.g.to_dict(), "h": self.h.to_dict()}

    def scaled(self, lam: float) -> "DataNorms":
        return DataNorms(self.fvec.scaled(lam), self.f.scaled(lam),
                         self.g.scaled(lam), self.h.scaled(lam))


@dataclass
class ExponentSet:
    """Primitive exponents plus the derived quantities of the propositions.

    A derived field is None with an entry in `flags` when its formula's
    regime fails; that is a flag, not an error.
    """

    n: int
    p: Optional[float] = None
    q: Optional[float] = None
    r: Optional[float] = None
    s: Optional[float] = None
    t: Optional[float] = None
    ell: Optional[float] = None
    alpha: Optional[float] = None
    delta: Optional[float] = None
    gamma: Optional[float] = None
    Q: Optional[float] = None
    chi: Optional[float] = None
    chi2: Optional[float] = None
    flags: dict = field(default_factory=dict)


def derive_exponents(prim: ExponentSet) -> ExponentSet:
    """Fill delta, gamma, Q, chi, chi2 from the primitives (idempotent)."""
    n, p, r, s = prim.n, prim.p, prim.r, prim.s
    out = ExponentSet(n=n, p=p, q=prim.q, r=r, s=s, t=prim.t, ell=prim.ell,
                      alpha=prim.alpha)
    if p is not None and r is not None:
        out.delta = min(0.5 - 1.0 / p, 0.5 - 1.0 / r)
        out.gamma = min(0.5 - 1.0 / p, (0.5 - 1.0 / r) * (n - 1.0) / n)
        den = n - 2.0 - 2.0 * (n - 1.0) * out.delta
        if den > 0.0:
            out.Q = 2.0 * (n - 1.0) / den
        else:
            out.flags["Q"] = "denominator n-2-2(n-1)delta is nonpositive"
    if p is not None:
        if n > 2:
            out.chi = n * (p - 2.0) / (p * (n - 2.0))
        else:
            out.flags["chi"] = "chi is a free parameter (> 1) at n = 2"
    if s is not None:
        if n > 2:
            out.chi2 = (s - 1.0) * (n - 1.0) / (s * (n - 2.0))
        else:
            out.flags["chi2"] = "chi2 is a free parameter (> 1) at n = 2"
    return out


# ---------------------------------------------------------------------------
# problem spec
# ---------------------------------------------------------------------------


@dataclass
class ProblemSpec:
    geometry: GeometryMeasures
    coefficients: CoefficientBounds
    data: DataNorms
    domain: Optional[object] = None           # RectangleDomain | IntervalDomain
    poincare_override: Optional[float] = None  # single P for all q
    poincare_values: dict = field(default_factory=dict)  # pinned q -> P_q
    embeddings: dict = field(default_factory=dict)       # (q, ell) -> EmbeddingConstants

    def poincare(self, q: float) -> float:
        k = _key(q)
        if k in self.poincare_values:
            return self.poincare_values[k]
        if self.poincare_override is not None:
            p = float(self.poincare_override)
        elif self.domain is not None:
            p = poincare_constant(self.domain, q)
        else:
            raise ConfigurationError(
                f"no Poincare source for q={q!r}: supply a domain descriptor or an override"
            )
        self.poincare_values[k] = p
        return p

    def embedding(self, q: float, ell: float) -> EmbeddingConstants:
        key = (_key(q), _key(ell))
        if key not in self.embeddings:
            self.embeddings[key] = combined_constants(
                q=q, ell=ell, n=self.geometry.n, p_q=self.poincare(q),
                gamma_surface=self.geometry.surf_gamma,
            )
        return self.embeddings[key]

    def snapshot(self) -> dict:
        return {
            "geometry": self.geometry.to_dict(),
            "coefficients": self.coefficients.to_dict(),
            "data": self.data.to_dict(),
            "poincare_values": {repr(k): v for k, v in sorted(self.poincare_values.items())},
            "poincare_override": self.poincare_override,
        }

    @classmethod
    def from_snapshot(cls, snap: dict) -> "ProblemSpec":
        return cls(
            geometry=GeometryMeasures(**snap["geometry"]),
            coefficients=CoefficientBounds(**snap["coefficients"]),
            data=DataNorms.from_dict(snap["data"]),
            poincare_override=snap.get("poincare_override"),
            poincare_values={float(k): v for k, v in snap.get("poincare_values", {}).items()},
        )

    def with_measures(self, vol_omega=None, surf_gamma=None, surf_gamma_n=None) -> "ProblemSpec":
        """Copy with replaced measures; pinned Poincare values are kept fixed."""
        g = self.geometry
        geo = GeometryMeasures(
            n=g.n,
            vol_omega=g.vol_omega if vol_omega is None else vol_omega,
            surf_gamma=g.surf_gamma if surf_gamma is None else surf_gamma,
            surf_gamma_n=g.surf_gamma_n if surf_gamma_n is None else surf_gamma_n,
        )
        spec = ProblemSpec(geometry=geo, coefficients=self.coefficients, data=self.data,
                           domain=self.domain, poincare_override=self.poincare_override,
                           poincare_values=dict(self.poincare_values))
        return spec


# ---------------------------------------------------------------------------
# regime checking
# ---------------------------------------------------------------------------


@dataclass
class RegimeReport:
    proposition: Proposition
    applicable: bool
    hypotheses: list
    violations: list
    details: dict

    def require(self):
        if not self.applicable:
            raise RegimeError(["%s: %s" % (self.proposition.value, v) for v in self.violations])


#: hypothesis texts, stated once, also exported verbatim by the CLI regime matrix
HYPOTHESES = {
    Proposition.Energy: [
        "(A) uniformly elliptic and bounded: 0 < a_# <= a^#",
        "(B) (ell-1)-growth with ell >= 2: 0 < b_# <= b^#",
        "fvec in L^2(Omega)",
        "f in L^t(Omega), t = 2n/(n+2) if n > 2, any t > 1 if n = 2",
        "g in L^s(Gamma_N), s = 2(n-1)/n if n > 2, any s > 1 if n = 2",
        "h in L^{ell/(ell-1)}(Gamma), or h in L^s(Gamma) for the variant pairing",
    ],
    Proposition.Lq: [
        "2 < p < 2(n-1)",
        "2 < r < 2(n-1)",
        "fvec in L^p(Omega)",
        "f in L^{np/(p+n)}(Omega)",
        "g in L^{(n-1)p/n}(Gamma_N)",
        "h in L^r(Gamma)",
    ],
    Proposition.DeGiorgi: [
        "p > n >= 2",
        "r > 2(n-1)",
        "fvec in L^p(Omega)",
        "f in L^{np/(p+n)}(Omega)",
        "g in L^{(n-1)p/n}(Gamma_N)",
        "h in L^r(Gamma)",
    ],
    Proposition.Moser: [
        "p > n >= 2",
        "ell >= 2",
        "fvec in L^p(Omega)",
        "f in L^{p/2}(Omega)",
        "g = 0 on Gamma_N",
        "h = 0 on Gamma",
    ],
    Proposition.CInfinity: [
        "p > n >= 2",
        "ell >= 2",
        "fvec in L^p(Omega)",
        "f = 0 in Omega",
        "g = 0 on Gamma_N",
        "h = 0 on Gamma",
    ],
    Proposition.BoundaryLinf: [
        "s > n-1",
        "fvec = 0 in Omega",
        "f = 0 in Omega",
        "g in L^s(Gamma_N)",
        "h in L^s(Gamma)",
    ],
    Proposition.LinearRN: [
        "boundary term is linear: b(u) = b_* u with b_* > 0 (ell = 2)",
        "p > n >= 2 (interior sub-problem, Moser hypotheses)",
        "s > n-1 (boundary sub-problem hypotheses)",
        "fvec in L^p(Omega) and L^2(Omega)",
        "f in L^{p/2}(Omega) and L^t(Omega), t = 2n/(n+2) if n > 2, any t > 1 if n = 2",
        "g in L^s(Gamma_N)",
        "h in L^s(Gamma)",
    ],
    Proposition.L1Data: [
        "A symmetric",
        "fvec = 0 in Omega",
        "ell >= 2",
        "f in L^1(Omega)",
        "g in L^1(Gamma_N)",
        "h in L^1(Gamma)",
    ],
    Proposition.Green: [
        "A symmetric",
        "(A) and (B) hold",
        "n >= 2",
    ],
    Proposition.DualityW1q: [
        "n > 2",
        "b_* = 1 (linear boundary term with unit coefficient)",
        "A symmetric",
        "fvec = 0 in Omega",
        "f in L^t(Omega) with t <= 2n/(n+2)",
        "g in L^s(Gamma_N) with s <= 2(n-1)/n",
        "h in L^s(Gamma) with s <= 2(n-1)/n",
    ],
}


def _pair_candidates_p(data: DataNorms, n: int):
    """Candidate values of p linking fvec/f/g pairings of Prop 4.1/5.1."""
    cands = list(data.fvec.exponents())
    for t in data.f.exponents():
        if t < n:
            cands.append(n * t / (n - t))
    for s in data.g.exponents():
        cands.append(n * s / (n - 1.0))
    return sorted({_key(c) for c in cands if c > 1.0})


def _levelset_data_ok(data: DataNorms, n: int, p: float):
    """Do fvec/f/g carry the Prop 4.1/5.1 pairings for this p?"""
    return (data.fvec.has(p)
            and data.f.has(n * p / (p + n))
            and data.g.has((n - 1.0) * p / n))


def check_regime(spec: ProblemSpec, proposition: Proposition) -> RegimeReport:
    """Evaluate every hypothesis of the named proposition against the spec."""
    geo, co, data = spec.geometry, spec.coefficients, spec.data
    n = geo.n
    hyp = HYPOTHESES[proposition]
    violations = []
    details = {}

    def viol(text):
        violations.append(text)

    if proposition is Proposition.Energy:
        if not data.fvec.has(2.0):
            viol("fvec in L^2(Omega): ||fvec||_2 not recorded")
        if n > 2:
            t_req, s_req = 2.0 * n / (n + 2.0), 2.0 * (n - 1.0) / n
            if not data.f.has(t_req):
                viol(f"f in L^t(Omega): t = 2n/(n+2) = {t_req} not recorded")
            if not data.g.has(s_req):
                viol(f"g in L^s(Gamma_N): s = 2(n-1)/n = {s_req} not recorded")
            details["t"], details["s"] = t_req, s_req
        else:
            ts = [e for e in data.f.exponents() if e > 1.0]
            ss = [e for e in data.g.exponents() if e > 1.0]
            if not (data.f.is_zero or ts):
                viol("f in L^t(Omega): no exponent t > 1 recorded")
            if not (data.g.is_zero or ss):
                viol("g in L^s(Gamma_N): no exponent s > 1 recorded")
            details["t"] = ts[0] if ts else None
            details["s"] = ss[0] if ss else None
        lp = conjugate(co.ell)
        if not (data.h.has(lp) or (details.get("s") and data.h.has(details["s"]))
                or (n > 2 and data.h.has(2.0 * (n - 1.0) / n))):
            viol("h in L^{ell/(ell-1)}(Gamma): neither the dual pairing nor the L^s variant recorded")

    elif proposition in (Proposition.Lq, Proposition.DeGiorgi):
        degiorgi = proposition is Proposition.DeGiorgi
        lo = float(n) if degiorgi else 2.0
        hi = math.inf if degiorgi else 2.0 * (n - 1.0)
        if not degiorgi and n == 2:
            viol("2 < p < 2(n-1) unsatisfiable at n = 2")
        else:
            cand = [p for p in _pair_candidates_p(data, n) if lo < p < hi]
            if data.fvec.is_zero and data.f.is_zero and data.g.is_zero and not cand:
                cand = [lo + 1.0 if degiorgi else 0.5 * (lo + hi)]
            chosen = next((p for p in cand if _levelset_data_ok(data, n, p)), None)
            if chosen is None:
                which = "p > n" if degiorgi else "2 < p < 2(n-1)"
                viol(f"no recorded exponent p with {which} carrying the fvec/f/g pairings")
            else:
                details["p"] = chosen
        r_lo = 2.0 * (n - 1.0)
        rs = [r for r in data.h.exponents() if r > r_lo] if not data.h.is_zero \
            else [r_lo + 1.0]
        if degiorgi:
            if not rs:
                viol("r > 2(n-1): no such h exponent recorded")
            else:
                details["r"] = rs[0]
        else:
            rs = [r for r in data.h.exponents() if 2.0 < r < r_lo] if not data.h.is_zero \
                else ([0.5 * (2.0 + r_lo)] if n > 2 else [])
            if n == 2:
                if "2 < p < 2(n-1) unsatisfiable at n = 2" not in violations:
                    viol("2 < r < 2(n-1) unsatisfiable at n = 2")
            elif not rs:
                viol("2 < r < 2(n-1): no such h exponent recorded")
            else:
                details["r"] = rs[0]

    elif proposition in (Proposition.Moser, Proposition.CInfinity):
        ps = [p for p in data.fvec.exponents() if p > n]
        if data.fvec.is_zero and not ps:
            ps = [n + 1.0]
        chosen = next((p for p in ps if data.f.has(p / 2.0)), None)
        if chosen is None:
            viol("no recorded exponent p > n with f in L^{p/2}(Omega)")
        else:
            details["p"] = chosen
        if co.ell < 2.0:
            viol("ell >= 2 fails")
        if not data.g.is_zero:
            viol("g = 0 on Gamma_N required")
        if not data.h.is_zero:
            viol("h = 0 on Gamma required")
        if proposition is Proposition.CInfinity and not data.f.is_zero:
            viol("f = 0 in Omega required")

    elif proposition is Proposition.BoundaryLinf:
        if not data.fvec.is_zero:
            viol("fvec = 0 in Omega required")
        if not data.f.is_zero:
            viol("f = 0 in Omega required")
        ss = [s for s in sorted(set(data.g.exponents()) | set(data.h.exponents()))
              if s > n - 1.0 and data.g.has(s) and data.h.has(s)]
        if data.g.is_zero and data.h.is_zero and not ss:
            ss = [float(n)]
        if not ss:
            viol("s > n-1 with g and h both in L^s: no such exponent recorded")
        else:
            details["s"] = ss[0]

    elif proposition is Proposition.LinearRN:
        if co.linear_b_star is None:
            viol("boundary term is not linear (b_* unset)")
        ps = [p for p in data.fvec.exponents() if p > n]
        if data.fvec.is_zero and not ps:
            ps = [n + 1.0]
        chosen = next((p for p in ps if data.f.has(p / 2.0) and data.fvec.has(2.0)), None)
        if chosen is None:
            viol("interior sub-problem: need p > n with fvec in L^p n L^2 and f in L^{p/2}")
        else:
            details["p"] = chosen
        if n > 2:
            t_req = 2.0 * n / (n + 2.0)
            if not data.f.has(t_req):
                viol(f"f in L^t(Omega): t = 2n/(n+2) = {t_req} not recorded")
            else:
                details["t"] = t_req
        else:
            ts = [e for e in data.f.exponents() if e > 1.0]
            if not (data.f.is_zero or ts):
                viol("f in L^t(Omega): no exponent t > 1 recorded")
            details["t"] = ts[0] if ts else 2.0
        ss = [s for s in sorted(set(data.g.exponents()) | set(data.h.exponents()))
              if s > n - 1.0 and data.g.has(s) and data.h.has(s)]
        if data.g.is_zero and data.h.is_zero and not ss:
            ss = [float(n)]
        if not ss:
            viol("boundary sub-problem: need s > n-1 with g and h in L^s")
        else:
            details["s"] = ss[0]

    elif proposition is Proposition.L1Data:
        if not co.symmetric:
            viol("A symmetric required")
        if not data.fvec.is_zero:
            viol("fvec = 0 in Omega required")
        if co.ell < 2.0:
            viol("ell >= 2 fails")
        for name, ns in (("f", data.f), ("g", data.g), ("h", data.h)):
            if ns.is_empty:
                viol(f"{name} in L^1: no norm recorded")

    elif proposition is Proposition.Green:
        if not co.symmetric:
            viol("A symmetric required")
        if n < 2:
            viol("n >= 2 fails")

    elif proposition is Proposition.DualityW1q:
        if n <= 2:
            viol("n > 2 fails")
        if co.linear_b_star is None or abs(co.linear_b_star - 1.0) > 1e-12:
            viol("b_* = 1 required")
        if not co.symmetric:
            viol("A symmetric required")
        if not data.fvec.is_zero:
            viol("fvec = 0 in Omega required")
        t_hi = 2.0 * n / (n + 2.0) if n > 2 else None
        s_hi = 2.0 * (n - 1.0) / n if n > 2 else None
        if n > 2:
            ts = [t for t in data.f.exponents() if 1.0 < t <= t_hi]
            if data.f.is_zero and not ts:
                ts = [t_hi]
            if not ts:
                viol(f"f in L^t with 1 < t <= 2n/(n+2) = {t_hi}: no such exponent recorded")
            else:
                details["t"] = ts[-1]
            ss = [s for s in sorted(set(data.g.exponents()) | set(data.h.exponents()))
                  if 1.0 < s <= s_hi and data.g.has(s) and data.h.has(s)]
            if data.g.is_zero and data.h.is_zero and not ss:
                ss = [s_hi]
            if not ss:
                viol(f"g, h in L^s with 1 < s <= 2(n-1)/n = {s_hi}: no such exponent recorded")
            else:
                details["s"] = ss[-1]

    else:  # pragma: no cover
        raise ValueError(proposition)

    return RegimeReport(proposition=proposition, applicable=not violations,
                        hypotheses=list(hyp), violations=violations, details=details)


def regime_matrix(spec: ProblemSpec):
    """check_regime over all propositions, as a list of reports."""
    return [check_regime(spec, prop) for prop in Proposition]
