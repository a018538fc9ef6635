"""Special functions and embedding constants consumed by every bound.

The best-constant formulas are evaluated through log-gamma so they stay
finite near the q -> 1 end of their range, where the direct gamma ratios
overflow long before the constants themselves do.

The Poincare constant has no closed form here: for canonical rectangle and
interval domains it is estimated conservatively from a documented trial
family (polynomials, trigonometric modes, and seeded random combinations of
both), inflated by a fixed safety factor.  Anything else must carry a
user-supplied override.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError, RangeError, RegimeError

#: safety factor applied on top of the trial-family maximum quotient
POINCARE_SAFETY = 1.25

#: quadrature points per axis for the Poincare trial-family integrals
_PC_QUAD = 24


def gamma_fn(x: float) -> float:
    """Gamma function for real positive arguments.

    Raises DomainError for x <= 0 and RangeError on overflow (x beyond
    roughly 171.6 in double precision).
    """
    if not x > 0.0:
        raise DomainError(f"gamma_fn requires x > 0, got {x!r}")
    try:
        return math.gamma(x)
    except OverflowError as exc:
        raise RangeError(f"gamma_fn overflow at x={x!r}") from exc


def sobolev_best(q: float, n: int) -> float:
    """Best constant of the Sobolev inequality on R^n, 1 < q < n."""
    if not (1.0 < q < n):
        raise RegimeError([f"sobolev_best requires 1 < q < n, got q={q!r}, n={n!r}"])
    log_bracket = (
        math.lgamma(1.0 + n / 2.0)
        + math.lgamma(float(n))
        - math.lgamma(n / q)
        - math.lgamma(1.0 + n - n / q)
    ) / n
    return (
        math.pi ** -0.5
        * n ** (-1.0 / q)
        * ((q - 1.0) / (n - q)) ** (1.0 - 1.0 / q)
        * math.exp(log_bracket)
    )


def sobolev_limit(n: int) -> float:
    """Limit constant of the Sobolev inequality at q = 1 (target L^{n/(n-1)})."""
    if n < 2:
        raise RegimeError([f"sobolev_limit requires n >= 2, got n={n!r}"])
    return math.pi ** -0.5 / n * gamma_fn(1.0 + n / 2.0) ** (1.0 / n)


def trace_best(q: float, n: int) -> float:
    """Best constant of the trace inequality on R^n, 1 < q < n."""
    if not (1.0 < q < n):
        raise RegimeError([f"trace_best requires 1 < q < n, got q={q!r}, n={n!r}"])
    log_bracket = (
        math.lgamma(q * (n - 1.0) / (2.0 * (q - 1.0)))
        - math.lgamma((n - 1.0) / (2.0 * (q - 1.0)))
    ) * ((q - 1.0) / (n - 1.0))
    return (
        math.pi ** ((1.0 - q) / 2.0)
        * ((q - 1.0) / (n - q)) ** (q - 1.0)
        * math.exp(log_bracket)
    )


def trace_limit(n: int) -> float:
    """q -> 1 limit of the trace constant (target L^1 on the boundary).

    The closed form degenerates at q = 1; its limit is 1 for every n >= 2,
    which is also the classical sharp constant of the L^1 trace inequality.
    """
    if n < 2:
        raise RegimeError([f"trace_limit requires n >= 2, got n={n!r}"])
    return 1.0


def tail_series(chi: float) -> float:
    """Closed form of sum_{m>=0} m chi^{-m} = chi / (chi - 1)^2, chi > 1."""
    if not chi > 1.0:
        raise DomainError(f"tail_series diverges for chi <= 1, got {chi!r}")
    return chi / (chi - 1.0) ** 2


# ---------------------------------------------------------------------------
# combined embedding constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingConstants:
    """Best constants plus their Poincare-combined counterparts for one (q, ell)."""

    q: float
    ell: float
    n: int
    p_q: float
    s_q: float
    k_q: float
    s_ql: float
    k_ql: float
    gamma_surface: float

    def __post_init__(self):
        for name in ("p_q", "s_q", "k_q", "s_ql", "k_ql", "gamma_surface"):
            if not getattr(self, name) > 0.0:
                raise ConfigurationError(f"EmbeddingConstants.{name} must be positive")


def combined_constants(
    q: float, ell: float, n: int, p_q: float, gamma_surface: float
) -> EmbeddingConstants:
    """Assemble the combined Sobolev/trace constants for the norm pair (q, ell).

    q = 1 routes through the limit constants.
    """
    if not (1.0 <= q < n):
        raise RegimeError([f"combined_constants requires 1 <= q < n, got q={q!r}, n={n!r}"])
    if ell < 1.0:
        raise RegimeError([f"combined_constants requires ell >= 1, got {ell!r}"])
    if p_q <= 0.0 or gamma_surface <= 0.0:
        raise ConfigurationError("combined_constants needs positive p_q and gamma_surface")
    if q == 1.0:
        s_q = sobolev_limit(n)
        k_q = trace_limit(n)
    else:
        s_q = sobolev_best(q, n)
        k_q = trace_best(q, n)
    factor = max(
        1.0 + p_q * 2.0 ** ((n - 1.0) * (1.0 - 1.0 / q)),
        p_q * gamma_surface ** (1.0 / q - 1.0 / ell),
    )
    return EmbeddingConstants(
        q=q,
        ell=ell,
        n=n,
        p_q=p_q,
        s_q=s_q,
        k_q=k_q,
        s_ql=s_q * factor,
        k_ql=k_q * factor,
        gamma_surface=gamma_surface,
    )


# ---------------------------------------------------------------------------
# Poincare constant on canonical domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RectangleDomain:
    """Axis-aligned rectangle [0, width] x [0, height] with tagged edges."""

    width: float
    height: float
    gamma_edges: tuple  # subset of ("bottom", "right", "top", "left"), nonempty
    override: Optional[float] = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError("rectangle dimensions must be positive")
        bad = set(self.gamma_edges) - {"bottom", "right", "top", "left"}
        if bad:
            raise ConfigurationError(f"unknown rectangle edges: {sorted(bad)}")
        if not self.gamma_edges and self.override is None:
            raise ConfigurationError("gamma_edges must be nonempty")

    @property
    def gamma_measure(self):
        lengths = {"bottom": self.width, "top": self.width,
                   "left": self.height, "right": self.height}
        return sum(lengths[e] for e in self.gamma_edges)


@dataclass(frozen=True)
class IntervalDomain:
    """Interval [0, length]; boundary points carry counting measure."""

    length: float
    gamma_ends: tuple  # subset of ("left", "right"), nonempty
    override: Optional[float] = None

    def __post_init__(self):
        if self.length <= 0:
            raise ConfigurationError("interval length must be positive")
        bad = set(self.gamma_ends) - {"left", "right"}
        if bad:
            raise ConfigurationError(f"unknown interval ends: {sorted(bad)}")
        if not self.gamma_ends and self.override is None:
            raise ConfigurationError("gamma_ends must be nonempty")

    @property
    def gamma_measure(self):
        return float(len(self.gamma_ends))


_trial_cache: dict = {}
_poincare_cache: dict = {}


def _rectangle_trials(dom: RectangleDomain):
    """Values and gradients of the trial family on a fixed quadrature grid.

    Returns (V, VX, VY, wq, Vg, wg) with V, VX, VY of shape (nfun, npts) on
    the area grid and Vg of shape (nfun, nbpts) on the Gamma quadrature
    points with weights wg.
    """
    key = (dom.width, dom.height, tuple(sorted(dom.gamma_edges)))
    if key in _trial_cache:
        return _trial_cache[key]

    W, H = dom.width, dom.height
    gx, gw = np.polynomial.legendre.leggauss(_PC_QUAD)
    xs = 0.5 * W * (gx + 1.0)
    ys = 0.5 * H * (gx + 1.0)
    wx = 0.5 * W * gw
    wy = 0.5 * H * gw
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Wq = np.outer(wx, wy)
    X, Y, Wq = X.ravel(), Y.ravel(), Wq.ravel()

    # Gamma quadrature points: per tagged edge
    bpts, bwts = [], []
    for edge in dom.gamma_edges:
        if edge in ("bottom", "top"):
            t = xs
            w = wx
            yv = 0.0 if edge == "bottom" else H
            bpts.append(np.column_stack([t, np.full_like(t, yv)]))
        else:
            t = ys
            w = wy
            xv = 0.0 if edge == "left" else W
            bpts.append(np.column_stack([np.full_like(t, xv), t]))
        bwts.append(w)
    BP = np.vstack(bpts)
    BW = np.concatenate(bwts)

    funcs = []  # (v, vx, vy) callables over arrays

    def add(v, vx, vy):
        funcs.append((v, vx, vy))

    add(lambda x, y: np.ones_like(x), lambda x, y: np.zeros_like(x),
        lambda x, y: np.zeros_like(x))

    for shift in (0.0, 0.5):
        for i in range(5):
            for j in range(5):
                if not 1 <= i + j <= 4:
                    continue
                def v(x, y, i=i, j=j, s=shift):
                    return (x / W - s) ** i * (y / H - s) ** j
                def vx(x, y, i=i, j=j, s=shift):
                    if i == 0:
                        return np.zeros_like(x)
                    return i / W * (x / W - s) ** (i - 1) * (y / H - s) ** j
                def vy(x, y, i=i, j=j, s=shift):
                    if j == 0:
                        return np.zeros_like(x)
                    return (x / W - s) ** i * j / H * (y / H - s) ** (j - 1)
                add(v, vx, vy)

    for i in range(4):
        for j in range(4):
            if (i, j) == (0, 0):
                continue
            a, b = i * math.pi / W, j * math.pi / H
            add(lambda x, y, a=a, b=b: np.cos(a * x) * np.cos(b * y),
                lambda x, y, a=a, b=b: -a * np.sin(a * x) * np.cos(b * y),
                lambda x, y, a=a, b=b: -b * np.cos(a * x) * np.sin(b * y))
    for i in range(1, 3):
        for j in range(1, 3):
            a, b = i * math.pi / W, j * math.pi / H
            add(lambda x, y, a=a, b=b: np.sin(a * x) * np.sin(b * y),
                lambda x, y, a=a, b=b: a * np.cos(a * x) * np.sin(b * y),
                lambda x, y, a=a, b=b: b * np.sin(a * x) * np.cos(b * y))
    for i in range(1, 3):
        for j in range(0, 2):
            a, b = i * math.pi / W, j * math.pi / H
            add(lambda x, y, a=a, b=b: np.sin(a * x) * np.cos(b * y),
                lambda x, y, a=a, b=b: a * np.cos(a * x) * np.cos(b * y),
                lambda x, y, a=a, b=b: -b * np.sin(a * x) * np.sin(b * y))
            add(lambda x, y, a=a, b=b: np.cos(a * x) * np.sin(b * y) if b else np.sin(a * y),
                lambda x, y, a=a, b=b: -a * np.sin(a * x) * np.sin(b * y) if b else np.zeros_like(x),
                lambda x, y, a=a, b=b: b * np.cos(a * x) * np.cos(b * y) if b else a * np.cos(a * y))

    V = np.vstack([f[0](X, Y) for f in funcs])
    VX = np.vstack([f[1](X, Y) for f in funcs])
    VY = np.vstack([f[2](X, Y) for f in funcs])
    Vg = np.vstack([f[0](BP[:, 0], BP[:, 1]) for f in funcs])

    # seeded random combinations widen the family beyond pure modes
    rng = np.random.default_rng(20210817)
    C = rng.standard_normal((6, V.shape[0]))
    V = np.vstack([V, C @ V])
    VX = np.vstack([VX, C @ VX])
    VY = np.vstack([VY, C @ VY])
    Vg = np.vstack([Vg, C @ Vg])

    out = (V, VX, VY, Wq, Vg, BW)
    _trial_cache[key] = out
    return out


def _interval_trials(dom: IntervalDomain):
    key = (dom.length, tuple(sorted(dom.gamma_ends)))
    ck = ("interval", key)
    if ck in _trial_cache:
        return _trial_cache[ck]
    L = dom.length
    gx, gw = np.polynomial.legendre.leggauss(_PC_QUAD)
    X = 0.5 * L * (gx + 1.0)
    Wq = 0.5 * L * gw
    ends = np.array([0.0 if e == "left" else L for e in dom.gamma_ends])

    funcs = [(lambda x: np.ones_like(x), lambda x: np.zeros_like(x))]
    for shift in (0.0, 0.5):
        for i in range(1, 5):
            funcs.append((lambda x, i=i, s=shift: (x / L - s) ** i,
                          lambda x, i=i, s=shift: i / L * (x / L - s) ** (i - 1)))
    for i in range(1, 5):
        a = i * math.pi / L
        funcs.append((lambda x, a=a: np.cos(a * x), lambda x, a=a: -a * np.sin(a * x)))
        funcs.append((lambda x, a=a: np.sin(a * x), lambda x, a=a: a * np.cos(a * x)))

    V = np.vstack([f[0](X) for f in funcs])
    VX = np.vstack([f[1](X) for f in funcs])
    Vg = np.vstack([f[0](ends) for f in funcs])
    rng = np.random.default_rng(20210817)
    C = rng.standard_normal((4, V.shape[0]))
    V, VX, Vg = np.vstack([V, C @ V]), np.vstack([VX, C @ VX]), np.vstack([Vg, C @ Vg])
    out = (V, VX, Vg)
    _trial_cache[ck] = out
    return out


def poincare_constant(domain, q: float) -> float:
    """Conservative Poincare constant P_q for the tagged-boundary inequality

        ||v||_q <= P_q ( sum_i ||d_i v||_q + |Gamma|^{1/q-1} |int_Gamma v ds| ).

    A user override on the domain descriptor is passed through verbatim.
    Computed values maximize the quotient over the trial family and carry the
    POINCARE_SAFETY inflation; they are conservative with respect to that
    family, which the tests validate independently.
    """
    if q < 1.0:
        raise DomainError(f"poincare_constant requires q >= 1, got {q!r}")
    override = getattr(domain, "override", None)
    if override is not None:
        return float(override)

    if isinstance(domain, RectangleDomain):
        key = (domain.width, domain.height, tuple(sorted(domain.gamma_edges)),
               round(q, 12))
        if key in _poincare_cache:
            return _poincare_cache[key]
        V, VX, VY, Wq, Vg, BW = _rectangle_trials(domain)
        gmeas = domain.gamma_measure
        num = (np.abs(V) ** q @ Wq) ** (1.0 / q)
        den = ((np.abs(VX) ** q @ Wq) ** (1.0 / q)
               + (np.abs(VY) ** q @ Wq) ** (1.0 / q)
               + gmeas ** (1.0 / q - 1.0) * np.abs(Vg @ BW))
        quot = num / np.maximum(den, 1e-300)
        p = POINCARE_SAFETY * float(np.max(quot))
        _poincare_cache[key] = p
        return p

    if isinstance(domain, IntervalDomain):
        key = ("interval", domain.length, tuple(sorted(domain.gamma_ends)),
               round(q, 12))
        if key in _poincare_cache:
            return _poincare_cache[key]
        V, VX, Vg = _interval_trials(domain)
        L = domain.length
        gx, gw = np.polynomial.legendre.leggauss(_PC_QUAD)
        Wq = 0.5 * L * gw
        gmeas = domain.gamma_measure
        num = (np.abs(V) ** q @ Wq) ** (1.0 / q)
        den = ((np.abs(VX) ** q @ Wq) ** (1.0 / q)
               + gmeas ** (1.0 / q - 1.0) * np.abs(Vg.sum(axis=1)))
        quot = num / np.maximum(den, 1e-300)
        p = POINCARE_SAFETY * float(np.max(quot))
        _poincare_cache[key] = p
        return p

    raise ConfigurationError(
        "unsupported domain shape without Poincare override: %r" % (domain,)
    )
