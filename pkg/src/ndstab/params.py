"""Scalar bounds feeding the stability tests.

``summarize`` extracts sup/inf norms of the coefficients, the sign-split
norms of the neutral coefficient, and the delay bounds; ``integral_summary``
bounds the integrals of b over the delay intervals (the quantities used by
the unbounded-delay test).  Every field is either an analytic override taken
from the spec file or a grid estimate, and the provenance is recorded so
that downstream verdicts can be labeled "certified" vs "numerically
supported".

Sign convention: for any u, u+ = max(u, 0) and u- = max(-u, 0), so that
u = u+ - u- pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eqspec import EquationSpec

GRID_ESTIMATE = "grid-estimate"
ANALYTIC = "analytic-override"

DEFAULT_GRID = 100_000
DEFAULT_PANELS = 2048


class SummaryError(ValueError):
    """Summary invariants cannot be met (e.g. b not positive on the window)."""


class QuadratureError(ValueError):
    """No admissible sample points for an integral bound."""


@dataclass(frozen=True)
class ParameterSummary:
    """Norms, infima and delay bounds over the analysis window.

    ``provenance`` maps each field name to "analytic-override" or
    "grid-estimate".  ``limit_tau`` (the limit of t - h(t), when it exists)
    is never grid-estimated: a limit cannot be confirmed by finite sampling,
    so it is populated only from an analytic override.
    """

    norm_a: float
    inf_a: float
    norm_a_plus: float
    norm_a_minus: float
    norm_b: float
    inf_b: float
    sigma: float
    tau: float
    delta: float
    limit_tau: float | None = None
    limsup_int_b: float | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.norm_a < 1.0):
            raise SummaryError(f"norm_a must lie in [0, 1), got {self.norm_a}")
        if not (0.0 < self.inf_b <= self.norm_b):
            raise SummaryError(f"need 0 < inf_b <= norm_b, got {self.inf_b}, {self.norm_b}")
        if not (0.0 <= self.delta <= self.tau):
            raise SummaryError(f"need 0 <= delta <= tau, got {self.delta}, {self.tau}")
        if self.sigma < 0.0:
            raise SummaryError(f"sigma must be >= 0, got {self.sigma}")

    def certified(self, fields: tuple[str, ...]) -> bool:
        return all(self.provenance.get(f) == ANALYTIC for f in fields)

    def to_dict(self) -> dict:
        out = {
            "norm_a": self.norm_a,
            "inf_a": self.inf_a,
            "norm_a_plus": self.norm_a_plus,
            "norm_a_minus": self.norm_a_minus,
            "norm_b": self.norm_b,
            "inf_b": self.inf_b,
            "sigma": self.sigma,
            "tau": self.tau,
            "delta": self.delta,
            "limit_tau": self.limit_tau,
            "limsup_int_b": self.limsup_int_b,
            "provenance": dict(self.provenance),
            # reading of the sign-split definition; see module docstring
            "sign_split_convention": "u- = max(-u, 0)",
        }
        return out


@dataclass(frozen=True)
class IntegralSummary:
    """Bounds on the integrals of b over the delay intervals.

    tilde_delta <= int_{h(t)}^t b <= tilde_tau and int_{g(t)}^t b <=
    tilde_sigma on the sampled window; tilde_tau0 = (1 - norm_a)/e exactly.
    """

    tilde_delta: float
    tilde_tau: float
    tilde_sigma: float
    tilde_tau0: float
    norm_a: float
    inf_a: float
    provenance: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if not (0.0 <= self.tilde_delta <= self.tilde_tau):
            raise SummaryError(
                f"need 0 <= tilde_delta <= tilde_tau, got {self.tilde_delta}, {self.tilde_tau}")
        if self.tilde_sigma < 0.0:
            raise SummaryError(f"tilde_sigma must be >= 0, got {self.tilde_sigma}")

    def certified(self, fields: tuple[str, ...]) -> bool:
        return all(self.provenance.get(f) == ANALYTIC for f in fields)

    def to_dict(self) -> dict:
        return {
            "tilde_delta": self.tilde_delta,
            "tilde_tau": self.tilde_tau,
            "tilde_sigma": self.tilde_sigma,
            "tilde_tau0": self.tilde_tau0,
            "norm_a": self.norm_a,
            "inf_a": self.inf_a,
            "provenance": dict(self.provenance),
            "notes": list(self.notes),
        }


def summarize(spec: EquationSpec, grid_points: int = DEFAULT_GRID) -> ParameterSummary:
    """Extract the scalar bounds, preferring analytic overrides.

    Grid extrema can under-estimate suprema and over-estimate infima; the
    per-field provenance lets callers distinguish certified bounds from
    sampled ones.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    ts = spec.grid(grid_points)
    av = spec.a.eval_array(ts)
    bv = spec.b.eval_array(ts)
    lag_g = ts - spec.g.eval_array(ts)
    lag_h = ts - spec.h.eval_array(ts)

    ov = spec.overrides
    prov: dict[str, str] = {}

    def pick(name: str, estimate: float) -> float:
        if name in ov:
            prov[name] = ANALYTIC
            return float(ov[name])
        prov[name] = GRID_ESTIMATE
        return float(estimate)

    norm_a = pick("norm_a", np.max(np.abs(av)))
    inf_a = pick("inf_a", np.min(av))
    norm_a_plus = pick("norm_a_plus", np.max(np.maximum(av, 0.0)))
    norm_a_minus = pick("norm_a_minus", np.max(np.maximum(-av, 0.0)))
    norm_b = pick("norm_b", np.max(bv))
    inf_b = pick("inf_b", np.min(bv))
    sigma = pick("sigma", np.max(lag_g))
    tau = pick("tau", np.max(lag_h))
    delta = pick("delta", np.min(lag_h))

    limit_tau = None
    if "limit_tau" in ov:
        limit_tau = float(ov["limit_tau"])
        prov["limit_tau"] = ANALYTIC

    limsup_int_b = None
    if "limsup_int_b" in ov:
        limsup_int_b = float(ov["limsup_int_b"])
        prov["limsup_int_b"] = ANALYTIC

    if inf_b <= 0.0:
        raise SummaryError(f"b must stay positive on the window; estimated inf b = {inf_b}")

    return ParameterSummary(
        norm_a=norm_a, inf_a=inf_a,
        norm_a_plus=norm_a_plus, norm_a_minus=norm_a_minus,
        norm_b=norm_b, inf_b=inf_b,
        sigma=sigma, tau=tau, delta=delta,
        limit_tau=limit_tau, limsup_int_b=limsup_int_b,
        provenance=prov,
    )


def simpson(expr, lo: float, hi: float, panels: int = DEFAULT_PANELS) -> float:
    """Composite Simpson quadrature of an expression over [lo, hi].

    ``panels`` counts subintervals (rounded up to even).  Summation is
    numpy's pairwise reduction, so the result does not depend on any
    threading or chunk order.
    """
    if hi < lo:
        raise ValueError("empty or reversed integration range")
    if hi == lo:
        return 0.0
    n = panels + (panels % 2)
    xs = np.linspace(lo, hi, n + 1)
    ys = expr.eval_array(xs)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((hi - lo) / (3.0 * n) * np.sum(w * ys))


def integral_summary(
    spec: EquationSpec,
    quadrature_points: int = DEFAULT_PANELS,
    t_samples: int = 513,
) -> IntegralSummary:
    """Bound int_{h(t)}^t b and int_{g(t)}^t b over a grid of t.

    Sample points whose delay argument falls before t0 (no b there) are
    skipped and noted.  Analytic overrides win over quadrature estimates.
    """
    ts = spec.grid(t_samples)
    hv = spec.h.eval_array(ts)
    gv = spec.g.eval_array(ts)

    ov = spec.overrides
    prov: dict[str, str] = {}
    notes: list[str] = []

    need_h = not ({"tilde_tau", "tilde_delta"} <= set(ov))
    need_g = "tilde_sigma" not in ov

    int_h = []
    if need_h:
        mask = hv >= spec.t0
        skipped = int(np.sum(~mask))
        if skipped:
            notes.append(f"skipped {skipped} sample(s) with h(t) < t0 for the h-integral")
        if not np.any(mask):
            raise QuadratureError("h(t) < t0 at every sample; no admissible range for the h-integral")
        int_h = [simpson(spec.b, float(hv[i]), float(ts[i]), quadrature_points)
                 for i in np.nonzero(mask)[0]]

    int_g = []
    if need_g:
        mask = gv >= spec.t0
        skipped = int(np.sum(~mask))
        if skipped:
            notes.append(f"skipped {skipped} sample(s) with g(t) < t0 for the g-integral")
        if not np.any(mask):
            raise QuadratureError("g(t) < t0 at every sample; no admissible range for the g-integral")
        int_g = [simpson(spec.b, float(gv[i]), float(ts[i]), quadrature_points)
                 for i in np.nonzero(mask)[0]]

    def pick(name: str, estimate) -> float:
        if name in ov:
            prov[name] = ANALYTIC
            return float(ov[name])
        prov[name] = GRID_ESTIMATE
        return float(estimate())

    tilde_tau = pick("tilde_tau", lambda: max(int_h))
    tilde_delta = pick("tilde_delta", lambda: min(int_h))
    tilde_sigma = pick("tilde_sigma", lambda: max(int_g))

    if "norm_a" in ov:
        norm_a = float(ov["norm_a"])
        prov["norm_a"] = ANALYTIC
    else:
        norm_a = float(np.max(np.abs(spec.a.eval_array(ts))))
        prov["norm_a"] = GRID_ESTIMATE
    if "inf_a" in ov:
        inf_a = float(ov["inf_a"])
        prov["inf_a"] = ANALYTIC
    else:
        inf_a = float(np.min(spec.a.eval_array(ts)))
        prov["inf_a"] = GRID_ESTIMATE

    tilde_tau0 = (1.0 - norm_a) / math.e
    prov["tilde_tau0"] = prov["norm_a"]

    return IntegralSummary(
        tilde_delta=tilde_delta, tilde_tau=tilde_tau, tilde_sigma=tilde_sigma,
        tilde_tau0=tilde_tau0, norm_a=norm_a, inf_a=inf_a,
        provenance=prov, notes=tuple(notes),
    )


def estimate_limsup_int_b(
    spec: EquationSpec,
    window: float,
    t_samples: int = 257,
    panels: int = DEFAULT_PANELS,
) -> float:
    """Grid estimate of limsup_t int_{t-window}^t b, over the window tail.

    Uses the last half of [t0, horizon]; an analytic override is preferable
    whenever available (the estimate is flagged as such by callers).
    """
    lo = 0.5 * (spec.t0 + spec.horizon)
    lo = max(lo, spec.t0 + window)
    if lo >= spec.horizon:
        lo = spec.t0 + window
    if lo > spec.horizon:
        raise QuadratureError("window longer than the analysis horizon")
    ts = np.linspace(lo, spec.horizon, t_samples)
    vals = [simpson(spec.b, float(t - window), float(t), panels) for t in ts]
    return float(max(vals))
