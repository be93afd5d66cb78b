"""Radial kernel profiles and their tail antiderivatives.

A kernel is a compactly supported radial profile R on [0, 1] together with
its tail integral barR(r) = integral of R from r to 1.  Every supported
family reduces to the closed form

    R(r)    = poly(r) * exp(-r)^g          on [0, 1],   0 beyond
    barR(r) = bar_const + bar_poly(r) * exp(-r)^g,      0 for r >= 1

with g in {0, 1}, so both evaluations are exact Horner sweeps and the
antiderivative pairing holds analytically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

# (1-r)^4 (4r+1) expanded in the power basis
_WENDLAND41 = (1.0, 0.0, -10.0, 20.0, -15.0, 4.0)


def _poly_antiderivative(coeffs):
    """Antiderivative coefficients of a power-basis polynomial (constant 0)."""
    c = np.asarray(coeffs, dtype=float)
    return np.concatenate([[0.0], c / (np.arange(len(c)) + 1.0)])


def _exp_poly_antiderivative(coeffs):
    """G with d/ds [-exp(-s) G(s)] = exp(-s) * poly(s).

    Uses integral of exp(-s) s^k = -exp(-s) k! sum_{j<=k} s^j / j!.
    """
    c = np.asarray(coeffs, dtype=float)
    deg = len(c) - 1
    g = np.zeros(deg + 1)
    for j in range(deg + 1):
        acc = 0.0
        for k in range(j, deg + 1):
            acc += c[k] * math.factorial(k) / math.factorial(j)
        g[j] = acc
    return g


def _horner(coeffs, x):
    acc = np.full_like(x, coeffs[-1], dtype=float)
    for c in coeffs[-2::-1]:
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class KernelSpec:
    """Immutable kernel description; safe to share across threads.

    ``delta0`` is the certified lower bound of R on [0, 1/2]; ``support``
    is always 1 (R vanishes for r > 1).
    """

    family: str
    coeffs: tuple
    gauss: bool
    delta0: float
    support: float = 1.0
    bar_const: float = field(init=False, default=0.0)
    bar_coeffs: tuple = field(init=False, default=())

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if self.gauss:
            g = _exp_poly_antiderivative(c)
            # barR(r) = -e^{-1} G(1) + e^{-r} G(r)
            const = -math.exp(-1.0) * _horner(g, np.array(1.0))
            bar = tuple(g)
        else:
            p = _poly_antiderivative(c)
            const = float(_horner(p, np.array(1.0)))
            bar = tuple(-p)
        object.__setattr__(self, "bar_const", float(const))
        object.__setattr__(self, "bar_coeffs", bar)

    def scaled(self, c: float) -> "KernelSpec":
        """Kernel c*R (and hence c*barR); used by scaling-invariance checks."""
        if c <= 0:
            raise InvalidArgumentError("scale factor must be positive")
        return KernelSpec(
            family=f"{self.family}*{c:g}",
            coeffs=tuple(c * x for x in self.coeffs),
            gauss=self.gauss,
            delta0=c * self.delta0,
        )


def wendland41() -> KernelSpec:
    """Default kernel (1-r)^4 (4r+1): C^2 across r=1, delta0 = 3/16 exactly."""
    return KernelSpec("wendland41", _WENDLAND41, gauss=False, delta0=3.0 / 16.0)


def truncated_gaussian_smoothed() -> KernelSpec:
    """exp(-r) windowed by the wendland41 bump so the cut at r=1 stays C^2."""
    return KernelSpec(
        "truncated-gaussian-smoothed",
        _WENDLAND41,
        gauss=True,
        delta0=math.exp(-0.5) * 3.0 / 16.0,
    )


def polynomial_kernel(coeffs, delta0=None) -> KernelSpec:
    """User-supplied power-basis polynomial profile on [0, 1]."""
    coeffs = tuple(float(c) for c in coeffs)
    if not coeffs:
        raise InvalidArgumentError("polynomial kernel needs at least one coefficient")
    if delta0 is None:
        r = np.linspace(0.0, 0.5, 2049)
        delta0 = float(np.min(_horner(np.asarray(coeffs), r)))
    return KernelSpec("poly", coeffs, gauss=False, delta0=delta0)


_FAMILIES = {
    "wendland41": wendland41,
    "truncated-gaussian-smoothed": truncated_gaussian_smoothed,
}


def kernel_by_name(family: str, coeffs=None) -> KernelSpec:
    if family == "poly":
        if coeffs is None:
            raise InvalidArgumentError("family 'poly' requires a coefficient list")
        return polynomial_kernel(coeffs)
    try:
        return _FAMILIES[family]()
    except KeyError:
        raise InvalidArgumentError(
            f"unknown kernel family {family!r}; expected one of "
            f"{sorted(_FAMILIES) + ['poly']}"
        ) from None


def eval_R(spec: KernelSpec, r):
    """R(r); exactly 0 for r > 1, clamped at 0 against rounding."""
    r = np.asarray(r, dtype=float)
    v = _horner(np.asarray(spec.coeffs), r)
    if spec.gauss:
        v = v * np.exp(-r)
    v = np.where(r > 1.0, 0.0, np.maximum(v, 0.0))
    return v if v.ndim else float(v)


def eval_barR(spec: KernelSpec, r):
    """barR(r) = integral of R over [r, 1]; exactly 0 for r >= 1."""
    r = np.asarray(r, dtype=float)
    v = _horner(np.asarray(spec.bar_coeffs), r)
    if spec.gauss:
        v = v * np.exp(-r)
    v = spec.bar_const + v
    v = np.where(r >= 1.0, 0.0, np.maximum(v, 0.0))
    return v if v.ndim else float(v)


@dataclass
class ClauseResult:
    name: str
    passed: bool
    witness: float | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    clauses: list
    measured_delta0: float
    c2_jumps: tuple  # (value, first, second derivative) mismatch across r=1
    antiderivative_residual: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    def lines(self):
        out = []
        for c in self.clauses:
            state = "pass" if c.passed else "FAIL"
            extra = f" [witness r={c.witness:.6g}]" if c.witness is not None else ""
            out.append(f"clause ({c.name}): {state} {c.detail}{extra}")
        out.append(f"measured delta0 on [0,1/2]: {self.measured_delta0:.8g}")
        out.append(
            "C2 jumps at r=1 (value, R', R''): "
            + ", ".join(f"{j:.3g}" for j in self.c2_jumps)
        )
        out.append(f"antiderivative residual: {self.antiderivative_residual:.3g}")
        return out


# One-sided difference step and acceptance threshold for the C^2 check;
# 1e-3 at h=1e-4 sits well above stencil noise for sane coefficients.
_C2_STEP = 1e-4
_C2_TOL = 1e-3


def validate_kernel(spec: KernelSpec, grid_points: int = 512) -> ValidationReport:
    """Check the admissibility clauses (a) R in C^2, (b) R >= 0 with support
    in [0,1], (c) R >= delta0 on [0, 1/2].

    Failures are report entries, never exceptions.
    """
    if grid_points < 100:
        raise InvalidArgumentError("grid_points must be >= 100")

    grid = np.linspace(0.0, 2.0, 2 * grid_points + 1)
    vals = eval_R(spec, grid)
    scale = max(1.0, float(vals.max()))

    # (a) continuity of R, R', R'' across the support boundary r = 1
    h = _C2_STEP
    f0 = float(eval_R(spec, 1.0))
    fm = [float(eval_R(spec, 1.0 - k * h)) for k in (1, 2, 3)]
    d1 = (3.0 * f0 - 4.0 * fm[0] + fm[1]) / (2.0 * h)
    d2 = (2.0 * f0 - 5.0 * fm[0] + 4.0 * fm[1] - fm[2]) / h**2
    jumps = (abs(f0), abs(d1), abs(d2))  # right limits are identically 0
    a_ok = all(j <= _C2_TOL * scale for j in jumps)
    worst = int(np.argmax(jumps))
    clause_a = ClauseResult(
        "a",
        a_ok,
        witness=None if a_ok else 1.0,
        detail=f"max C2 jump {max(jumps):.3g}"
        + ("" if a_ok else f" in derivative order {worst}"),
    )

    # (b) nonnegativity and compact support
    neg = np.where(vals < -1e-12 * scale)[0]
    # support violation can only come from a user profile evaluated past 1;
    # eval_R clamps it, so witness negativity on [0, 1] only.
    b_ok = neg.size == 0
    clause_b = ClauseResult(
        "b",
        b_ok,
        witness=None if b_ok else float(grid[neg[0]]),
        detail="R >= 0 and R = 0 beyond r = 1"
        if b_ok
        else f"negative value {vals[neg[0]]:.3g}",
    )
    # negativity on [0,1] is masked by the eval clamp; measure the raw profile
    raw = _horner(np.asarray(spec.coeffs), grid[grid <= 1.0])
    if spec.gauss:
        raw = raw * np.exp(-grid[grid <= 1.0])
    neg_raw = np.where(raw < -1e-12 * scale)[0]
    if clause_b.passed and neg_raw.size:
        clause_b = ClauseResult(
            "b",
            False,
            witness=float(grid[grid <= 1.0][neg_raw[0]]),
            detail=f"negative value {raw[neg_raw[0]]:.3g}",
        )

    # (c) lower bound on [0, 1/2]
    half = np.linspace(0.0, 0.5, grid_points)
    measured = float(np.min(eval_R(spec, half)))
    c_ok = measured > 0.0 and measured >= spec.delta0 * (1.0 - 1e-9)
    clause_c = ClauseResult(
        "c",
        c_ok,
        witness=None if c_ok else float(half[np.argmin(eval_R(spec, half))]),
        detail=f"min R on [0,1/2] = {measured:.6g} vs declared delta0 = {spec.delta0:.6g}",
    )

    # antiderivative consistency against adaptive quadrature
    from scipy.integrate import quad

    rs = np.linspace(0.0, 1.0, 33)
    resid = 0.0
    for r in rs:
        q, _ = quad(lambda s: eval_R(spec, s), r, 1.0, limit=200)
        resid = max(resid, abs(float(eval_barR(spec, r)) - q))

    return ValidationReport(
        clauses=[clause_a, clause_b, clause_c],
        measured_delta0=measured,
        c2_jumps=jumps,
        antiderivative_residual=resid,
    )
