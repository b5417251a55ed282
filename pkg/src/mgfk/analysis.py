"""Checks of the spectral and contraction bounds against measured values.

Everything here is one-sided: a bound report is satisfied when the measured
quantity does not exceed the theoretical bound (within a small slack).  The
bounds are sufficient conditions, so no tightness is ever asserted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import multigrid as vc
from .coarsen import c_constant, closed_form_constants, closed_form_tridiag
from .errors import EligibilityError
from .stencil import (
    IDENTITY,
    LAPLACIAN,
    TensorOperator2D,
    ToeplitzStencil,
    largest_eigenvalue,
    lambda_max,
)

_SLACK = 1e-10


@dataclass
class BoundReport:
    """One measured-versus-bound comparison."""

    quantity: str
    bound: float
    measured: float
    satisfied: bool = field(init=False)
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        self.satisfied = self.measured <= self.bound + _SLACK

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "bound": self.bound,
            "measured": self.measured,
            "satisfied": self.satisfied,
            "context": self.context,
        }


def format_reports(reports: list[BoundReport]) -> str:
    lines = [f"{'quantity':<44} {'measured':>14} {'bound':>14}  status"]
    for r in reports:
        status = "ok" if r.satisfied else "VIOLATED"
        ctx = " ".join(f"{k}={v}" for k, v in r.context.items())
        lines.append(f"{r.quantity:<44} {r.measured:>14.6e} {r.bound:>14.6e}  {status}  {ctx}")
    return "\n".join(lines)


def reports_to_json(reports: list[BoundReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)


def _check_tridiag_args(a0: float, a1: float) -> None:
    if a0 <= 0.0 or a0 < 2.0 * abs(a1) * (1.0 - 1e-15):
        raise EligibilityError(f"(a0, a1) = ({a0}, {a1}) is not SPD-eligible")
    if a1 > 0.0 and abs(a0 - 2.0 * a1) <= 1e-12 * a0:
        raise EligibilityError(
            "a0 == 2*a1 with a1 > 0: the averaging-transfer theory degenerates here"
        )


def split_ratio(a0: float, a1: float, k: int) -> float:
    """Ratio of averaging-part to Laplacian-part weight of the level-k stencil."""
    c = float(c_constant(k))
    half = 2.0 ** (k - 1)
    num = (6.0 * c + half) * (a0 + 2.0 * a1)
    den = (2.0 * c + half) * (a0 + 2.0 * a1) - 2.0 ** (k + 1) * a1
    return num / den


def approx_constant_sweep(a0: float, a1: float, k_max: int = 64) -> float:
    """sup over levels k = 1..k_max of (1 + split_ratio)**2.

    The ratio converges monotonically (it is a quotient of cubics in 2**k),
    so 64 levels over-cover any buildable hierarchy.
    """
    _check_tridiag_args(a0, a1)
    best = max(split_ratio(a0, a1, k) for k in range(1, k_max + 1))
    return (1.0 + best) ** 2


def approx_constant_tridiag(a0: float, a1: float) -> float:
    """Approximation-property constant of tridiag(a1, a0, a1) in closed form.

    Case values:

    * 1 when a0 + 2*a1 == 0 (pure second difference),
    * 16 when a1 <= 0,
    * max(25, 4*a0**2 / (a0 - 2*a1)**2) when a1 > 0.

    The closed value bounds the level sweep from above; it is attained in
    the first two cases and whenever the level-1 ratio dominates, and is
    deliberately conservative otherwise.  A sweep value exceeding the case
    value would indicate a broken formula and raises ``ArithmeticError``.
    """
    _check_tridiag_args(a0, a1)
    if abs(a0 + 2.0 * a1) <= 1e-14 * a0:
        case = 1.0
    elif a1 <= 0.0:
        case = 16.0
    else:
        case = max(25.0, 4.0 * a0 * a0 / (a0 - 2.0 * a1) ** 2)
    swept = approx_constant_sweep(a0, a1)
    if swept > case * (1.0 + 1e-9):
        raise ArithmeticError(
            f"level sweep {swept} exceeds closed-form constant {case} for ({a0}, {a1})"
        )
    return case


def contraction_bound(approx_const: float, smoothing_steps: int, omega: float) -> float:
    """Energy-norm contraction bound m0 / (2 * l * omega + m0) < 1."""
    return approx_const / (2.0 * smoothing_steps * omega + approx_const)


def mu_decomposition(a0: float, a1: float, k: int) -> tuple[float, float]:
    """Split the level-k coarse stencil into mu1 * tridiag(-1, 2, -1) +
    mu2 * tridiag(1, 2, 1); mu1 > 0 and mu2 >= 0 for eligible input."""
    c = float(c_constant(k))
    half = 2.0 ** (k - 1)
    scale = 4.0 * 8.0 ** (k - 1)
    mu1 = (2.0 * c * (a0 + 2.0 * a1) + half * (a0 - 2.0 * a1)) / scale
    mu2 = (6.0 * c + half) * (a0 + 2.0 * a1) / scale
    return mu1, mu2


def _is_model_2d(op: TensorOperator2D) -> bool:
    return op.mass.bands == IDENTITY.bands and op.stiff.bands == LAPLACIAN.bands


def check_smoother_bounds(h: vc.MgHierarchy, tol: float = 1e-10, seed: int = 0) -> list[BoundReport]:
    """Per level: Jacobi spectral radius checks lambda_max(D^-1 A) in [1, 2)
    for 1D stencils and [1, 4) in 2D, plus the eta1/eta2 refinement for
    Galerkin hierarchies of the 2D model operator."""
    reports = []
    model_2d = (
        h.ndim == 2
        and h.strategy == "galerkin"
        and isinstance(h.fine.operator, TensorOperator2D)
        and _is_model_2d(h.fine.operator)
    )
    c1 = h.fine.operator.c_mass if model_2d else None
    c2 = h.fine.operator.c_stiff if model_2d else None

    for d, lv in enumerate(h.levels):
        ctx = {"level": d, "m": lv.m}
        if isinstance(lv.operator, ToeplitzStencil):
            est, _ = lambda_max(lv.operator, lv.m, tol=tol, seed=seed)
            ratio = est / lv.diag
            reports.append(BoundReport("lambda_max(D^-1 A) < 2", 2.0, ratio, context=ctx))
            reports.append(BoundReport("1 <= lambda_max(D^-1 A)", 0.0, 1.0 - ratio, context=ctx))
        else:
            est = largest_eigenvalue(lv.operator.apply, lv.m * lv.m, tol=tol, seed=seed)
            ratio = est / lv.diag
            reports.append(BoundReport("lambda_max(D^-1 A) < 4", 4.0, ratio, context=ctx))
            reports.append(BoundReport("1 <= lambda_max(D^-1 A)", 0.0, 1.0 - ratio, context=ctx))
            if model_2d:
                t = closed_form_constants(d + 1)
                eta1 = c1 * (3 * t.theta1 - 2 * t.theta2) ** 2 + 8 * c2 * (
                    3 * t.theta1 - 2 * t.theta2
                ) * t.theta2
                eta2 = c1 * (2 * t.theta1 - t.theta2) ** 2 + 4 * c2 * (
                    2 * t.theta1 - t.theta2
                ) * t.theta2
                ctx2 = dict(ctx, eta1=eta1, eta2=eta2)
                reports.append(
                    BoundReport("lambda_max(D^-1 A) <= eta1/eta2", eta1 / eta2, ratio, context=ctx2)
                )
                reports.append(BoundReport("eta1/eta2 < 4", 4.0, eta1 / eta2, context=ctx2))
    return reports


def check_contraction_bounds(
    h: vc.MgHierarchy,
    approx_const: float,
    smoothing_steps: int = 1,
    trials: int = 4,
    iters: int = 12,
    seed: int = 0,
) -> BoundReport:
    """Compare the measured energy-norm contraction with the theory bound.

    The hierarchy must use equal pre- and post-weights.  A weight outside
    the theory range (1/2 in 1D, 1/4 in 2D) flags the report's context as
    out of range instead of raising.
    """
    if h.omega_pre != h.omega_post:
        raise ValueError("bound checks require omega_pre == omega_post")
    omega = h.omega_pre
    limit = 0.5 if h.ndim == 1 else 0.25
    in_range = 0.0 < omega <= limit
    measured = vc.measure_contraction(h, trials=trials, iters=iters, seed=seed)
    bound = contraction_bound(approx_const, smoothing_steps, omega)
    return BoundReport(
        "||I - B A||_A <= m0/(2*l*omega + m0)",
        bound,
        measured,
        context={
            "omega": omega,
            "l": smoothing_steps,
            "m0": approx_const,
            "in_theory_range": in_range,
        },
    )


def coarsening_consistency(samples: int = 50, max_depth: int = 6, seed: int = 0) -> BoundReport:
    """Max relative gap between repeated Galerkin steps and the closed form
    over random SPD-eligible tridiagonal stencils."""
    from .coarsen import galerkin_step

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        a0 = rng.uniform(0.5, 10.0)
        a1 = rng.uniform(-0.5, 0.5) * a0
        if a1 > 0 and a0 - 2 * a1 < 1e-3 * a0:
            a1 = -a1
        stepped = ToeplitzStencil((a0, a1))
        for k in range(2, max_depth + 1):
            stepped = galerkin_step(stepped)
            closed = closed_form_tridiag(a0, a1, k)
            scale = max(abs(closed.bands[0]), abs(closed.bands[1]), 1e-300)
            gap = max(
                abs(stepped.bands[0] - closed.bands[0]),
                abs(stepped.bands[1] - closed.bands[1]),
            )
            worst = max(worst, gap / scale)
    return BoundReport(
        "galerkin recursion vs closed form (rel err)",
        1e-12,
        worst,
        context={"samples": samples, "max_depth": max_depth},
    )
