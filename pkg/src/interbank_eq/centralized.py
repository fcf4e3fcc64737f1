"""Social planner's equilibrium via block coordinate descent.

With logarithmic utility the planner's problem separates per bank into

    h_i(c, w) = -r c + (n-1) mu w - theta Fbar(c) [Gamma(eta;1) + (n-1) Gamma(phi w;1)]

over c >= 0, w in [0, 1/phi).  Each block maximization is exact and
closed-form, so the solver alternates them.  The map c -> c*(w*(c)) is
monotone and grows only logarithmically, which makes the fixed points
easy to enumerate: the corner (decentralized cash, w = 0) and at most
one attracting interior point, found by starting the iteration above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decentralized import solve_cash
from .errors import InfiniteCash, NonConvergence, UnsupportedUtility
from .model import (
    Allocation,
    BankParams,
    Diagnostics,
    EquilibriumResult,
    SystemParams,
    gamma_loss,
    validate_system,
)
from .shocks import check_density_condition

# Objectives closer than this are treated as tied between distinct
# control candidates, which flags possible non-uniqueness.
_TIE_OBJECTIVE = 1e-8
_TIE_CONTROLS = 1e-4


@dataclass(frozen=True)
class BcdSettings:
    tol: float = 1e-12
    max_iter: int = 10_000
    init: str = "decentralized"  # or "zero"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.init not in ("decentralized", "zero"):
            raise ValueError("init must be 'decentralized' or 'zero'")


def optimal_w_given_c(bank: BankParams, c: float) -> float:
    """Exact maximizer of the w-block: (1/phi)(1 - phi theta Fbar(c)/mu),
    floored at the no-shorting corner."""
    ratio = bank.phi * bank.theta * bank.shock.ccdf(c) / bank.mu
    if ratio >= 1.0:
        return 0.0
    return (1.0 - ratio) / bank.phi


def optimal_c_given_w(bank: BankParams, w: float, n: int, r: float) -> float:
    """Exact maximizer of the c-block: the density inverse at
    r / (theta [Gamma(eta;1) + (n-1) Gamma(phi w;1)]), or the zero corner."""
    if r == 0.0:
        raise InfiniteCash("r = 0 makes cash free; optimal reserves are unbounded")
    total = gamma_loss(bank.eta, 1.0) + (n - 1) * gamma_loss(bank.phi * w, 1.0)
    level = r / (bank.theta * total)
    if level >= bank.shock.pdf_at_zero:
        return 0.0
    return bank.shock.pdf_inverse(level)


def planner_objective(bank: BankParams, n: int, r: float, c: float, w: float) -> float:
    """h_i(c, w); the eta mu/phi constant is omitted (control-free)."""
    fbar = bank.shock.ccdf(c)
    loss = gamma_loss(bank.eta, 1.0) + (n - 1) * gamma_loss(bank.phi * w, 1.0)
    jump = 0.0 if fbar < 1e-300 else bank.theta * fbar * loss
    return -r * c + (n - 1) * bank.mu * w - jump


@dataclass
class PlannerBankSolution:
    cash: float
    weight: float
    iterations: int
    objective: float
    corner_objective: float
    foc_residual_cash: float
    foc_residual_weight: float
    candidates: list[tuple[float, float, float]] = field(default_factory=list)
    near_tie: bool = False


def _bcd_from(bank, n, r, c0, settings):
    c = c0
    w_prev = math.inf
    for it in range(1, settings.max_iter + 1):
        w = optimal_w_given_c(bank, c)
        c_next = optimal_c_given_w(bank, w, n, r)
        delta = max(abs(c_next - c), abs(w - w_prev))
        c, w_prev = c_next, w
        if delta < settings.tol:
            return c, w_prev, it
    raise NonConvergence(
        f"BCD did not converge in {settings.max_iter} iterations", last_iterate=(c, w_prev)
    )


def _interior_probe_start(bank, n, r, c_hat):
    """A cash level at or above the largest fixed point of c -> c*(w*(c)).

    The map grows logarithmically, so doubling terminates quickly; the cap
    guards against survival-function underflow for absurd inputs.
    """
    scale = bank.shock.scale
    c0 = max(c_hat, 1.0) + scale
    cap = scale * (600.0 + 40.0 * math.log(max(n, 2)))
    for _ in range(200):
        t = optimal_c_given_w(bank, optimal_w_given_c(bank, c0), n, r)
        if t < c0 or c0 > cap:
            break
        c0 = 2.0 * c0 + scale
    return min(c0, cap)


def _foc_residuals(bank, n, r, c, w):
    res_c = 0.0
    if c > 0.0:
        total = gamma_loss(bank.eta, 1.0) + (n - 1) * gamma_loss(bank.phi * w, 1.0)
        res_c = r - bank.theta * bank.shock.pdf(c) * total
    res_w = 0.0
    if w > 0.0:
        res_w = bank.mu - bank.phi * bank.theta * bank.shock.ccdf(c) / (1.0 - bank.phi * w)
    return res_c, res_w


def solve_planner_bank(
    bank: BankParams, n: int, r: float, settings: BcdSettings | None = None
) -> PlannerBankSolution:
    """Planner's (c_i*, w_.i*) for one bank's separable subproblem.

    Enumerates the per-bank regimes: BCD from the configured init, the pure
    corner (decentralized cash, w = 0), and BCD from above the largest
    fixed point.  Returns the candidate with the highest objective and
    flags near-ties between distinct candidates.
    """
    if abs(bank.gamma - 1.0) > 1e-12:
        raise UnsupportedUtility("planner subproblem requires gamma = 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    settings = settings or BcdSettings()

    c_hat = solve_cash(bank, r)
    corner = (c_hat, 0.0, planner_objective(bank, n, r, c_hat, 0.0))

    candidates = [corner]
    iterations = 0

    init = c_hat if settings.init == "decentralized" else 0.0
    c_a, w_a, it_a = _bcd_from(bank, n, r, init, settings)
    iterations = max(iterations, it_a)
    candidates.append((c_a, w_a, planner_objective(bank, n, r, c_a, w_a)))

    if w_a == 0.0:
        # the init landed in the corner basin; probe the interior regime
        c0 = _interior_probe_start(bank, n, r, c_hat)
        c_b, w_b, it_b = _bcd_from(bank, n, r, c0, settings)
        iterations = max(iterations, it_b)
        if w_b > 0.0:
            candidates.append((c_b, w_b, planner_objective(bank, n, r, c_b, w_b)))

    best = max(candidates, key=lambda t: t[2])
    near_tie = any(
        abs(t[2] - best[2]) < _TIE_OBJECTIVE
        and max(abs(t[0] - best[0]), abs(t[1] - best[1])) > _TIE_CONTROLS
        for t in candidates
    )
    res_c, res_w = _foc_residuals(bank, n, r, best[0], best[1])
    return PlannerBankSolution(
        cash=best[0],
        weight=best[1],
        iterations=iterations,
        objective=best[2],
        corner_objective=corner[2],
        foc_residual_cash=res_c,
        foc_residual_weight=res_w,
        candidates=candidates,
        near_tie=near_tie,
    )


@dataclass(frozen=True)
class UniquenessCheck:
    density_ok: bool
    gamma_ok: bool
    c_tilde: float
    threshold: float

    @property
    def ok(self) -> bool:
        return self.density_ok and self.gamma_ok


def check_uniqueness_conditions(bank: BankParams, n: int, r: float) -> UniquenessCheck:
    """Sufficient conditions for a unique planner optimum for this bank.

    Requires the density shape condition and Gamma(eta;1) to strictly
    exceed a case-split threshold built at c~ = F^{-1}([1 - mu/(phi theta)]+).
    The conditions are sufficient, not necessary.
    """
    density = check_density_condition(bank.shock)
    p = 1.0 - bank.mu / (bank.phi * bank.theta)
    c_tilde = bank.shock.cdf_inverse(p) if p > 0.0 else 0.0
    f = bank.shock.pdf(c_tilde)
    fp = bank.shock.pdf_derivative(c_tilde)
    if c_tilde == 0.0:
        log_ratio = math.log(bank.phi * bank.theta / bank.mu)
        t1 = (n - 1) * (log_ratio - f * f / fp)
        t2 = r / (bank.theta * f) + (n - 1) * log_ratio
    else:
        t1 = -(n - 1) * bank.phi * bank.theta * f * f / (bank.mu * fp)
        t2 = r / (bank.theta * f)
    threshold = min(t1, t2)
    gamma_ok = gamma_loss(bank.eta, 1.0) > threshold
    return UniquenessCheck(
        density_ok=density.ok, gamma_ok=gamma_ok, c_tilde=c_tilde, threshold=threshold
    )


def planner_drift(system: SystemParams, cash: np.ndarray, inv_weight: np.ndarray) -> float:
    """J_C at per-bank cash levels and common investor weights."""
    n = system.n
    out = 0.0
    for i, b in enumerate(system.banks):
        fbar = b.shock.ccdf(cash[i])
        loss = gamma_loss(b.eta, 1.0) + (n - 1) * gamma_loss(b.phi * inv_weight[i], 1.0)
        jump = 0.0 if fbar < 1e-300 else b.theta * fbar * loss
        out += (1.0 - cash[i]) * system.r + (n - 1) * inv_weight[i] * b.mu + b.eta * b.mu / b.phi - jump
    return out


def solve_centralized(system: SystemParams, settings: BcdSettings | None = None) -> EquilibriumResult:
    problems = validate_system(system)
    if problems:
        raise ValueError("invalid system: " + "; ".join(problems))
    if any(abs(b.gamma - 1.0) > 1e-12 for b in system.banks):
        raise UnsupportedUtility("the planner requires logarithmic utility for every bank")
    n = system.n
    solutions = [solve_planner_bank(b, n, system.r, settings) for b in system.banks]
    cash = np.array([s.cash for s in solutions])
    inv_weight = np.array([s.weight for s in solutions])
    weights = np.zeros((n, n))
    for i in range(n):
        weights[:, i] = inv_weight[i]
    allocation = Allocation.build(system, cash, weights)

    violations = []
    for i, b in enumerate(system.banks):
        chk = check_uniqueness_conditions(b, n, system.r)
        if not chk.density_ok:
            violations.append(f"bank {i}: density condition fails")
        if not chk.gamma_ok:
            violations.append(f"bank {i}: Gamma(eta;1) below uniqueness threshold")
        if solutions[i].near_tie:
            violations.append(f"bank {i}: near-tied optima in distinct regimes")

    res_c = np.array([s.foc_residual_cash for s in solutions])
    res_w = np.zeros((n, n))
    for i in range(n):
        res_w[:, i] = solutions[i].foc_residual_weight
        res_w[i, i] = 0.0
    diag = Diagnostics(
        foc_residual_cash=res_c,
        foc_residual_weights=res_w,
        bcd_iterations=np.array([s.iterations for s in solutions]),
        uniqueness_ok=not violations,
        assumption_violations=violations,
    )
    core = frozenset(i for i in range(n) if inv_weight[i] > 0.0)
    return EquilibriumResult(
        system=system,
        allocation=allocation,
        kind="centralized",
        drift=planner_drift(system, cash, inv_weight),
        core_members=core,
        diagnostics=diag,
    )


def value_centralized(result: EquilibriumResult, t: float, wealths) -> float:
    """Planner's value function (T-t) J_C + sum_i log x_i."""
    system = result.system
    if t > system.horizon:
        raise ValueError("t must be <= horizon")
    xs = np.asarray(wealths, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("wealths must be > 0")
    return (system.horizon - t) * float(result.drift) + float(np.sum(np.log(xs)))
