"""Closed-form selfish equilibrium.

Each bank's cash choice maximizes -r c - theta Fbar(c) Gamma(eta; gamma)
and is a dominant strategy; investment in project j then best-responds to
j's cash through the survival probability Fbar_j(c_j).
"""

from __future__ import annotations

import numpy as np

from .errors import InfiniteCash
from .model import (
    Allocation,
    BankParams,
    Diagnostics,
    EquilibriumResult,
    SystemParams,
    gamma_loss,
    validate_system,
)


def solve_cash(bank: BankParams, r: float) -> float:
    """Optimal cash fraction: f^{-1}(r / (theta Gamma(eta; gamma))), or the
    zero corner when that level exceeds f(0)."""
    if r < 0:
        raise ValueError("r must be >= 0")
    if r == 0.0:
        raise InfiniteCash("r = 0 makes cash free; optimal reserves are unbounded")
    level = r / (bank.theta * gamma_loss(bank.eta, bank.gamma))
    if level >= bank.shock.pdf_at_zero:
        return 0.0
    return bank.shock.pdf_inverse(level)


def solve_weight(gamma_i: float, target: BankParams, c_target: float) -> float:
    """Fraction an investor with risk aversion gamma_i puts in `target`'s
    project when the target holds cash c_target."""
    ratio = target.phi * target.theta * target.shock.ccdf(c_target) / target.mu
    if ratio >= 1.0:
        return 0.0
    return (1.0 - ratio ** (1.0 / gamma_i)) / target.phi


def drift_coefficient(system: SystemParams, i: int, cash: np.ndarray, weights: np.ndarray) -> float:
    """Time-linear coefficient J_i of bank i's value function at the
    given controls."""
    b = system.banks[i]
    out = b.eta * b.mu / b.phi + (1.0 - cash[i]) * system.r
    out -= b.theta * b.shock.ccdf(cash[i]) * gamma_loss(b.eta, b.gamma)
    for j, bj in enumerate(system.banks):
        if j == i:
            continue
        w = weights[i, j]
        out += w * bj.mu - bj.theta * bj.shock.ccdf(cash[j]) * gamma_loss(bj.phi * w, b.gamma)
    return out


def solve_decentralized(system: SystemParams) -> EquilibriumResult:
    problems = validate_system(system)
    if problems:
        raise ValueError("invalid system: " + "; ".join(problems))
    n = system.n
    cash = np.array([solve_cash(b, system.r) for b in system.banks])
    weights = np.zeros((n, n))
    for i, bi in enumerate(system.banks):
        for j, bj in enumerate(system.banks):
            if i != j:
                weights[i, j] = solve_weight(bi.gamma, bj, cash[j])
    allocation = Allocation.build(system, cash, weights)
    drift = np.array([drift_coefficient(system, i, cash, allocation.weights) for i in range(n)])

    # membership in the core depends on the target only, so any investor row works
    core = frozenset(
        j for j in range(n) if any(allocation.weights[i, j] > 0.0 for i in range(n) if i != j)
    )

    res_cash = np.zeros(n)
    res_w = np.zeros((n, n))
    for i, bi in enumerate(system.banks):
        if cash[i] > 0.0:
            res_cash[i] = system.r - bi.theta * bi.shock.pdf(cash[i]) * gamma_loss(bi.eta, bi.gamma)
        for j, bj in enumerate(system.banks):
            w = allocation.weights[i, j]
            if i != j and w > 0.0:
                res_w[i, j] = bj.mu - bj.phi * bj.theta * bj.shock.ccdf(cash[j]) * (
                    1.0 - bj.phi * w
                ) ** (-bi.gamma)
    return EquilibriumResult(
        system=system,
        allocation=allocation,
        kind="decentralized",
        drift=drift,
        core_members=core,
        diagnostics=Diagnostics(foc_residual_cash=res_cash, foc_residual_weights=res_w),
    )


def value_decentralized(result: EquilibriumResult, bank_index: int, t: float, x: float) -> float:
    """Bank's value function: (T-t) J_i + log x for log utility, else
    exp((1-gamma)(T-t) J_i) x^(1-gamma) / (1-gamma)."""
    system = result.system
    if t > system.horizon:
        raise ValueError("t must be <= horizon")
    if not x > 0:
        raise ValueError("wealth must be > 0")
    gamma = system.banks[bank_index].gamma
    J = float(np.asarray(result.drift)[bank_index])
    tau = system.horizon - t
    if abs(gamma - 1.0) < 1e-12:
        return tau * J + np.log(x)
    return np.exp((1.0 - gamma) * tau * J) * x ** (1.0 - gamma) / (1.0 - gamma)
