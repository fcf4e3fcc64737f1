"""Core parameter and allocation types shared by every solver.

A system is n banks, each with an excess project drift mu, a loss
fraction phi suffered by external investors on a liquidity shortage, a
self-loss fraction eta, a shock arrival rate theta, a CRRA coefficient
gamma, and a shock-size law.  Controls are cash fractions c_i >= 0 and
an investment matrix w_ij in [0, 1/phi_j); the diagonal is pinned at
eta_i/phi_i and is not a control.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .shocks import ShockDistribution, shock_from_config


@dataclass(frozen=True)
class BankParams:
    mu: float
    phi: float
    eta: float
    theta: float
    gamma: float
    shock: ShockDistribution


@dataclass(frozen=True)
class SystemParams:
    r: float
    horizon: float
    banks: tuple[BankParams, ...]
    initial_wealth: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.banks)


def gamma_loss(delta, gamma):
    """Normalized utility loss from losing fraction delta of wealth.

    Equals (1 - (1-delta)^(1-gamma)) / (1-gamma), with the log limit
    -log(1-delta) at gamma = 1.  For any CRRA utility U with coefficient
    gamma this is x^(gamma-1) [U(x) - U(x(1-delta))], independent of x.

    Accepts a scalar or array delta; gamma is scalar.
    """
    deltas = np.asarray(delta, dtype=float)
    if np.any(deltas < 0) or np.any(deltas >= 1):
        raise ValueError("delta must be in [0, 1)")
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    eps = 1.0 - gamma
    L = np.log1p(-deltas)
    if abs(eps) < 1e-12:
        out = -L
    elif abs(eps) < 1e-6:
        # power branch cancels catastrophically this close to gamma = 1;
        # second-order expansion in (1 - gamma) instead
        out = -L * (1.0 + eps * L / 2.0 + eps * eps * L * L / 6.0)
    else:
        out = -np.expm1(eps * L) / eps
    if np.isscalar(delta) or getattr(delta, "ndim", 0) == 0:
        return float(out)
    return out


def crra_utility(x, gamma):
    """Terminal utility: log for gamma = 1, power otherwise."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("wealth must be > 0")
    if abs(gamma - 1.0) < 1e-12:
        out = np.log(xs)
    else:
        out = xs ** (1.0 - gamma) / (1.0 - gamma)
    if np.isscalar(x) or getattr(x, "ndim", 0) == 0:
        return float(out)
    return out


def sharpe_like_ratio(bank: BankParams, c: float) -> float:
    """mu / (phi * theta * Fbar(c)): project j attracts external investors
    iff this exceeds 1 at j's equilibrium cash level."""
    if c < 0:
        raise ValueError("cash fraction must be >= 0")
    return bank.mu / (bank.phi * bank.theta * bank.shock.ccdf(c))


def validate_system(system: SystemParams) -> list[str]:
    """Return a list of invariant violations; empty means valid.

    Diagnostics only — never raises.
    """
    problems = []
    if system.n < 2:
        problems.append(f"system: n = {system.n} < 2")
    if system.r < 0:
        problems.append(f"system: r = {system.r} < 0")
    if not system.horizon > 0:
        problems.append(f"system: horizon = {system.horizon} <= 0")
    if len(system.initial_wealth) != system.n:
        problems.append("system: initial_wealth length != number of banks")
    for i, x in enumerate(system.initial_wealth):
        if not x > 0:
            problems.append(f"bank {i}: initial wealth {x} <= 0")
    for i, b in enumerate(system.banks):
        if not b.mu > 0:
            problems.append(f"bank {i}: mu = {b.mu} not > 0")
        if not 0.0 < b.phi < 1.0:
            problems.append(f"bank {i}: phi = {b.phi} not in (0, 1)")
        if not 0.0 < b.eta < 1.0:
            problems.append(f"bank {i}: eta = {b.eta} not in (0, 1)")
        if not b.theta > 0:
            problems.append(f"bank {i}: theta = {b.theta} not > 0")
        if not b.gamma > 0:
            problems.append(f"bank {i}: gamma = {b.gamma} not > 0")
    return problems


@dataclass
class Allocation:
    """Controls of either equilibrium: cash fractions and investment matrix.

    weights[i, j] is the fraction of bank i's wealth in bank j's project;
    the diagonal holds the fixed self-stake eta_i/phi_i.
    """

    cash: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, system: SystemParams, cash, offdiag_weights) -> "Allocation":
        n = system.n
        w = np.array(offdiag_weights, dtype=float)
        for i, b in enumerate(system.banks):
            w[i, i] = b.eta / b.phi
        return cls(cash=np.array(cash, dtype=float), weights=w)

    def admissibility_violations(self, system: SystemParams) -> list[str]:
        problems = []
        n = system.n
        if self.cash.shape != (n,) or self.weights.shape != (n, n):
            return ["allocation shape does not match system"]
        if np.any(self.cash < 0):
            problems.append("negative cash fraction")
        for j, b in enumerate(system.banks):
            col = np.delete(self.weights[:, j], j)
            if np.any(col < 0) or np.any(col >= 1.0 / b.phi):
                problems.append(f"weight on project {j} outside [0, 1/phi_j)")
            if abs(self.weights[j, j] - b.eta / b.phi) > 1e-12:
                problems.append(f"diagonal {j} != eta/phi")
        return problems

    def investor_weight(self, j: int) -> float:
        """Common off-diagonal investment fraction into project j.

        Well-defined whenever all investors share one risk aversion (always
        true for gamma = 1 systems); returns the maximum otherwise.
        """
        col = np.delete(self.weights[:, j], j)
        return float(col.max()) if col.size else 0.0

    def nominal_exposures(self, system: SystemParams) -> np.ndarray:
        """x_i * w_ij, the currency-unit exposure matrix."""
        x = np.asarray(system.initial_wealth, dtype=float)
        return x[:, None] * self.weights


@dataclass
class Diagnostics:
    foc_residual_cash: np.ndarray
    foc_residual_weights: np.ndarray
    bcd_iterations: np.ndarray | None = None
    uniqueness_ok: bool = True
    assumption_violations: list[str] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(
            float(np.max(np.abs(self.foc_residual_cash), initial=0.0)),
            float(np.max(np.abs(self.foc_residual_weights), initial=0.0)),
        )


@dataclass
class EquilibriumResult:
    system: SystemParams
    allocation: Allocation
    kind: str  # "decentralized" or "centralized"
    drift: np.ndarray | float  # per-bank J_i, or the planner's scalar J_C
    core_members: frozenset[int]
    diagnostics: Diagnostics


# ---------------------------------------------------------------------------
# config files


def system_from_config(cfg: dict) -> SystemParams:
    banks = []
    wealth = []
    for b in cfg["banks"]:
        banks.append(
            BankParams(
                mu=float(b["mu"]),
                phi=float(b["phi"]),
                eta=float(b["eta"]),
                theta=float(b["theta"]),
                gamma=float(b["gamma"]),
                shock=shock_from_config(b["shock"]),
            )
        )
        wealth.append(float(b.get("x0_wealth", 1.0)))
    return SystemParams(
        r=float(cfg["r"]),
        horizon=float(cfg.get("horizon", 1.0)),
        banks=tuple(banks),
        initial_wealth=tuple(wealth),
    )


def system_to_config(system: SystemParams) -> dict:
    return {
        "r": system.r,
        "horizon": system.horizon,
        "banks": [
            {
                "mu": b.mu,
                "phi": b.phi,
                "eta": b.eta,
                "theta": b.theta,
                "gamma": b.gamma,
                "x0_wealth": system.initial_wealth[i],
                "shock": b.shock.to_config(),
            }
            for i, b in enumerate(system.banks)
        ],
    }


def load_config(path) -> SystemParams:
    with open(path) as fh:
        return system_from_config(json.load(fh))
