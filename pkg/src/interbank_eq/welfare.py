"""Welfare comparisons between the two equilibria and large-n behavior.

The gap between the planner's value and the sum of individual values is
independent of wealths under log utility, so it reduces to a closed form
in the two sets of controls.  The ratio of the two ("price of anarchy")
stays bounded as the system grows and has an explicit limit for systems
of identical core banks.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .centralized import solve_planner_bank, value_centralized
from .decentralized import solve_cash, value_decentralized
from .errors import BoundNotActive, IllDefinedRatio, NotApplicable
from .model import BankParams, EquilibriumResult, SystemParams, gamma_loss
from .shocks import Exponential, PowerLaw

DRIFT_ONLY = "drift"
AT_WEALTHS = "at_wealths"


def _require_matching(system, dec, cent):
    if dec.system != system or cent.system != system:
        raise ValueError("results were not solved for the given system")
    if dec.kind != "decentralized" or cent.kind != "centralized":
        raise ValueError("pass (decentralized, centralized) results in that order")
    if any(abs(b.gamma - 1.0) > 1e-12 for b in system.banks):
        raise ValueError("welfare comparison requires gamma = 1 for every bank")


def welfare_gap(system: SystemParams, dec: EquilibriumResult, cent: EquilibriumResult, t: float = 0.0) -> float:
    """V - sum_i V_i at time t, via the wealth-free closed form.

    Equals value_centralized - sum of value_decentralized at any wealth
    vector; zero iff the two allocations coincide.
    """
    _require_matching(system, dec, cent)
    if t > system.horizon:
        raise ValueError("t must be <= horizon")
    total = 0.0
    for i, b in enumerate(system.banks):
        c_hat = dec.allocation.cash[i]
        c_star = cent.allocation.cash[i]
        w_hat = dec.allocation.investor_weight(i)
        w_star = cent.allocation.investor_weight(i)
        fbar_hat = b.shock.ccdf(c_hat)
        fbar_star = b.shock.ccdf(c_star)
        n1 = system.n - 1
        total += -system.r * (c_star - c_hat)
        total += b.theta * (fbar_hat - fbar_star) * (n1 + gamma_loss(b.eta, 1.0))
        total += b.theta * n1 * (
            fbar_hat * gamma_loss(b.phi * w_hat, 1.0) - fbar_star * gamma_loss(b.phi * w_star, 1.0)
        )
    return (system.horizon - t) * total


def welfare_ratio(
    system: SystemParams,
    dec: EquilibriumResult,
    cent: EquilibriumResult,
    t: float = 0.0,
    mode: str = DRIFT_ONLY,
    wealths=None,
) -> float:
    """Price of anarchy V / sum_i V_i.

    DRIFT_ONLY divides the drift coefficients J_C / sum_i J_i, which is the
    ratio of value functions at unit wealths and is horizon-free.
    AT_WEALTHS includes the log-wealth terms and can be ill-defined when
    the denominator is non-positive.
    """
    _require_matching(system, dec, cent)
    if mode == DRIFT_ONLY:
        return float(cent.drift) / float(np.sum(dec.drift))
    if mode == AT_WEALTHS:
        xs = system.initial_wealth if wealths is None else wealths
        denom = sum(value_decentralized(dec, i, t, xs[i]) for i in range(system.n))
        if denom <= 0.0:
            raise IllDefinedRatio("sum of individual values is non-positive at these wealths")
        return value_centralized(cent, t, xs) / denom
    raise ValueError(f"unknown mode {mode!r}")


def wr_limit_identical(bank: BankParams, r: float) -> float:
    """Large-n welfare-ratio limit 1 / (1 + q (log q - 1)) for a system of
    identical core banks, q = phi theta Fbar(c_hat) / mu."""
    if abs(bank.gamma - 1.0) > 1e-12:
        raise NotApplicable("limit derived for gamma = 1")
    c_hat = solve_cash(bank, r)
    q = bank.phi * bank.theta * bank.shock.ccdf(c_hat) / bank.mu
    if q >= 1.0:
        raise NotApplicable("bank is not core-eligible (sharpe-like ratio <= 1)")
    return 1.0 / (1.0 + q * (math.log(q) - 1.0))


# ---------------------------------------------------------------------------
# asymptotic bounds on the planner's cash


def crude_bound_constant(system: SystemParams, dec: EquilibriumResult) -> float:
    """K = max_i { c_hat_i + (theta_i/r) Fbar_i(c_hat_i) [1 + Gamma(eta_i;1)
    + Gamma(phi_i w_hat_i;1)] }, the constant in the crude bound c* <= K n^2."""
    vals = []
    for i, b in enumerate(system.banks):
        c_hat = dec.allocation.cash[i]
        w_hat = dec.allocation.investor_weight(i)
        fbar = b.shock.ccdf(c_hat)
        vals.append(
            c_hat
            + (b.theta / system.r)
            * fbar
            * (1.0 + gamma_loss(b.eta, 1.0) + gamma_loss(b.phi * w_hat, 1.0))
        )
    return max(vals)


def _single_bank_K(bank: BankParams, r: float, c_hat: float, w_hat: float) -> float:
    fbar = bank.shock.ccdf(c_hat)
    return c_hat + (bank.theta / r) * fbar * (
        1.0 + gamma_loss(bank.eta, 1.0) + gamma_loss(bank.phi * w_hat, 1.0)
    )


@dataclass(frozen=True)
class ExponentialCashBounds:
    simple_lb: float | None
    refined_lb: float | None
    refined_ub: float | None

    def contains(self, c_star: float) -> bool:
        good = True
        if self.simple_lb is not None:
            good &= c_star >= self.simple_lb
        if self.refined_lb is not None:
            good &= c_star >= self.refined_lb
        if self.refined_ub is not None:
            good &= c_star <= self.refined_ub
        return good


def planner_cash_bounds_exponential(
    bank: BankParams, r: float, n: int, w_hat: float, K: float | None = None
) -> ExponentialCashBounds:
    """Sandwich bounds on the planner's cash for exponential shocks.

    With kappa = 1/lambda the super/sub-exponential envelopes are tight and
    c* grows like lambda log(n).  Bounds whose log argument is non-positive
    at this n are returned as None (they activate asymptotically).
    """
    if not isinstance(bank.shock, Exponential):
        raise NotApplicable("exponential-shock bounds")
    if not w_hat > 0.0:
        raise NotApplicable("bank must attract external investors (w_hat > 0)")
    lam = bank.shock.scale
    g_eta = gamma_loss(bank.eta, 1.0)
    g_w = gamma_loss(bank.phi * w_hat, 1.0)

    simple = lam * math.log(bank.theta * (n - 1) * g_w / (lam * r))

    # refined lower bound; the constant C_L collapses to Gamma(eta)/Gamma(phi w_hat)
    bracket = math.log(n - 1) - math.log(g_eta / g_w)
    refined_lb = None
    if bracket > 0.0:
        refined_lb = lam * math.log(bank.theta * (n - 1) * bracket / (lam * r))

    c_hat = solve_cash(bank, r)
    if K is None:
        K = _single_bank_K(bank, r, c_hat, w_hat)
    D = g_eta - math.log(min(bank.phi * bank.theta / bank.mu, 1.0)) + 1.0 / lam
    log_term = max(0.0, math.log((bank.mu / (bank.phi * bank.theta)) * (bank.theta * D * K / (lam * r))))
    C_U = g_eta + log_term + 3.0
    refined_ub = lam * math.log(bank.theta * C_U * (n - 1) * math.log(n) / (lam * r))

    out = ExponentialCashBounds(simple_lb=simple, refined_lb=refined_lb, refined_ub=refined_ub)
    if out.simple_lb is None and out.refined_lb is None and out.refined_ub is None:
        raise BoundNotActive(f"no bound active at n = {n}")
    return out


@dataclass(frozen=True)
class PowerCashBounds:
    lb: float | None
    ub: float | None
    rate_exponent: float
    zeta0_warning: bool

    def rate(self, n: int) -> float:
        return ((n - 1) * math.log(n)) ** self.rate_exponent


def planner_cash_bounds_power(
    bank: BankParams, r: float, n: int, w_hat: float, K: float | None = None
) -> PowerCashBounds:
    """Growth-rate bounds Theta([(n-1) log n]^alpha) for power-law shocks.

    Binds the free envelope constants to the density's own normalization:
    zeta0 = x0 and kappa = (1/alpha - 1) x0^(1/alpha - 1), so that
    f(x) = kappa (x + zeta0)^(-1/alpha) exactly.
    """
    if not isinstance(bank.shock, PowerLaw):
        raise NotApplicable("power-law-shock bounds")
    if not w_hat > 0.0:
        raise NotApplicable("bank must attract external investors (w_hat > 0)")
    alpha = bank.shock.alpha
    beta = 1.0 / alpha
    zeta0 = bank.shock.x0
    kappa = (beta - 1.0) * zeta0 ** (beta - 1.0)
    g_eta = gamma_loss(bank.eta, 1.0)
    g_w = gamma_loss(bank.phi * w_hat, 1.0)

    lb = (kappa * bank.theta * (n - 1) * g_w / r) ** alpha - zeta0

    ub = None
    if n >= 3:
        c_hat = solve_cash(bank, r)
        if K is None:
            K = _single_bank_K(bank, r, c_hat, w_hat)
        # one bootstrap pass from the crude bound c* <= K n^2
        E = max(0.0, -math.log(bank.phi * bank.theta * kappa / ((beta - 1.0) * bank.mu)))
        C0 = g_eta + E + (beta - 1.0) * max(0.0, math.log(zeta0 + K)) + 2.0 * (beta - 1.0)
        ub = (kappa * bank.theta * C0 * (n - 1) * math.log(n) / r) ** alpha - zeta0
    return PowerCashBounds(lb=lb, ub=ub, rate_exponent=alpha, zeta0_warning=zeta0 < 1.0)


# ---------------------------------------------------------------------------
# rate tables


@dataclass(frozen=True)
class RateRow:
    n: int
    c_star: float
    ccdf_c_star: float
    w_star: float
    sys_loss: float  # (n-1) Fbar(c*) Gamma(phi w*; 1)


def asymptotic_rates_report(bank: BankParams, n_list, r: float) -> list[RateRow]:
    """Planner solution and scaling diagnostics for each n in n_list.

    The sys_loss column is the expected utility loss inflicted on external
    investors per unit time; it stabilizes to a constant as n grows.
    """
    rows = []
    for n in n_list:
        sol = solve_planner_bank(bank, int(n), r)
        fbar = bank.shock.ccdf(sol.cash)
        sys_loss = (n - 1) * fbar * gamma_loss(bank.phi * sol.weight, 1.0)
        rows.append(
            RateRow(n=int(n), c_star=sol.cash, ccdf_c_star=fbar, w_star=sol.weight, sys_loss=sys_loss)
        )
    return rows


def rates_table_csv(rows: list[RateRow]) -> str:
    buf = io.StringIO()
    buf.write("n,c_star,ccdf_c_star,w_star,sys_loss\n")
    for row in rows:
        buf.write(
            f"{row.n},{row.c_star!r},{row.ccdf_c_star!r},{row.w_star!r},{row.sys_loss!r}\n"
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# regulatory replication


@dataclass(frozen=True)
class ReplicationResult:
    eta_d: np.ndarray
    eta_c: np.ndarray
    degenerate: np.ndarray  # True where w* is at the 1/phi cap and eta_d -> 1


def replication_eta(system: SystemParams, cent: EquilibriumResult, eta_c=None) -> ReplicationResult:
    """Self-investment requirements replicating the planner's cash levels.

    eta_d_i = 1 - (1 - eta_c_i)(1 - phi_i w*_i)^(n-1); periphery banks keep
    eta_d = eta_c exactly.  Re-solving the selfish problem at eta_d
    reproduces the planner's cash reserves.
    """
    if cent.system != system or cent.kind != "centralized":
        raise ValueError("pass the centralized result solved for this system")
    etas = np.array([b.eta for b in system.banks])
    if eta_c is None:
        eta_c = etas
    eta_c = np.asarray(eta_c, dtype=float)
    if eta_c.shape != etas.shape or np.any(np.abs(eta_c - etas) > 1e-12):
        raise ValueError("cent must be solved with banks' eta equal to eta_c")
    n = system.n
    eta_d = np.empty(n)
    degenerate = np.zeros(n, dtype=bool)
    for i, b in enumerate(system.banks):
        w_star = cent.allocation.investor_weight(i)
        keep = 1.0 - b.phi * w_star
        eta_d[i] = 1.0 - (1.0 - eta_c[i]) * keep ** (n - 1)
        if eta_d[i] >= 1.0 - 1e-15:
            degenerate[i] = True
            eta_d[i] = min(eta_d[i], 1.0 - 1e-15)
    return ReplicationResult(eta_d=eta_d, eta_c=eta_c, degenerate=degenerate)
