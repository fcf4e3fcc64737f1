"""Model variants and the scalar numerics they need.

Three relaxations of the base model, each solvable up to scalar
equations: losses on every shock arrival (cash is paid out whether or
not it covers the shock), a partially liquid bond (a long bond position
supplies fraction alpha of its value as emergency liquidity), and an
endogenous self-investment stake (the bank chooses eta too, which brings
in the Lambert-W function and a second equilibrium).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decentralized import solve_cash, solve_weight
from .errors import NoBracket, NonConvergence, NotApplicable, UnsupportedUtility
from .model import (
    Allocation,
    BankParams,
    SystemParams,
    gamma_loss,
    validate_system,
)
from .shocks import Exponential

_INV_E = math.exp(-1.0)

SHORT_BOND = "short_bond"
LONG_BOND = "long_bond"
CORNER = "corner"
INTERIOR = "interior"


# ---------------------------------------------------------------------------
# Lambert W


def _halley(w, x):
    for _ in range(100):
        ew = math.exp(w)
        err = w * ew - x
        denom = ew * (w + 1.0) - (w + 2.0) * err / (2.0 * w + 2.0)
        dw = err / denom
        w -= dw
        if abs(dw) <= 1e-16 * (1.0 + abs(w)):
            break
    return w


def lambert_w0(x: float) -> float:
    """Principal branch of w e^w = x on [-1/e, inf); w >= -1."""
    if x < -_INV_E:
        if x > -_INV_E - 1e-15:  # fp slop at the branch point
            return -1.0
        raise ValueError("x must be >= -1/e")
    if x == 0.0:
        return 0.0
    if abs(x + _INV_E) < 1e-16:
        return -1.0
    if x < -0.25:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 * p**3 / 72.0
    elif x < 1.0:
        w = x * (1.0 - x + 1.5 * x * x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1) if l1 > 0 else 0.0
        w = l1 - l2 + l2 / l1
    return _halley(w, x)


def lambert_wm1(x: float) -> float:
    """Secondary real branch of w e^w = x on [-1/e, 0); w <= -1."""
    if x < -_INV_E:
        if x > -_INV_E - 1e-15:
            return -1.0
        raise ValueError("x must be >= -1/e")
    if not x < 0.0:
        raise ValueError("x must be < 0 on the secondary branch")
    if abs(x + _INV_E) < 1e-16:
        return -1.0
    if x > -0.25:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    else:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 - p - p * p / 3.0 - 11.0 * p**3 / 72.0
    return _halley(w, x)


# ---------------------------------------------------------------------------
# bracketed scalar root finding (Brent: bisection-safeguarded interpolation)


def find_root_bracketed(f, a: float, b: float, tol: float = 1e-13) -> float:
    """Root of f on [a, b] where f(a) f(b) <= 0.

    Inverse-quadratic/secant steps with a bisection fallback; always
    converges.  Stops when the bracket half-width drops below
    tol * (1 + |x|) plus machine slack, or on an exact zero.
    """
    if not a < b:
        raise ValueError("need a < b")
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise NoBracket(f"no sign change: f({a}) = {fa}, f({b}) = {fb}")
    c, fc = a, fa
    d = e = b - a
    eps = np.finfo(float).eps
    for _ in range(300):
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        half_tol = 2.0 * eps * abs(b) + 0.5 * tol * (1.0 + abs(b))
        m = 0.5 * (c - b)
        if abs(m) <= half_tol or fb == 0.0:
            return b
        if abs(e) < half_tol or abs(fa) <= abs(fb):
            d = e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                rr = fb / fc
                p = s * (2.0 * m * q * (q - rr) - (b - a) * (rr - 1.0))
                q = (q - 1.0) * (rr - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(half_tol * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        a, fa = b, fb
        b += d if abs(d) > half_tol else math.copysign(half_tol, m)
        fb = f(b)
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a
    return b


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod quadrature (G7/K15)

_KRONROD_X = np.array(
    [
        -0.991455371120813, -0.949107912342759, -0.864864423359769,
        -0.741531185599394, -0.586087235467691, -0.405845151377397,
        -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
        0.586087235467691, 0.741531185599394, 0.864864423359769,
        0.949107912342759, 0.991455371120813,
    ]
)
_KRONROD_W = np.array(
    [
        0.022935322010529, 0.063092092629979, 0.104790010322250,
        0.140653259715525, 0.169004726639267, 0.190350578064785,
        0.204432940075298, 0.209482141084728, 0.204432940075298,
        0.190350578064785, 0.169004726639267, 0.140653259715525,
        0.104790010322250, 0.063092092629979, 0.022935322010529,
    ]
)
_GAUSS_W = np.array(
    [
        0.129484966168870, 0.279705391489277, 0.381830050505119,
        0.417959183673469, 0.381830050505119, 0.279705391489277,
        0.129484966168870,
    ]
)


def integrate_gk(f, a: float, b: float, abstol: float = 1e-12, max_depth: int = 48) -> float:
    """Adaptive G7/K15 quadrature of a smooth integrand on [a, b]."""
    if a == b:
        return 0.0

    def panel(lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        xs = mid + half * _KRONROD_X
        ys = np.array([f(x) for x in xs])
        k = half * float(_KRONROD_W @ ys)
        g = half * float(_GAUSS_W @ ys[1::2])
        return k, abs(k - g)

    total = 0.0
    stack = [(a, b, abstol, 0)]
    while stack:
        lo, hi, tol, depth = stack.pop()
        k, err = panel(lo, hi)
        if err <= tol or depth >= max_depth:
            total += k
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, tol / 2.0, depth + 1))
            stack.append((mid, hi, tol / 2.0, depth + 1))
    return total


# ---------------------------------------------------------------------------
# shared result container


@dataclass
class ExtensionResult:
    allocation: Allocation
    regimes: list[str]
    foc_residual_cash: np.ndarray
    foc_residual_weights: np.ndarray
    eta_hat: np.ndarray | None = None


def _require_log_utility(system):
    if any(abs(b.gamma - 1.0) > 1e-12 for b in system.banks):
        raise UnsupportedUtility("extension solved only for logarithmic utility")


# ---------------------------------------------------------------------------
# C.1: cash is paid out on every shock arrival


def _liq_loss_foc(bank: BankParams, r: float, c: float) -> float:
    f = bank.shock.pdf(c)
    fbar = bank.shock.ccdf(c)
    rem = 1.0 - bank.eta - c
    return (
        -r
        - bank.theta * f * math.log(rem)
        - bank.theta * fbar / rem
        + bank.theta * f * math.log(1.0 - c)
    )


def _liq_loss_objective(bank: BankParams, r: float, c: float) -> float:
    # control-dependent part of the drift: -rc + theta Fbar(c) log(1-eta-c)
    # + theta * int_0^c f(u) log(1-u) du
    tail = bank.theta * bank.shock.ccdf(c) * math.log(1.0 - bank.eta - c)
    inner = bank.theta * integrate_gk(
        lambda u: bank.shock.pdf(u) * math.log(1.0 - u), 0.0, c, abstol=1e-12
    )
    return -r * c + tail + inner


def solve_ext_liquidity_loss(system: SystemParams) -> ExtensionResult:
    """Equilibrium when the shock's size is always paid out of cash.

    The cash FOC picks up two extra terms (the lost reserves and the
    expected small-shock payouts) and is solved numerically on
    [0, 1 - eta); the investment FOC is unchanged and evaluates at the
    extension's cash levels.
    """
    problems = validate_system(system)
    if problems:
        raise ValueError("invalid system: " + "; ".join(problems))
    _require_log_utility(system)
    n = system.n
    cash = np.zeros(n)
    regimes = []
    res_cash = np.zeros(n)
    for i, b in enumerate(system.banks):
        hi = 1.0 - b.eta - 1e-9
        grid = np.linspace(0.0, hi, 600)
        vals = np.array([_liq_loss_foc(b, system.r, c) for c in grid])
        roots = []
        for k in range(len(grid) - 1):
            if vals[k] == 0.0:
                roots.append(grid[k])
            elif vals[k] * vals[k + 1] < 0.0:
                roots.append(
                    find_root_bracketed(
                        lambda c: _liq_loss_foc(b, system.r, c), grid[k], grid[k + 1], tol=1e-15
                    )
                )
        candidates = [0.0] + roots
        objs = [_liq_loss_objective(b, system.r, c) for c in candidates]
        best = int(np.argmax(objs))
        cash[i] = candidates[best]
        if cash[i] > 0.0:
            regimes.append(INTERIOR)
            res_cash[i] = _liq_loss_foc(b, system.r, cash[i])
        else:
            regimes.append(CORNER)

    weights = np.zeros((n, n))
    res_w = np.zeros((n, n))
    for i in range(n):
        for j, bj in enumerate(system.banks):
            if i != j:
                weights[i, j] = solve_weight(1.0, bj, cash[j])
                if weights[i, j] > 0.0:
                    res_w[i, j] = bj.mu - bj.phi * bj.theta * bj.shock.ccdf(cash[j]) / (
                        1.0 - bj.phi * weights[i, j]
                    )
    return ExtensionResult(
        allocation=Allocation.build(system, cash, weights),
        regimes=regimes,
        foc_residual_cash=res_cash,
        foc_residual_weights=res_w,
    )


# ---------------------------------------------------------------------------
# C.2: a long bond position supplies fraction alpha of emergency liquidity


def _effective_liquidity(alpha, cash, weights, i):
    slack = 1.0 - cash[i] - (weights[i].sum() - weights[i, i])
    return cash[i] + alpha * max(0.0, slack)


def _pb_objective(system, alpha, i, c, w_row, eff_others):
    b = system.banks[i]
    s = w_row.sum()
    eff_own = c + alpha * max(0.0, 1.0 - c - s)
    out = -system.r * c + b.theta * b.shock.ccdf(eff_own) * math.log(1.0 - b.eta)
    for j, bj in enumerate(system.banks):
        if j == i:
            continue
        out += w_row[j] * bj.mu
        out += bj.theta * bj.shock.ccdf(eff_others[j]) * math.log(1.0 - bj.phi * w_row[j])
    return out


def _pb_short_candidate(system, alpha, i, eff_others):
    b = system.banks[i]
    c = solve_cash(b, system.r)
    w = np.zeros(system.n)
    for j, bj in enumerate(system.banks):
        if j != i:
            ratio = bj.phi * bj.theta * bj.shock.ccdf(eff_others[j]) / bj.mu
            w[j] = 0.0 if ratio >= 1.0 else (1.0 - ratio) / bj.phi
    feasible = 1.0 - c - w.sum() <= 1e-12
    return c, w, feasible


def _pb_long_candidate(system, alpha, i, eff_others, damping=0.5, max_iter=400):
    b = system.banks[i]
    L = math.log(1.0 - b.eta)
    c = solve_cash(b, system.r)
    w = np.zeros(system.n)
    for _ in range(max_iter):
        s = w.sum()
        if 1.0 - c - s <= 0.0:
            return None
        eff = c + alpha * (1.0 - c - s)
        m = b.theta * b.shock.pdf(eff) * L
        w_new = np.zeros(system.n)
        for j, bj in enumerate(system.banks):
            if j == i:
                continue
            denom = bj.mu + alpha * m
            if denom <= 0.0:
                continue
            ratio = bj.phi * bj.theta * bj.shock.ccdf(eff_others[j]) / denom
            if ratio < 1.0:
                w_new[j] = (1.0 - ratio) / bj.phi
        s_new = w_new.sum()
        if s_new >= 1.0:
            return None

        def foc_c(cc):
            e = cc + alpha * (1.0 - cc - s_new)
            return -system.r - b.theta * b.shock.pdf(e) * L * (1.0 - alpha)

        hi = 1.0 - s_new - 1e-12
        if foc_c(0.0) <= 0.0:
            c_new = 0.0
        elif foc_c(hi) >= 0.0:
            return None  # FOC root outside the long-bond region; kink covers it
        else:
            c_new = find_root_bracketed(foc_c, 0.0, hi, tol=1e-15)
        delta = max(abs(c_new - c), float(np.max(np.abs(w_new - w))))
        c = (1.0 - damping) * c + damping * c_new
        w = (1.0 - damping) * w + damping * w_new
        if delta < 1e-13:
            c, w = c_new, w_new
            break
    else:
        return None
    if 1.0 - c - w.sum() <= 1e-10:
        return None
    return c, w


def _pb_kink_candidate(system, alpha, i, eff_others):
    b = system.banks[i]
    L = math.log(1.0 - b.eta)

    def weights_at(s):
        c = 1.0 - s
        m = b.theta * b.shock.pdf(c) * L
        w = np.zeros(system.n)
        for j, bj in enumerate(system.banks):
            if j == i:
                continue
            denom = bj.mu + system.r + m
            if denom <= 0.0:
                continue
            ratio = bj.phi * bj.theta * bj.shock.ccdf(eff_others[j]) / denom
            if ratio < 1.0:
                w[j] = (1.0 - ratio) / bj.phi
        return w

    def gap(s):
        return weights_at(s).sum() - s

    grid = np.linspace(0.0, 1.0, 201)
    vals = [gap(s) for s in grid]
    for k in range(len(grid) - 1):
        if vals[k] * vals[k + 1] <= 0.0:
            s = find_root_bracketed(gap, grid[k], grid[k + 1], tol=1e-14)
            w = weights_at(s)
            return 1.0 - s, w
    return None


def solve_ext_partial_bond(system: SystemParams, alpha: float) -> ExtensionResult:
    """Equilibrium when a long bond position can be liquidated for
    fraction alpha of its value on shock arrival.

    Per-bank best responses enumerate three candidates: the short-bond
    regime (base-model FOCs), the long-bond regime (coupled FOCs with the
    effective liquidity c + alpha (1 - c - sum w)), and the kink where the
    bond position is exactly zero.  Responses are swept to a fixed point.
    """
    problems = validate_system(system)
    if problems:
        raise ValueError("invalid system: " + "; ".join(problems))
    _require_log_utility(system)
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must be in [0, 1)")
    n = system.n

    base_cash = np.array([solve_cash(b, system.r) for b in system.banks])
    base_w = np.zeros((n, n))
    for i in range(n):
        for j, bj in enumerate(system.banks):
            if i != j:
                base_w[i, j] = solve_weight(1.0, bj, base_cash[j])

    if alpha == 0.0:
        # zero bond liquidity reproduces the base model identically
        cash, weights = base_cash, base_w
    else:
        cash = base_cash.copy()
        weights = base_w.copy()
        alloc_probe = Allocation.build(system, cash, weights)
        for sweep in range(300):
            max_delta = 0.0
            for i in range(n):
                eff = np.array(
                    [_effective_liquidity(alpha, cash, alloc_probe.weights, j) for j in range(n)]
                )
                cands = []
                c_s, w_s, ok_s = _pb_short_candidate(system, alpha, i, eff)
                if ok_s:
                    cands.append((c_s, w_s))
                long_cand = _pb_long_candidate(system, alpha, i, eff)
                if long_cand is not None:
                    cands.append(long_cand)
                kink = _pb_kink_candidate(system, alpha, i, eff)
                if kink is not None and kink[0] >= 0.0:
                    cands.append(kink)
                if not cands:
                    cands.append((c_s, w_s))  # admissible even if regime-inconsistent
                objs = [_pb_objective(system, alpha, i, c, w, eff) for c, w in cands]
                c_best, w_best = cands[int(np.argmax(objs))]
                max_delta = max(
                    max_delta, abs(c_best - cash[i]), float(np.max(np.abs(w_best - weights[i])))
                )
                cash[i] = c_best
                weights[i] = w_best
                weights[i, i] = 0.0
                alloc_probe = Allocation.build(system, cash, weights)
            if max_delta < 1e-11:
                break
        else:
            raise NonConvergence("best-response sweep did not settle", last_iterate=(cash, weights))

    allocation = Allocation.build(system, cash, weights)
    regimes = []
    res_cash = np.zeros(n)
    res_w = np.zeros((n, n))
    for i, b in enumerate(system.banks):
        slack = 1.0 - cash[i] - (allocation.weights[i].sum() - allocation.weights[i, i])
        long_bond = slack > 1e-12
        regimes.append(LONG_BOND if long_bond else SHORT_BOND)
        eff_i = cash[i] + alpha * max(0.0, slack)
        L = math.log(1.0 - b.eta)
        if cash[i] > 0.0:
            scale = (1.0 - alpha) if long_bond else 1.0
            res_cash[i] = -system.r - b.theta * b.shock.pdf(eff_i) * L * scale
        m = b.theta * b.shock.pdf(eff_i) * L if long_bond else 0.0
        for j, bj in enumerate(system.banks):
            w = allocation.weights[i, j]
            if i != j and w > 0.0:
                eff_j = _effective_liquidity(alpha, cash, allocation.weights, j)
                res_w[i, j] = bj.mu + alpha * m - bj.phi * bj.theta * bj.shock.ccdf(eff_j) / (
                    1.0 - bj.phi * w
                )
    return ExtensionResult(
        allocation=allocation,
        regimes=regimes,
        foc_residual_cash=res_cash,
        foc_residual_weights=res_w,
    )


# ---------------------------------------------------------------------------
# C.3: the bank also chooses its self-investment stake


@dataclass
class EndogenousEtaSolution:
    corner: tuple[float, float]
    corner_objective: float
    interior: tuple[float, float] | None
    interior_objective: float | None
    chosen: str
    multiple_optima: bool
    foc_residuals: tuple[float, float] | None


def endogenous_eta_objective(bank: BankParams, r: float, c: float) -> float:
    """Objective in c after substituting the optimal stake
    eta(c) = (1 - phi theta Fbar(c)/mu)+."""
    fbar = bank.shock.ccdf(c)
    eta = max(0.0, 1.0 - bank.phi * bank.theta * fbar / bank.mu)
    return (1.0 - c) * r + eta * bank.mu / bank.phi + bank.theta * fbar * math.log1p(-eta)


def solve_ext_endogenous_eta(bank: BankParams, r: float) -> EndogenousEtaSolution:
    """Both optima of the cash problem when the bank picks eta freely.

    The interior stationary points solve u e^u = -r lambda phi / mu with
    u = log(phi theta Fbar(c)/mu); the secondary real branch is the local
    maximum (the principal-branch root is the local minimum between the
    corner and it), so the interior candidate uses W_{-1}.  Multiplicity
    is first-class output: the zero-cash corner can remain a local
    optimum alongside the interior one.
    """
    if not isinstance(bank.shock, Exponential):
        raise NotApplicable("closed form requires exponential shocks")
    if abs(bank.gamma - 1.0) > 1e-12:
        raise UnsupportedUtility("extension solved only for logarithmic utility")
    if not r > 0:
        raise ValueError("r must be > 0")
    lam = bank.shock.scale
    eta0 = max(0.0, 1.0 - bank.phi * bank.theta / bank.mu)
    corner = (0.0, eta0)
    corner_obj = endogenous_eta_objective(bank, r, 0.0)

    x = -r * lam * bank.phi / bank.mu
    interior = None
    interior_obj = None
    residuals = None
    if x >= -_INV_E:
        u = lambert_wm1(x)
        c_int = -lam * math.log(-r * lam / (bank.theta * u))
        if c_int > 0.0:
            fbar = bank.shock.ccdf(c_int)
            eta_int = 1.0 - bank.phi * bank.theta * fbar / bank.mu
            if eta_int > 0.0:
                interior = (c_int, eta_int)
                interior_obj = endogenous_eta_objective(bank, r, c_int)
                residuals = (
                    r + bank.theta * bank.shock.pdf(c_int) * math.log1p(-eta_int),
                    bank.mu / bank.phi - bank.theta * fbar / (1.0 - eta_int),
                )

    if interior is None:
        chosen = CORNER
        multiple = False
    else:
        chosen = INTERIOR if interior_obj > corner_obj else CORNER
        # the corner is a local optimum iff the substituted objective is
        # decreasing at 0+, which holds whenever the stake corner binds
        foc_at_0 = -r - bank.theta * bank.shock.pdf(0.0) * math.log(
            bank.phi * bank.theta / bank.mu
        )
        multiple = eta0 == 0.0 or foc_at_0 <= 0.0
    return EndogenousEtaSolution(
        corner=corner,
        corner_objective=corner_obj,
        interior=interior,
        interior_objective=interior_obj,
        chosen=chosen,
        multiple_optima=multiple,
        foc_residuals=residuals,
    )
