"""Payoff analysis of the tuning dynamics at stationarity.

The central object is the mean-field payoff F(g, alpha, beta): the
expected game payoff of a GTFT node whose opponent is drawn from the
population, under the simplification that every GTFT node plays the
same generosity g. For donation games F is concave in g, its interior
critical point has a closed form, and the ratio phi = beta*n/m of
defectors to GTFT nodes decides whether the maximizer sits at g_hat, at
zero, or in between.

The module also evaluates the average stationary generosity of the
dynamics, the optimality gap bound between it and the F-maximizer, the
local-optimality property of the update rules, and a granular payoff
that keeps the full stationary distribution over generosity values
instead of averaging it away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import games
from .ehrenfest import CapExceededError, MultinomialDist, enumerate_states, state_count
from .games import GameConfig, RewardVector
from .population import generosity_grid


def stationary_weights(beta: float, k: int, m: int) -> MultinomialDist:
    """Stationary multinomial of the dynamics: cell weights ((1 - beta)/beta)**(j-1)."""
    lam = (1.0 - beta) / beta
    weights = np.power(lam, np.arange(k, dtype=float))
    return MultinomialDist(m=m, p=tuple(weights / weights.sum()))


def avg_stationary_generosity(k: int, beta: float, g_hat: float) -> float:
    """Mean generosity under the stationary law of the k-point dynamics.

    Equals sum_j g_j p_j with p_j proportional to lam**(j-1) and
    lam = (1 - beta)/beta; this is the closed form of that sum.
    """
    if k < 2:
        raise ValueError("need k >= 2")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if beta == 0.5:
        return g_hat / 2.0
    lam = (1.0 - beta) / beta
    return g_hat * (
        lam**k / (lam**k - 1.0)
        - (1.0 / (k - 1.0)) * (lam / (lam - 1.0)) * ((lam ** (k - 1) - 1.0) / (lam**k - 1.0))
    )


def mean_field_payoff(
    g: float, alpha: float, beta: float, cfg: GameConfig, rv: RewardVector
) -> float:
    """F(g, alpha, beta): payoff of GTFT(g) against a random opponent, all GTFT at g."""
    if alpha < 0 or beta < 0 or alpha + beta > 1:
        raise ValueError(f"invalid population fractions alpha={alpha}, beta={beta}")
    gtft_frac = 1.0 - alpha - beta
    total = 0.0
    if alpha > 0:
        total += alpha * games.payoff_gtft_vs_allc(g, cfg, rv)
    if beta > 0:
        total += beta * games.payoff_gtft_vs_alld(g, cfg, rv)
    if gtft_frac > 0:
        total += gtft_frac * games.payoff_gtft_vs_gtft(g, g, cfg, rv)
    return float(total)


def phi_ratio(alpha: float, beta: float) -> float:
    """Defector-to-GTFT ratio beta*n/m = beta/(1 - alpha - beta)."""
    return beta / (1.0 - alpha - beta)


def low_phi_threshold(cfg: GameConfig, rv: RewardVector) -> float:
    """Largest phi at which dF/dg >= 0 over the whole grid range, so g* = g_hat."""
    benefit, cost = rv.donation_params()
    return (benefit - cost) * (1.0 - cfg.delta) / (
        2.0 * cost * (1.0 - cfg.delta * (1.0 - cfg.g_hat)) ** 2
    )


def high_phi_threshold(cfg: GameConfig, rv: RewardVector) -> float:
    """Smallest phi at which dF/dg <= 0 everywhere, so g* = 0."""
    benefit, cost = rv.donation_params()
    return (benefit - cost) / (2.0 * cost * (1.0 - cfg.delta))


def interior_optimum(alpha: float, beta: float, cfg: GameConfig, rv: RewardVector) -> float:
    """Root of dF/dg: sqrt(m (1-delta)(b-c) / (2 beta n c delta^2)) - (1-delta)/delta."""
    benefit, cost = rv.donation_params()
    if cfg.delta == 0.0:
        raise ValueError("interior optimum undefined at delta = 0")
    phi = phi_ratio(alpha, beta)
    return float(
        np.sqrt((1.0 - cfg.delta) * (benefit - cost) / (2.0 * phi * cost * cfg.delta**2))
        - (1.0 - cfg.delta) / cfg.delta
    )


def optimal_generosity(
    alpha: float, beta: float, n: int, cfg: GameConfig, rv: RewardVector
) -> tuple[float, str]:
    """Maximizer of F over [0, g_hat] for a donation game, with its phi regime.

    Low phi pins the maximizer to g_hat, high phi to 0, and in between it
    is the interior root, clamped to the domain as a guard.
    """
    rv.donation_params()  # reject non-donation vectors
    if beta <= 0 or alpha + beta >= 1:
        raise ValueError("need beta > 0 and alpha + beta < 1")
    del n  # phi depends only on the fractions; kept for signature symmetry
    phi = phi_ratio(alpha, beta)
    if phi <= low_phi_threshold(cfg, rv):
        return cfg.g_hat, "low"
    if phi >= high_phi_threshold(cfg, rv):
        return 0.0, "high"
    g_star = min(max(interior_optimum(alpha, beta, cfg, rv), 0.0), cfg.g_hat)
    return g_star, "mid"


def gap_bound(k: int, beta: float) -> float:
    """Bound beta / ((1 - 2 beta)(k - 1)) on |g* - avg stationary generosity| at low phi."""
    if k < 2:
        raise ValueError("need k >= 2")
    if not 0.0 < beta < 0.5:
        raise ValueError(f"bound requires beta in (0, 1/2), got {beta}")
    return beta / ((1.0 - 2.0 * beta) * (k - 1))


@dataclass(frozen=True)
class GenerosityReport:
    """Stationary generosity of the dynamics versus the mean-field optimum."""

    k: int
    avg_stationary_generosity: float
    lam: float
    g_star: float
    regime: str
    gap: float
    gap_bound: float | None
    phi: float


def generosity_report(
    k: int, alpha: float, beta: float, n: int, cfg: GameConfig, rv: RewardVector
) -> GenerosityReport:
    g_star, regime = optimal_generosity(alpha, beta, n, cfg, rv)
    wg = avg_stationary_generosity(k, beta, cfg.g_hat)
    bound = gap_bound(k, beta) if beta < 0.5 else None
    return GenerosityReport(
        k=k,
        avg_stationary_generosity=wg,
        lam=(1.0 - beta) / beta,
        g_star=g_star,
        regime=regime,
        gap=abs(g_star - wg),
        gap_bound=bound,
        phi=phi_ratio(alpha, beta),
    )


@dataclass(frozen=True)
class LocalOptimalityReport:
    """Outcome of the monotonicity check of the update rules."""

    checked: bool
    precondition_failures: tuple[str, ...]
    grid_size: int
    n_comparisons: int
    violations: tuple[tuple[str, float, float, float], ...]

    @property
    def ok(self) -> bool:
        return self.checked and not self.violations


def check_local_optimality(
    cfg: GameConfig, rv: RewardVector, grid_size: int = 20
) -> LocalOptimalityReport:
    """Verify the payoff monotonicities that make each update rule a local improvement.

    On a grid over [0, g_hat]^3 and for every g < g': payoff against a
    GTFT opponent strictly increases in own generosity, against AllC it
    stays constant, and against AllD it strictly decreases. Runs only
    when the reward vector and config satisfy the preconditions; else
    reports them and skips.
    """
    failures = []
    if rv.R + rv.P > rv.T + rv.S + 1e-12:
        failures.append(f"requires R + P <= T + S, got {rv.R + rv.P} > {rv.T + rv.S}")
    threshold = (rv.T - rv.R) / (rv.R - rv.S)
    if cfg.delta <= threshold:
        failures.append(f"requires delta > (T-R)/(R-S) = {threshold}, got {cfg.delta}")
    else:
        g_cap = 1.0 - (rv.T - rv.R) / (cfg.delta * (rv.R - rv.S))
        if cfg.g_hat >= g_cap:
            failures.append(f"requires g_hat < 1 - (T-R)/(delta (R-S)) = {g_cap}, got {cfg.g_hat}")
    if failures:
        return LocalOptimalityReport(
            checked=False,
            precondition_failures=tuple(failures),
            grid_size=grid_size,
            n_comparisons=0,
            violations=(),
        )

    grid = np.linspace(0.0, cfg.g_hat, grid_size)
    violations: list[tuple[str, float, float, float]] = []
    n_comparisons = 0
    f_allc = games.payoff_gtft_vs_allc(grid, cfg, rv)
    f_alld = games.payoff_gtft_vs_alld(grid, cfg, rv)
    f_gg = games.payoff_gtft_vs_gtft(grid[:, None], grid[None, :], cfg, rv)
    for i in range(grid_size):
        for j in range(i + 1, grid_size):
            g_lo, g_hi = float(grid[i]), float(grid[j])
            n_comparisons += 2
            if f_allc[i] != f_allc[j]:
                violations.append(("vs-allc-not-constant", g_lo, g_hi, float("nan")))
            if not f_alld[i] > f_alld[j]:
                violations.append(("vs-alld-not-decreasing", g_lo, g_hi, float("nan")))
            for idx2 in range(grid_size):
                n_comparisons += 1
                if not f_gg[i, idx2] < f_gg[j, idx2]:
                    violations.append(
                        ("vs-gtft-not-increasing", g_lo, g_hi, float(grid[idx2]))
                    )
    return LocalOptimalityReport(
        checked=True,
        precondition_failures=(),
        grid_size=grid_size,
        n_comparisons=n_comparisons,
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class PayoffComparison:
    """Mean-field payoff curve next to the granular stationary payoff.

    ``mean_field`` samples F on the generosity grid; ``granular`` is the
    single stationary value (it has no g argument); ``mean_field_at_avg``
    evaluates F at the average stationary generosity. ``max_abs_diff`` is
    the gap between those last two.
    """

    alpha: float
    beta: float
    k: int
    g_grid: tuple[float, ...]
    mean_field: tuple[float, ...]
    granular: float
    avg_generosity: float
    mean_field_at_avg: float
    max_abs_diff: float


def _payoff_tables(grid: np.ndarray, cfg: GameConfig, rv: RewardVector):
    f_allc = games.payoff_gtft_vs_allc(grid, cfg, rv)
    f_alld = games.payoff_gtft_vs_alld(grid, cfg, rv)
    f_gg = games.payoff_gtft_vs_gtft(grid[:, None], grid[None, :], cfg, rv)
    return f_allc, f_alld, f_gg


def granular_expected_payoff(
    alpha: float,
    beta: float,
    n: float,
    k: int,
    cfg: GameConfig,
    rv: RewardVector,
    enumerate_counts: bool = False,
    cap: int = 10**6,
) -> PayoffComparison:
    """Expected GTFT payoff with the stationary spread of generosities kept intact.

    Under the stationary multinomial the m grid labels are i.i.d.
    categorical(p), so a random GTFT node has index i ~ p and a distinct
    GTFT partner independently j ~ p. The granular payoff is therefore

        sum_i p_i [alpha f_C(g_i) + beta f_D(g_i) + (m/n) sum_j p_j f(g_i, g_j)]

    with no correction for sampling without replacement. Setting
    ``enumerate_counts`` recomputes it by summing over the whole count
    space with multinomial weights and distinct-partner frequencies,
    which agrees exactly and cross-checks the identity on small m.
    """
    if not 0.0 < beta < 1.0 - alpha:
        raise ValueError(f"beta must lie in (0, 1 - alpha), got {beta}")
    m_exact = (1.0 - alpha - beta) * n
    m = round(m_exact)
    if abs(m_exact - m) > 1e-9 or m < 1:
        raise ValueError(f"(1 - alpha - beta) * n = {m_exact} is not a positive integer")
    dist = stationary_weights(beta, k, m)
    p = np.asarray(dist.p)
    grid = np.asarray(generosity_grid(k, cfg.g_hat))
    f_allc, f_alld, f_gg = _payoff_tables(grid, cfg, rv)
    gtft_frac = m / n

    if enumerate_counts:
        if m < 2:
            raise ValueError("count enumeration needs at least two GTFT nodes")
        if state_count(k, m) > cap:
            raise CapExceededError(f"count space for k={k}, m={m} exceeds cap {cap}")
        granular = 0.0
        for z in enumerate_states(k, m):
            weight = dist.pmf(z)
            if weight == 0.0:
                continue
            zv = np.asarray(z, dtype=float)
            focal = zv / m
            partner = (zv[None, :] - np.eye(k)) / (m - 1)
            per_focal = (
                alpha * f_allc + beta * f_alld + gtft_frac * (partner * f_gg).sum(axis=1)
            )
            granular += weight * float(focal @ per_focal)
    else:
        granular = float(
            p @ (alpha * f_allc + beta * f_alld + gtft_frac * (f_gg @ p))
        )

    wg = avg_stationary_generosity(k, beta, cfg.g_hat)
    mean_field_curve = tuple(
        mean_field_payoff(float(g), alpha, beta, cfg, rv) for g in grid
    )
    at_avg = mean_field_payoff(wg, alpha, beta, cfg, rv)
    return PayoffComparison(
        alpha=alpha,
        beta=beta,
        k=k,
        g_grid=tuple(float(g) for g in grid),
        mean_field=mean_field_curve,
        granular=granular,
        avg_generosity=wg,
        mean_field_at_avg=at_avg,
        max_abs_diff=abs(granular - at_avg),
    )
