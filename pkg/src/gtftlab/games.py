"""Repeated prisoner's dilemma between two fixed strategies.

A game is a geometric number of rounds: after every round another round
is played with probability delta. Each round both players pick C or D,
and the row player collects the entry of the reward vector matching the
joint state. States are ordered CC, CD, DC, DD, where the first letter
is the row player's action.

The module provides three independent routes to the expected total
payoff of the row player:

* closed forms (exact formulas for a GTFT row player),
* a truncated Neumann series over the per-round state chain,
* Monte Carlo simulation of whole games.

Tests hold the three to agreement wherever they overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import ensure_rng

STATES = ("CC", "CD", "DC", "DD")

# Payoff of the column player in state s equals the row payoff in the
# state with the roles swapped: CC->CC, CD->DC, DC->CD, DD->DD.
_SWAP = np.array([0, 2, 1, 3])


@dataclass(frozen=True)
class RewardVector:
    """Single-round payoffs (R, S, T, P) of the row player over CC, CD, DC, DD."""

    R: float
    S: float
    T: float
    P: float

    def __post_init__(self) -> None:
        if not (self.T > self.R > self.P > self.S):
            raise ValueError(
                f"reward vector must satisfy T > R > P > S, got "
                f"T={self.T}, R={self.R}, P={self.P}, S={self.S}"
            )

    @classmethod
    def donation(cls, benefit: float, cost: float) -> "RewardVector":
        """Donation game: cooperation pays `benefit` to the other side at `cost` to self."""
        if not benefit > cost >= 0:
            raise ValueError(f"donation game needs benefit > cost >= 0, got {benefit}, {cost}")
        return cls(R=benefit - cost, S=-cost, T=benefit, P=0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.R, self.S, self.T, self.P], dtype=float)

    @property
    def max_abs(self) -> float:
        return max(abs(self.R), abs(self.S), abs(self.T), abs(self.P))

    def donation_params(self) -> tuple[float, float]:
        """Recover (benefit, cost), or raise if this is not a donation vector."""
        benefit, cost = self.T, -self.S
        ok = (
            abs(self.P) <= 1e-12
            and abs(self.R - (self.T + self.S)) <= 1e-12
            and benefit > cost >= 0
        )
        if not ok:
            raise ValueError(f"not a donation-game reward vector: {self}")
        return benefit, cost


@dataclass(frozen=True)
class GameConfig:
    """Game-level parameters shared by every pairing.

    delta: probability of playing another round after each round.
    s1:    probability a GTFT player cooperates in round one.
    g_hat: largest generosity any GTFT player may use.
    """

    delta: float
    s1: float = 0.5
    g_hat: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")
        if not 0.0 <= self.s1 < 1.0:
            raise ValueError(f"s1 must be in [0, 1), got {self.s1}")
        if not 0.0 <= self.g_hat <= 1.0:
            raise ValueError(f"g_hat must be in [0, 1], got {self.g_hat}")


@dataclass(frozen=True)
class Strategy:
    """One of the three strategy kinds: 'allc', 'alld', or 'gtft' with generosity g.

    A GTFT player cooperates in round one with probability s1; in later
    rounds it cooperates with probability g and otherwise repeats the
    opponent's previous action.
    """

    kind: str
    g: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("allc", "alld", "gtft"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if not 0.0 <= self.g <= 1.0:
            raise ValueError(f"generosity must be in [0, 1], got {self.g}")

    @property
    def is_gtft(self) -> bool:
        return self.kind == "gtft"

    def __str__(self) -> str:
        return f"gtft({self.g})" if self.is_gtft else self.kind


ALLC = Strategy("allc")
ALLD = Strategy("alld")


def gtft(g: float) -> Strategy:
    return Strategy("gtft", g)


def _first_coop(strategy: Strategy, cfg: GameConfig) -> float:
    if strategy.kind == "allc":
        return 1.0
    if strategy.kind == "alld":
        return 0.0
    return cfg.s1


def _next_coop(strategy: Strategy, opp_cooperated):
    """Cooperation probability in round r+1 given the opponent's round-r action.

    Accepts a bool or a boolean array; returns a float or float array.
    """
    opp = np.asarray(opp_cooperated, dtype=float)
    if strategy.kind == "allc":
        out = np.ones_like(opp)
    elif strategy.kind == "alld":
        out = np.zeros_like(opp)
    else:
        out = strategy.g + (1.0 - strategy.g) * opp
    return out if out.ndim else float(out)


def transition_matrix(me: Strategy, opp: Strategy) -> np.ndarray:
    """4x4 row-stochastic matrix over CC, CD, DC, DD, conditioned on another round."""
    m = np.empty((4, 4))
    for s, (mine_c, theirs_c) in enumerate([(1, 1), (1, 0), (0, 1), (0, 0)]):
        p_me = _next_coop(me, bool(theirs_c))
        p_opp = _next_coop(opp, bool(mine_c))
        m[s] = (
            p_me * p_opp,
            p_me * (1 - p_opp),
            (1 - p_me) * p_opp,
            (1 - p_me) * (1 - p_opp),
        )
    return m


def initial_distribution(me: Strategy, opp: Strategy, cfg: GameConfig) -> np.ndarray:
    """Round-one distribution over CC, CD, DC, DD."""
    p_me = _first_coop(me, cfg)
    p_opp = _first_coop(opp, cfg)
    return np.array(
        [
            p_me * p_opp,
            p_me * (1 - p_opp),
            (1 - p_me) * p_opp,
            (1 - p_me) * (1 - p_opp),
        ]
    )


def series_truncation_index(delta: float, max_abs_payoff: float, tol: float) -> int:
    """Smallest I with tail bound max|v| * delta^I / (1 - delta) <= tol."""
    if delta == 0.0 or max_abs_payoff == 0.0:
        return 1
    ratio = tol * (1.0 - delta) / max_abs_payoff
    if ratio >= 1.0:
        return 1
    return max(1, math.ceil(math.log(ratio) / math.log(delta)))


def expected_payoff_series(
    me: Strategy, opp: Strategy, cfg: GameConfig, rv: RewardVector, tol: float = 1e-10
) -> float:
    """Expected row payoff as the truncated sum over rounds of <v, q1 (delta M)^(i-1)>.

    The tail after I terms is bounded by max|v| * delta^I / (1 - delta),
    so the truncation error is at most ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = rv.as_array()
    q = initial_distribution(me, opp, cfg)
    if cfg.delta == 0.0:
        return float(q @ v)
    m = transition_matrix(me, opp)
    n_terms = series_truncation_index(cfg.delta, rv.max_abs, tol)
    total = float(q @ v)
    for _ in range(n_terms - 1):
        q = cfg.delta * (q @ m)
        total += float(q @ v)
    return total


def payoff_gtft_vs_allc(g, cfg: GameConfig, rv: RewardVector):
    """Closed form for GTFT(g) against an always-cooperator. Independent of g."""
    f = (1 - cfg.s1) * (rv.T - rv.R) + rv.R / (1 - cfg.delta)
    if np.ndim(g):
        return np.full(np.shape(g), f)
    return float(f)


def payoff_gtft_vs_alld(g, cfg: GameConfig, rv: RewardVector):
    """Closed form for GTFT(g) against an always-defector."""
    g = np.asarray(g, dtype=float)
    out = (
        cfg.s1 * rv.S
        + (1 - cfg.s1) * rv.P
        + (g * (rv.S - rv.P) + rv.P) * cfg.delta / (1 - cfg.delta)
    )
    return out if out.ndim else float(out)


def payoff_gtft_vs_gtft(g, g_other, cfg: GameConfig, rv: RewardVector):
    """Closed form for GTFT(g) against GTFT(g_other); broadcasts over arrays."""
    g = np.asarray(g, dtype=float)
    gp = np.asarray(g_other, dtype=float)
    d, s1 = cfg.delta, cfg.s1
    w = (1 - g) * (1 - gp)
    denom2 = 1 - d * d * w
    out = (
        s1 * (rv.T + s1 * (rv.R - rv.T))
        + (1 - s1) * (rv.P + s1 * (rv.S - rv.P))
        - (1 - s1) * (rv.R - rv.T) * (d * d * w + d * (1 - g)) / denom2
        - (1 - s1) * (rv.R - rv.S) * (d * d * w + d * (1 - gp)) / denom2
        + (1 - s1) ** 2
        * (rv.R - rv.S - rv.T + rv.P)
        * (d * w * (1 + d * w))
        / (1 - d * d * w * w)
        + rv.R * d / (1 - d)
    )
    return out if out.ndim else float(out)


def expected_payoff_closed(
    me: Strategy, opp: Strategy, cfg: GameConfig, rv: RewardVector
) -> float:
    """Expected row payoff via closed form.

    Closed forms exist for a GTFT row player against each opponent kind.
    For an AllC or AllD row player the chain is evaluated through the
    series route at tolerance 1e-12 instead of a bespoke formula.
    """
    if me.is_gtft:
        if opp.kind == "allc":
            return payoff_gtft_vs_allc(me.g, cfg, rv)
        if opp.kind == "alld":
            return payoff_gtft_vs_alld(me.g, cfg, rv)
        return payoff_gtft_vs_gtft(me.g, opp.g, cfg, rv)
    return expected_payoff_series(me, opp, cfg, rv, tol=1e-12)


def resolvent_entries(g: float, g_other: float, cfg: GameConfig) -> np.ndarray:
    """(I - delta M)^(-1) for the GTFT(g) vs GTFT(g_other) round chain, by linear solve.

    Nonsingular whenever delta < 1, since M is row stochastic.
    """
    if cfg.delta * (1 - g) * (1 - g_other) >= 1.0:
        raise ValueError("resolvent undefined: delta * (1-g) * (1-g') >= 1")
    m = transition_matrix(gtft(g), gtft(g_other))
    return np.linalg.solve(np.eye(4) - cfg.delta * m, np.eye(4))


def simulate_games(
    me: Strategy,
    opp: Strategy,
    cfg: GameConfig,
    rv: RewardVector,
    n_games: int,
    rng: np.random.Generator | int | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Play ``n_games`` independent full games; return (row payoffs, column payoffs, rounds).

    All games advance in lockstep, one round per pass, until each has hit
    its geometric stopping time.
    """
    rng = ensure_rng(rng)
    v = rv.as_array()
    v_col = v[_SWAP]
    pay_me = np.zeros(n_games)
    pay_opp = np.zeros(n_games)
    rounds = np.ones(n_games, dtype=np.int64)

    my_c = rng.random(n_games) < _first_coop(me, cfg)
    their_c = rng.random(n_games) < _first_coop(opp, cfg)
    state = 2 * (~my_c).astype(np.int64) + (~their_c).astype(np.int64)
    pay_me += v[state]
    pay_opp += v_col[state]

    active = rng.random(n_games) < cfg.delta
    while active.any():
        idx = np.flatnonzero(active)
        mc = rng.random(idx.size) < _next_coop(me, their_c[idx])
        tc = rng.random(idx.size) < _next_coop(opp, my_c[idx])
        state = 2 * (~mc).astype(np.int64) + (~tc).astype(np.int64)
        pay_me[idx] += v[state]
        pay_opp[idx] += v_col[state]
        rounds[idx] += 1
        my_c[idx] = mc
        their_c[idx] = tc
        active[idx] = rng.random(idx.size) < cfg.delta
    return pay_me, pay_opp, rounds


def simulate_game(
    me: Strategy,
    opp: Strategy,
    cfg: GameConfig,
    rv: RewardVector,
    rng_seed: np.random.Generator | int | None,
) -> tuple[float, float, int]:
    """Play one full game; returns (row payoff, column payoff, rounds played)."""
    pay_me, pay_opp, rounds = simulate_games(me, opp, cfg, rv, 1, rng_seed)
    return float(pay_me[0]), float(pay_opp[0]), int(rounds[0])
