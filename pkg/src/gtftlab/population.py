"""Agent-level simulation of generosity tuning in a mixed population.

A population holds fixed fractions of always-cooperators and
always-defectors; the remaining m nodes play GTFT with a generosity
drawn from a k-point grid on [0, g_hat]. Each step samples an ordered
pair of nodes uniformly. Only a GTFT initiator changes state: it bumps
its grid index up after meeting a cooperator or another GTFT node, and
down after meeting a defector, truncating at the grid ends.

With the idealized pairing (partner drawn with replacement from the
whole population) the count vector of grid indices is exactly the
weighted multi-urn walk in :mod:`gtftlab.ehrenfest`; ``to_ehrenfest``
produces the matching parameters. The distinct-pair mode (partner never
equals the initiator) models physical interactions and deviates from
that reduction by O(1/n); it exists for robustness checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .ehrenfest import EhrenfestParams, MultinomialDist
from .rng import ensure_rng

PAIRING_MODES = ("idealized", "distinct-pair")


def generosity_grid(k: int, g_hat: float) -> tuple[float, ...]:
    """The k equidistant generosity values 0 = g_1 < ... < g_k = g_hat."""
    if k < 2:
        raise ValueError(f"need k >= 2 grid points, got {k}")
    if not 0.0 <= g_hat <= 1.0:
        raise ValueError(f"g_hat must be in [0, 1], got {g_hat}")
    return tuple(((j - 1) / (k - 1)) * g_hat for j in range(1, k + 1))


@dataclass(frozen=True)
class PopulationConfig:
    """Population of n nodes: fractions alpha AllC, beta AllD, rest GTFT on a k-grid."""

    n: int
    alpha: float
    beta: float
    k: int
    g_hat: float
    pairing: str = "idealized"

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need n >= 2 nodes, got {self.n}")
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta >= 1:
            raise ValueError(
                f"need alpha, beta >= 0 with alpha + beta < 1, got {self.alpha}, {self.beta}"
            )
        if self.pairing not in PAIRING_MODES:
            raise ValueError(f"pairing must be one of {PAIRING_MODES}, got {self.pairing!r}")
        for name, frac in (("alpha", self.alpha), ("beta", self.beta)):
            count = frac * self.n
            if abs(count - round(count)) > 1e-9:
                raise ValueError(f"{name} * n = {count} is not an integer; refusing to round")
        if self.m < 1:
            raise ValueError("population must contain at least one GTFT node")
        generosity_grid(self.k, self.g_hat)

    @property
    def n_allc(self) -> int:
        return round(self.alpha * self.n)

    @property
    def n_alld(self) -> int:
        return round(self.beta * self.n)

    @property
    def m(self) -> int:
        return self.n - round(self.alpha * self.n) - round(self.beta * self.n)

    @property
    def grid(self) -> tuple[float, ...]:
        return generosity_grid(self.k, self.g_hat)


class InteractionRecord(NamedTuple):
    initiator: int
    partner: int
    initiator_kind: str
    partner_kind: str
    index_before: int | None
    index_after: int | None


class PopulationState:
    """Mutable population snapshot: node layout is fixed, GTFT indices evolve.

    Nodes 0..n_allc-1 are AllC, the next n_alld are AllD, and the last m
    are GTFT. ``idx`` holds the 1-based grid index of each GTFT node and
    ``z`` the per-index counts; both are kept consistent by interact().
    """

    __slots__ = ("n", "n_allc", "n_alld", "m", "k", "idx", "z", "t")

    def __init__(self, cfg: PopulationConfig, idx: list[int]):
        self.n = cfg.n
        self.n_allc = cfg.n_allc
        self.n_alld = cfg.n_alld
        self.m = cfg.m
        self.k = cfg.k
        if len(idx) != self.m or any(not 1 <= j <= self.k for j in idx):
            raise ValueError("idx must hold m grid indices in 1..k")
        self.idx = list(idx)
        self.z = [0] * self.k
        for j in self.idx:
            self.z[j - 1] += 1
        self.t = 0

    def node_kind(self, node: int) -> str:
        if node < self.n_allc:
            return "allc"
        if node < self.n_allc + self.n_alld:
            return "alld"
        return "gtft"

    def counts(self) -> tuple[int, ...]:
        return tuple(self.z)

    def avg_generosity(self, grid: tuple[float, ...]) -> float:
        return sum(g * zj for g, zj in zip(grid, self.z)) / self.m


def init_population(
    cfg: PopulationConfig,
    initial_counts: tuple[int, ...] | None = None,
    rng: np.random.Generator | int | None = None,
) -> PopulationState:
    """Build a population with the requested (or uniformly random) GTFT indices."""
    if initial_counts is not None:
        if len(initial_counts) != cfg.k or any(c < 0 for c in initial_counts):
            raise ValueError(f"initial counts must be {cfg.k} nonnegative integers")
        if sum(initial_counts) != cfg.m:
            raise ValueError(f"initial counts must sum to m={cfg.m}")
        idx: list[int] = []
        for j, count in enumerate(initial_counts, start=1):
            idx.extend([j] * count)
    else:
        rng = ensure_rng(rng)
        idx = (rng.integers(1, cfg.k + 1, size=cfg.m)).tolist()
    return PopulationState(cfg, idx)


def _apply(state: PopulationState, initiator: int, partner: int):
    """Advance the clock one interaction; returns (kinds and index change) raw fields.

    Shared by interact() and run() so the two cannot drift apart.
    """
    state.t += 1
    gtft_start = state.n_allc + state.n_alld
    init_kind = (
        "allc" if initiator < state.n_allc else "alld" if initiator < gtft_start else "gtft"
    )
    part_kind = (
        "allc" if partner < state.n_allc else "alld" if partner < gtft_start else "gtft"
    )
    if init_kind != "gtft":
        return init_kind, part_kind, None, None
    slot = initiator - gtft_start
    j = state.idx[slot]
    if part_kind == "alld":
        j_new = j - 1 if j > 1 else j
    else:
        j_new = j + 1 if j < state.k else j
    if j_new != j:
        state.idx[slot] = j_new
        state.z[j - 1] -= 1
        state.z[j_new - 1] += 1
    return init_kind, part_kind, j, j_new


def _draw_partner(initiator: int, raw: int, distinct: bool) -> int:
    if not distinct:
        return raw
    return raw + 1 if raw >= initiator else raw


def interact(
    state: PopulationState, cfg: PopulationConfig, rng: np.random.Generator | int | None
) -> InteractionRecord:
    """Sample one interaction, mutate the state, and describe what happened.

    The initiator is uniform over all nodes. Idealized pairing draws the
    partner uniformly with replacement over all n nodes; distinct-pair
    draws uniformly over the other n - 1. A non-GTFT initiator leaves the
    population unchanged but still advances the clock.
    """
    rng = ensure_rng(rng)
    distinct = cfg.pairing == "distinct-pair"
    initiator = int(rng.integers(0, state.n))
    raw = int(rng.integers(0, state.n - 1 if distinct else state.n))
    partner = _draw_partner(initiator, raw, distinct)
    init_kind, part_kind, j, j_new = _apply(state, initiator, partner)
    return InteractionRecord(initiator, partner, init_kind, part_kind, j, j_new)


def undo_interaction(state: PopulationState, record: InteractionRecord) -> None:
    """Roll back one interact() call; used to resample one-step transitions."""
    state.t -= 1
    if record.index_before is None:
        return
    slot = record.initiator - (state.n_allc + state.n_alld)
    j_before, j_after = record.index_before, record.index_after
    if j_before != j_after:
        state.idx[slot] = j_before
        state.z[j_after - 1] -= 1
        state.z[j_before - 1] += 1


def run(
    cfg: PopulationConfig,
    steps: int,
    record_every: int,
    rng: np.random.Generator | int | None,
    initial_counts: tuple[int, ...] | None = None,
) -> list[tuple[int, tuple[int, ...], float]]:
    """Simulate ``steps`` interactions; record (t, counts, average generosity).

    Records are taken at t = 0 and every ``record_every`` interactions
    after that (every interaction counts, including null ones). Draws are
    batched for speed but the per-step rule is the shared _apply(), so a
    trajectory is deterministic given the seed.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    rng = ensure_rng(rng)
    state = init_population(cfg, initial_counts, rng)
    grid = cfg.grid
    out: list[tuple[int, tuple[int, ...], float]] = []
    out.append((0, state.counts(), state.avg_generosity(grid)))
    distinct = cfg.pairing == "distinct-pair"
    n = state.n
    block = 1 << 16
    done = 0
    while done < steps:
        size = min(block, steps - done)
        initiators = rng.integers(0, n, size=size).tolist()
        raws = rng.integers(0, n - 1 if distinct else n, size=size).tolist()
        for initiator, raw in zip(initiators, raws):
            partner = _draw_partner(initiator, raw, distinct)
            _apply(state, initiator, partner)
            if state.t % record_every == 0:
                out.append((state.t, state.counts(), state.avg_generosity(grid)))
        done += size
    return out


def sample_one_step_counts(
    cfg: PopulationConfig,
    z0: tuple[int, ...],
    n_samples: int,
    rng: np.random.Generator | int | None,
) -> dict[tuple[int, ...], int]:
    """Resample single interactions from the fixed count vector z0.

    Each sample runs one interaction and rolls it back, so all draws see
    the same starting state. Returns how often each successor count
    vector appeared; the self loop shows up under z0 itself.
    """
    rng = ensure_rng(rng)
    state = init_population(cfg, z0)
    distinct = cfg.pairing == "distinct-pair"
    n = state.n
    gtft_start = state.n_allc + state.n_alld
    counts: dict[tuple[int, ...], int] = {}
    block = 1 << 16
    done = 0
    while done < n_samples:
        size = min(block, n_samples - done)
        initiators = rng.integers(0, n, size=size).tolist()
        raws = rng.integers(0, n - 1 if distinct else n, size=size).tolist()
        for initiator, raw in zip(initiators, raws):
            partner = _draw_partner(initiator, raw, distinct)
            init_kind, part_kind, j, j_new = _apply(state, initiator, partner)
            key = state.counts()
            counts[key] = counts.get(key, 0) + 1
            # roll back
            state.t -= 1
            if j is not None and j != j_new:
                slot = initiator - gtft_start
                state.idx[slot] = j
                state.z[j_new - 1] -= 1
                state.z[j - 1] += 1
        done += size
    return counts


def to_ehrenfest(cfg: PopulationConfig) -> EhrenfestParams:
    """Parameters of the urn walk that the idealized-pairing count vector follows.

    Up weight (1-alpha-beta)(1-beta), down weight (1-alpha-beta)beta,
    with the m GTFT nodes as balls. Requires 0 < beta, else one of the
    weights vanishes and the walk is degenerate (simulation still works).
    """
    if cfg.beta <= 0:
        raise ValueError("beta = 0 gives a degenerate chain with no down moves")
    rest = 1.0 - cfg.alpha - cfg.beta
    return EhrenfestParams(k=cfg.k, a=rest * (1.0 - cfg.beta), b=rest * cfg.beta, m=cfg.m)


def stationary_of_population(cfg: PopulationConfig) -> MultinomialDist:
    """Closed-form stationary law of the count vector: multinomial, weights (1/beta - 1)**(j-1)."""
    if not 0.0 < cfg.beta < 1.0 - cfg.alpha:
        raise ValueError(f"beta must lie in (0, 1 - alpha), got {cfg.beta}")
    lam = 1.0 / cfg.beta - 1.0
    weights = np.power(lam, np.arange(cfg.k, dtype=float))
    p = weights / weights.sum()
    return MultinomialDist(m=cfg.m, p=tuple(p))
