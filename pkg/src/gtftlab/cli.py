"""Command-line front end.

Subcommands cover trajectory simulation, stationary-law checks, mixing
diagnostics, pairwise payoffs, optimality reports, and the mean-field
versus granular payoff comparison. Trajectories stream as CSV; scalar
reports print as JSON. Every invocation writes or embeds a manifest
echoing the full configuration and seed, and a rerun with the same
manifest reproduces the data byte for byte.

Exit codes: 0 success, 2 invalid configuration, 3 state cap or step
limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, ehrenfest, games, meanfield, population
from .ehrenfest import CapExceededError, EhrenfestParams, StepLimitError
from .games import GameConfig, RewardVector
from .population import PopulationConfig
from .rng import stream

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_LIMIT = 3


def _manifest(command: str, config: dict, seed: int | None, outputs: list[str], t0: float) -> dict:
    return {
        "artifact_version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "outputs": outputs,
        "wall_clock_s": round(time.monotonic() - t0, 6),
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }


def _emit_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _strategy(text: str) -> games.Strategy:
    if text == "allc":
        return games.ALLC
    if text == "alld":
        return games.ALLD
    if text.startswith("gtft:"):
        return games.gtft(float(text.split(":", 1)[1]))
    raise ValueError(f"strategy must be allc, alld, or gtft:<g>, got {text!r}")


def _reward_vector(args) -> RewardVector:
    if args.b is not None or args.c is not None:
        if args.b is None or args.c is None:
            raise ValueError("donation games need both --b and --c")
        return RewardVector.donation(args.b, args.c)
    if None in (args.R, args.S, args.T, args.P):
        raise ValueError("give either --b/--c or all of --R --S --T --P")
    return RewardVector(R=args.R, S=args.S, T=args.T, P=args.P)


def _add_reward_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--b", type=float, help="donation benefit")
    sub.add_argument("--c", type=float, help="donation cost")
    sub.add_argument("--R", type=float)
    sub.add_argument("--S", type=float)
    sub.add_argument("--T", type=float)
    sub.add_argument("--P", type=float)
    sub.add_argument("--delta", type=float, required=True, help="continuation probability")
    sub.add_argument("--s1", type=float, default=0.5, help="round-one GTFT cooperation")


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    cfg = PopulationConfig(
        n=args.n, alpha=args.alpha, beta=args.beta, k=args.k, g_hat=args.g_hat,
        pairing=args.pairing,
    )
    record_every = args.record_every if args.record_every else cfg.n
    initial = tuple(args.init_counts) if args.init_counts else None
    t0 = time.monotonic()
    rng = stream(args.seed, "simulate")
    rows = population.run(cfg, args.steps, record_every, rng, initial)

    out_path = Path(args.out)
    header = "t," + ",".join(f"z_{j}" for j in range(1, cfg.k + 1)) + ",avg_generosity"
    lines = [header]
    for t, z, wg in rows:
        lines.append(f"{t}," + ",".join(str(c) for c in z) + f",{wg!r}")
    out_path.write_text("\n".join(lines) + "\n")

    manifest = _manifest(
        "simulate",
        {
            "n": cfg.n, "alpha": cfg.alpha, "beta": cfg.beta, "k": cfg.k,
            "g_hat": cfg.g_hat, "pairing": cfg.pairing, "steps": args.steps,
            "record_every": record_every,
            "init_counts": list(initial) if initial else None,
        },
        args.seed,
        [str(out_path)],
        t0,
    )
    _emit_json(manifest, str(out_path) + ".manifest.json")
    return EXIT_OK


# ---------------------------------------------------------------- stationary


def cmd_stationary(args) -> int:
    t0 = time.monotonic()
    if args.beta is not None:
        if args.k is None:
            raise ValueError("beta mode needs --k")
        if not 0.0 < args.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        lam = 1.0 / args.beta - 1.0
        weights = np.power(lam, np.arange(args.k, dtype=float))
        p = weights / weights.sum()
        result: dict = {"mode": "population-beta", "beta": args.beta, "k": args.k,
                        "lambda": lam, "closed_form_p": p.tolist(), "m": args.m}
        params = None
        if args.m is not None and args.exact:
            # an explicit (a, b) pair with the same ratio reproduces the law
            params = EhrenfestParams(k=args.k, a=(1 - args.beta) / 2, b=args.beta / 2, m=args.m)
    else:
        if None in (args.k, args.a, args.bb, args.m):
            raise ValueError("chain mode needs --k --a --b --m (or use --beta)")
        params = EhrenfestParams(k=args.k, a=args.a, b=args.bb, m=args.m)
        dist = ehrenfest.stationary_closed(params)
        result = {"mode": "chain", "k": args.k, "a": args.a, "b": args.bb, "m": args.m,
                  "lambda": params.lam, "closed_form_p": list(dist.p)}

    if args.exact and params is not None:
        try:
            states, exact = ehrenfest.solve_stationary_exact(params, cap=args.cap)
            closed = ehrenfest.stationary_closed(params)
            closed_pmf = np.array([closed.pmf(x) for x in states])
            # per-urn probabilities implied by the solved law: mean counts over m
            exact_p = exact @ np.asarray(states) / params.m
            result["exact_solver"] = {
                "n_states": len(states),
                "exact_p": exact_p.tolist(),
                "tv_diff": ehrenfest.tv_distance(exact, closed_pmf),
                "max_pointwise_diff": float(np.abs(exact - closed_pmf).max()),
                "detailed_balance_residual": ehrenfest.detailed_balance_residual(
                    params, cap=args.cap
                ),
            }
        except CapExceededError as exc:
            result["exact_solver"] = None
            result["note"] = f"exact comparison skipped: {exc}"
    elif args.exact:
        result["exact_solver"] = None
        result["note"] = "exact comparison needs --m"

    result["manifest"] = _manifest("stationary", _echo_args(args), None, [], t0)
    _emit_json(result, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- mixing


def _mixing_once(params: EhrenfestParams, args, seed: int) -> dict:
    bound = ehrenfest.mixing_bound(params)
    est = ehrenfest.estimate_mixing(
        params, args.epsilon, args.trials, stream(seed, "mixing", params.m, params.k),
        step_limit=args.step_limit,
    )
    row = {
        "k": params.k, "a": params.a, "b": params.b, "m": params.m,
        "bound": bound,
        "estimate": {"t_hat": est.t_hat, "epsilon": est.epsilon, "trials": est.trials,
                     "method": est.method},
    }
    if args.exact_scan:
        try:
            exact = ehrenfest.tmix_exact(params, epsilon=0.25, cap=args.cap)
            row["exact_tmix"] = exact.t_hat
        except CapExceededError as exc:
            row["exact_tmix"] = None
            row["note"] = f"exact scan skipped: {exc}"
    return row


def _parse_sweep(text: str) -> tuple[str, list[int]]:
    key, _, values = text.partition("=")
    if key not in ("m", "k") or not values:
        raise ValueError(f"sweep must look like m=8,16,32 or k=2,4,8, got {text!r}")
    try:
        return key, [int(v) for v in values.split(",")]
    except ValueError:
        raise ValueError(f"sweep values must be integers, got {values!r}") from None


def cmd_mixing(args) -> int:
    t0 = time.monotonic()
    result: dict
    if not args.sweep:
        params = EhrenfestParams(k=args.k, a=args.a, b=args.bb, m=args.m)
        result = _mixing_once(params, args, args.seed)
    else:
        key, sweep_values = _parse_sweep(args.sweep)
        rows = []
        for value in sorted(sweep_values):
            params = EhrenfestParams(
                k=value if key == "k" else args.k,
                a=args.a, b=args.bb,
                m=value if key == "m" else args.m,
            )
            rows.append(_mixing_once(params, args, args.seed))
        result = {"sweep": key, "rows": rows}
    result["manifest"] = _manifest("mixing", _echo_args(args), args.seed, [], t0)
    _emit_json(result, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- payoff


def cmd_payoff(args) -> int:
    t0 = time.monotonic()
    rv = _reward_vector(args)
    cfg = GameConfig(delta=args.delta, s1=args.s1, g_hat=args.g_hat)
    me = _strategy(args.me)
    opp = _strategy(args.opp)
    result = {
        "me": str(me), "opp": str(opp),
        "closed_form": games.expected_payoff_closed(me, opp, cfg, rv),
        "series": games.expected_payoff_series(me, opp, cfg, rv, tol=args.tol),
        "series_tol": args.tol,
    }
    if args.mc_games:
        pay_me, pay_opp, rounds = games.simulate_games(
            me, opp, cfg, rv, args.mc_games, stream(args.seed, "payoff-mc")
        )
        result["monte_carlo"] = {
            "games": args.mc_games,
            "mean": float(pay_me.mean()),
            "std_error": float(pay_me.std(ddof=1) / np.sqrt(args.mc_games)),
            "opp_mean": float(pay_opp.mean()),
            "mean_rounds": float(rounds.mean()),
        }
    result["manifest"] = _manifest("payoff", _echo_args(args), args.seed, [], t0)
    _emit_json(result, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- optimality


def cmd_optimality(args) -> int:
    t0 = time.monotonic()
    rv = _reward_vector(args)
    cfg = GameConfig(delta=args.delta, s1=args.s1, g_hat=args.g_hat)
    g_star, regime = meanfield.optimal_generosity(args.alpha, args.beta, args.n, cfg, rv)
    result = {
        "alpha": args.alpha, "beta": args.beta, "n": args.n,
        "phi": meanfield.phi_ratio(args.alpha, args.beta),
        "low_phi_threshold": meanfield.low_phi_threshold(cfg, rv),
        "high_phi_threshold": meanfield.high_phi_threshold(cfg, rv),
        "regime": regime,
        "g_star": g_star,
    }
    if args.k is not None:
        report = meanfield.generosity_report(args.k, args.alpha, args.beta, args.n, cfg, rv)
        result.update(
            {
                "k": report.k,
                "avg_stationary_generosity": report.avg_stationary_generosity,
                "lambda": report.lam,
                "gap": report.gap,
                "gap_bound": report.gap_bound,
            }
        )
    result["manifest"] = _manifest("optimality", _echo_args(args), None, [], t0)
    _emit_json(result, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- compare


def cmd_compare(args) -> int:
    t0 = time.monotonic()
    rv = _reward_vector(args)
    cfg = GameConfig(delta=args.delta, s1=args.s1, g_hat=args.g_hat)
    pairs = []
    for chunk in args.populations.split(";"):
        alpha_s, beta_s = chunk.split(",")
        pairs.append((float(alpha_s), float(beta_s)))

    lines = ["alpha,beta,g,F_meanfield,F_granular,avg_generosity,F_meanfield_at_avg"]
    for alpha, beta in pairs:
        # m GTFT nodes is held fixed across the sweep; n scales with the fractions
        n = args.m / (1.0 - alpha - beta)
        comp = meanfield.granular_expected_payoff(alpha, beta, n, args.k, cfg, rv)
        for g, f_mf in zip(comp.g_grid, comp.mean_field):
            lines.append(
                f"{alpha!r},{beta!r},{g!r},{f_mf!r},{comp.granular!r},"
                f"{comp.avg_generosity!r},{comp.mean_field_at_avg!r}"
            )
    out_path = Path(args.out)
    out_path.write_text("\n".join(lines) + "\n")
    manifest = _manifest("compare", _echo_args(args), None, [str(out_path)], t0)
    _emit_json(manifest, str(out_path) + ".manifest.json")
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def _echo_args(args) -> dict:
    skip = {"func", "config"}
    return {key: value for key, value in sorted(vars(args).items()) if key not in skip}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtftlab",
        description="Simulate and analyze generosity-tuning population dynamics.",
    )
    parser.add_argument("--config", help="JSON file of defaults, keys matching flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the population dynamics, stream CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--g-hat", dest="g_hat", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--record-every", dest="record_every", type=int, default=0,
                   help="record cadence in interactions (default: n)")
    p.add_argument("--pairing", choices=population.PAIRING_MODES, default="idealized")
    p.add_argument("--init-counts", dest="init_counts", type=int, nargs="+",
                   help="starting GTFT counts per grid index (default: uniform random)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="CSV path; manifest lands beside it")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stationary", help="closed-form stationary law, optional exact check")
    p.add_argument("--k", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--b", dest="bb", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--beta", type=float, help="population mode: defect fraction")
    p.add_argument("--exact", action="store_true", help="compare against the linear solver")
    p.add_argument("--cap", type=int, default=ehrenfest.DEFAULT_STATE_CAP)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("mixing", help="mixing bound, coupling estimate, optional exact scan")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", dest="bb", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--exact-scan", dest="exact_scan", action="store_true")
    p.add_argument("--sweep", help="e.g. m=8,16,32,64 or k=2,4,8,16")
    p.add_argument("--step-limit", dest="step_limit", type=int,
                   default=ehrenfest.DEFAULT_STEP_LIMIT)
    p.add_argument("--cap", type=int, default=ehrenfest.DEFAULT_STATE_CAP)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_mixing)

    p = sub.add_parser("payoff", help="expected payoff of one strategy pairing")
    p.add_argument("--me", required=True, help="allc | alld | gtft:<g>")
    p.add_argument("--opp", required=True)
    _add_reward_args(p)
    p.add_argument("--g-hat", dest="g_hat", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10, help="series truncation error")
    p.add_argument("--mc-games", dest="mc_games", type=int, default=0,
                   help="also Monte Carlo this many games")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_payoff)

    p = sub.add_parser("optimality", help="optimal generosity, regime, and gap report")
    _add_reward_args(p)
    p.add_argument("--g-hat", dest="g_hat", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, help="also report the k-point stationary generosity")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_optimality)

    p = sub.add_parser("compare", help="mean-field vs granular payoff over (alpha, beta) pairs")
    _add_reward_args(p)
    p.add_argument("--g-hat", dest="g_hat", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True, help="GTFT node count, fixed over the sweep")
    p.add_argument("--populations", required=True,
                   help="semicolon-separated alpha,beta pairs, e.g. '0.25,0.25;0.3,0.2'")
    p.add_argument("--out", required=True, help="CSV path; manifest lands beside it")
    p.set_defaults(func=cmd_compare)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Fold --config file values in as defaults; explicit flags win."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    path = argv[at + 1]
    loaded = json.loads(Path(path).read_text())
    if not isinstance(loaded, dict):
        raise ValueError("config file must hold a JSON object")
    rest = argv[:at] + argv[at + 2:]
    command = rest[0] if rest else loaded.get("command")
    if command is None:
        raise ValueError("config file use requires a subcommand")
    if not rest:
        rest = [command]
    extra: list[str] = []
    present = set(rest)
    for key, value in loaded.items():
        if key == "command":
            continue
        flag = "--" + key.replace("_", "-")
        if flag in present:
            continue
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        elif isinstance(value, list):
            extra.append(flag)
            extra.extend(str(v) for v in value)
        else:
            extra.extend([flag, str(value)])
    return [rest[0]] + extra + rest[1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapExceededError, StepLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    sys.exit(main())
