"""Command-line harness: run pipelines, emit canonical reports, re-verify them.

Each subcommand reads set files (first line a group spec, then one element per
line), runs the corresponding pipeline with a seeded search policy, and writes
a RunReport as JSON (or a CSV verdict table).  `verify` replays a report from
its embedded raw inputs and compares determinism hashes, trusting nothing
cached inside the report.

Exit codes: 0 all verdicts pass; 1 verification failure or tampered report;
2 flag/parse errors; 3 precondition failures; 4 attempts exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import __version__
from .approx import StrongApproxVerificationError, strong_approx_check, strong_approx_periods
from .convtable import convolve_sets, indicator, t3_count, translation_defect
from .groups import (
    GroupError,
    GSet,
    inverse_set,
    parse_group,
    product_set,
    read_set_file,
)
from .moments import verify_binom_grid, verify_moment_grid
from .periods import (
    AttemptsExhaustedError,
    PreconditionError,
    SearchConfig,
    find_almost_periods,
    verify_certificate,
)
from .progressions import DensityTooLowError, VerificationError
from .reports import (
    RunReport,
    Verdict,
    determinism_hash,
    payload_fraction,
    report_from_json,
    set_payload,
    stored_hash_consistent,
    to_payload,
)
from .roth import (
    Not3APFreeError,
    density_increment_run,
    r3_exhaustive,
    t3_approx_progression,
)
from .structure import (
    NotPopularError,
    PipelineVerificationError,
    TranslateNotFoundError,
    abba_pipeline,
    core_set_pipeline,
)
from .sumsets import ap_in_small_sumset, ap_in_sumset, longest_ap_oracle


def _eq_margin(lhs, rhs) -> Fraction:
    """Margin for an exact-equality verdict: 0 iff equal, else −|difference|."""
    return -abs(Fraction(lhs) - Fraction(rhs))


def _bool_margin(ok: bool) -> int:
    return 0 if ok else -1


def _search_params(cfg: SearchConfig) -> dict:
    return {
        "seed": cfg.seed,
        "max_attempts": cfg.max_attempts,
        "attempts_ceiling": cfg.attempts_ceiling,
        "target_fraction": cfg.target_fraction,
        "on_exhausted": cfg.on_exhausted,
    }


def _config_from_params(params: dict) -> SearchConfig:
    s = params["search"]
    return SearchConfig(
        max_attempts=s["max_attempts"],
        attempts_ceiling=s["attempts_ceiling"],
        target_fraction=payload_fraction(s["target_fraction"]),
        seed=s["seed"],
        on_exhausted=s["on_exhausted"],
    )


# ── runners: pure, seeded, replayable ────────────────────────────────────────

def run_convolve(sets: list[GSet]):
    table = convolve_sets(sets)
    total = sum(v for _, v in table.entries)
    expected = 1
    for A in sets:
        expected *= len(A)
    inputs = {"sets": [set_payload(A) for A in sets]}
    parameters = {"count": len(sets)}
    results = {
        "entries": [[list(x), v] for x, v in table.entries],
        "support_size": len(table.entries),
        "total": total,
        "expected_total": expected,
    }
    verdicts = [Verdict("full_sum_identity", total == expected, _eq_margin(total, expected))]
    return inputs, parameters, results, verdicts


def run_periods(A: GSet, B: GSet, S: GSet, epsilon: Fraction, m: int, side: str, cfg: SearchConfig):
    cert = find_almost_periods(A, B, S, epsilon, m=m, side=side, cfg=cfg)
    f = convolve_sets([cert.A, cert.B])
    pair_set = product_set(cert.T, inverse_set(cert.T))
    worst = max(translation_defect(f, t, side, 2 * m).value for t in pair_set)
    inputs = {"sets": {"A": set_payload(A), "B": set_payload(B), "S": set_payload(S)}}
    parameters = {"epsilon": epsilon, "m": m, "side": side, "search": _search_params(cfg)}
    results = {"certificate": cert, "worst_defect": worst, "pair_set_size": len(pair_set)}
    verdicts = [
        Verdict("defect_within_bound", worst <= cert.bound_rhs, cert.bound_rhs - worst),
        Verdict("target_size_met", len(cert.T) >= cert.target_size, len(cert.T) - cert.target_size),
        Verdict("certificate_replay", verify_certificate(cert), _bool_margin(verify_certificate(cert))),
    ]
    return inputs, parameters, results, verdicts


def run_structure(pipeline: str, k: int, A: GSet, B: GSet | None, D: GSet | None, cfg: SearchConfig):
    if pipeline == "core_set":
        res = core_set_pipeline(A, k, cfg)
        inputs = {"sets": {"A": set_payload(A)}}
    elif pipeline == "abba":
        if B is None or D is None:
            raise ValueError("abba pipeline needs --set-b and --set-d")
        res = abba_pipeline(A, B, D, k, cfg)
        inputs = {"sets": {"A": set_payload(A), "B": set_payload(B), "D": set_payload(D)}}
    else:
        raise ValueError(f"unknown pipeline {pipeline!r}")
    parameters = {"pipeline": pipeline, "k": k, "search": _search_params(cfg)}
    rep_min = res.report["rep_min"]
    results = {
        "S": res.S,
        "iterated_size": len(res.iterated),
        "container_size": len(res.container),
        "report": {k2: v for k2, v in res.report.items()},
        "certificate": res.certificate,
    }
    verdicts = [
        Verdict("S_symmetric", inverse_set(res.S) == res.S, _bool_margin(inverse_set(res.S) == res.S)),
        Verdict("identity_in_S", res.S.group.identity() in res.S, _bool_margin(res.S.group.identity() in res.S)),
        Verdict("Sk_in_container", res.iterated.subset_of(res.container), _bool_margin(res.iterated.subset_of(res.container))),
        Verdict("representation_bound", rep_min >= res.rep_lower_bound, rep_min - res.rep_lower_bound),
    ]
    return inputs, parameters, results, verdicts


def run_sumset_ap(A: GSet, B: GSet, N: int | None, local: bool, oracle: bool, cfg: SearchConfig, k_override: int | None):
    if local:
        P = ap_in_small_sumset(A, B, cfg, k_override=k_override)
    else:
        if N is None:
            raise ValueError("--n is required unless --local is given")
        P = ap_in_sumset(A, B, N, cfg, k_override=k_override)
    g = P.group
    AB = product_set(GSet(g, A.elements), GSet(g, B.elements))
    outside = sum(1 for e in P.elements() if e not in AB)
    inputs = {"sets": {"A": set_payload(A), "B": set_payload(B)}}
    parameters = {
        "N": N,
        "local": local,
        "oracle": oracle,
        "k_override": k_override,
        "search": _search_params(cfg),
    }
    results = {"progression": P, "length": P.length, "sumset_size": len(AB)}
    verdicts = [Verdict("ap_inside_sumset", outside == 0, -outside)]
    if oracle:
        longest = longest_ap_oracle(AB)
        results["oracle_longest"] = longest
        verdicts.append(
            Verdict("oracle_dominance", longest.length >= P.length, longest.length - P.length)
        )
    return inputs, parameters, results, verdicts


def run_roth(mode: str, cfg: SearchConfig, *, r3_N: int | None = None, A: GSet | None = None,
             epsilon: Fraction | None = None, N: int | None = None, c1: Fraction = Fraction(1, 8),
             k_override: int | None = None, max_steps: int = 64):
    if mode == "r3":
        value, W = r3_exhaustive(r3_N)
        t3 = t3_count(indicator(W))
        inputs = {"sets": {}}
        parameters = {"mode": "r3", "N": r3_N, "search": _search_params(cfg)}
        results = {"value": value, "witness": W}
        verdicts = [
            Verdict("witness_3ap_free", t3 == len(W), _eq_margin(t3, len(W))),
            Verdict("witness_size_is_value", len(W) == value, _eq_margin(len(W), value)),
        ]
        return inputs, parameters, results, verdicts
    if mode == "t3":
        P, rep = t3_approx_progression(A, epsilon, cfg=cfg, N=N, k_override=k_override)
        inputs = {"sets": {"A": set_payload(A)}}
        parameters = {"mode": "t3", "epsilon": epsilon, "N": N, "k_override": k_override,
                      "search": _search_params(cfg)}
        results = {"progression": P, "report": rep}
        verdicts = [
            Verdict("deviation_within_stated", rep["within_bound"], rep["bound"] - rep["deviation"]),
            Verdict("deviation_within_sharp", rep["within_sharp"], rep["sharp_bound"] - rep["deviation"]),
        ]
        return inputs, parameters, results, verdicts
    if mode == "increment":
        run = density_increment_run(A, cfg=cfg, c1=c1, N=N, k_override=k_override, max_steps=max_steps)
        inputs = {"sets": {"A": set_payload(A)}}
        parameters = {"mode": "increment", "c1": c1, "N": N, "k_override": k_override,
                      "max_steps": max_steps, "search": _search_params(cfg)}
        results = dict(run)
        # exact form of passed_steps ≤ log(N/r₃)/log(10/9): 10^s·r₃ ≤ 9^s·N
        N0 = N if N is not None else max(a[0] for a in A)
        if run["within_bound"] is None:
            verdicts = [Verdict("iteration_within_bound", True, 0)]
            results["iteration_bound_note"] = f"N = {N0} exceeds the exhaustive r₃ cap; bound not evaluated"
        else:
            s = run["passed_steps"]
            r3_N0 = r3_exhaustive(N0)[0]
            margin = 9**s * N0 - 10**s * r3_N0
            verdicts = [Verdict("iteration_within_bound", margin >= 0, margin)]
        return inputs, parameters, results, verdicts
    raise ValueError(f"unknown roth mode {mode!r}")


def run_strong_approx(A: GSet, epsilon: Fraction, cfg: SearchConfig):
    _, K = strong_approx_check(A)
    S, rep = strong_approx_periods(A, epsilon, cfg)
    inputs = {"sets": {"A": set_payload(A)}}
    parameters = {"epsilon": epsilon, "search": _search_params(cfg)}
    results = {"K": K, "S": S, "report": rep}
    sym = inverse_set(S) == S
    verdicts = [
        Verdict("doubling_within_K", rep["A2_size"] <= rep["doubling_bound"],
                rep["doubling_bound"] - rep["A2_size"]),
        Verdict("defects_within_epsilon", rep["worst_defect"] <= rep["defect_bound"],
                rep["defect_bound"] - rep["worst_defect"]),
        Verdict("S_symmetric", sym, _bool_margin(sym)),
    ]
    return inputs, parameters, results, verdicts


def run_moments_grid(N_max: int, m_max: int, binom_n_max: int, threads: int):
    if threads >= 2:
        with ThreadPoolExecutor(max_workers=2) as ex:
            fut_h = ex.submit(verify_moment_grid, N_max, m_max)
            fut_b = ex.submit(verify_binom_grid, binom_n_max, max_m=m_max)
            hyper_ok, hyper_rows = fut_h.result()
            binom_ok, binom_rows = fut_b.result()
    else:
        hyper_ok, hyper_rows = verify_moment_grid(N_max, m_max)
        binom_ok, binom_rows = verify_binom_grid(binom_n_max, max_m=m_max)
    hoeffding_ok = all(r.get("hoeffding_ok", True) for r in hyper_rows)
    worst_h = min((r["margin"] for r in hyper_rows), default=Fraction(0))
    worst_b = min((r["margin"] for r in binom_rows), default=Fraction(0))
    failures = [r for r in hyper_rows if not r["bound_ok"] or not r.get("hoeffding_ok", True)]
    failures += [r for r in binom_rows if not r["bound_ok"]]
    inputs = {"sets": {}}
    parameters = {"N_max": N_max, "m_max": m_max, "binom_n_max": binom_n_max}
    results = {
        "hypergeom_rows": len(hyper_rows),
        "binom_rows": len(binom_rows),
        "worst_margin_hypergeom": worst_h,
        "worst_margin_binom": worst_b,
        "failures": failures,
    }
    verdicts = [
        Verdict("hypergeom_moments_bounded", hyper_ok, worst_h),
        Verdict("hypergeom_below_binomial", hoeffding_ok, _bool_margin(hoeffding_ok)),
        Verdict("binom_moments_and_tails_bounded", binom_ok, worst_b),
    ]
    return inputs, parameters, results, verdicts


# ── report assembly and emission ─────────────────────────────────────────────

def _emit(report: RunReport, args) -> int:
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.passed() else 1


def _run_and_emit(command: str, args, runner, *runner_args) -> int:
    t0 = time.perf_counter()
    inputs, parameters, results, verdicts = runner(*runner_args)
    timing = int((time.perf_counter() - t0) * 1000)
    report = RunReport(
        command=command,
        inputs=inputs,
        parameters=parameters,
        results=results,
        verdicts=verdicts,
        seed=args.seed,
        version=__version__,
        timing_ms=timing,
    )
    return _emit(report, args)


def _config(args) -> SearchConfig:
    return SearchConfig(
        max_attempts=args.max_attempts,
        attempts_ceiling=args.attempts_ceiling,
        target_fraction=args.target_fraction,
        seed=args.seed,
        on_exhausted=args.on_exhausted,
    )


# ── subcommand entry points ──────────────────────────────────────────────────

def cmd_convolve(args) -> int:
    sets = [read_set_file(p) for p in args.sets]
    return _run_and_emit("convolve", args, run_convolve, sets)


def cmd_periods(args) -> int:
    A, B, S = (read_set_file(p) for p in (args.set_a, args.set_b, args.set_s))
    return _run_and_emit(
        "periods", args, run_periods, A, B, S, args.epsilon, args.m, args.side, _config(args)
    )


def cmd_structure(args) -> int:
    A = read_set_file(args.set_a)
    B = read_set_file(args.set_b) if args.set_b else None
    D = read_set_file(args.set_d) if args.set_d else None
    return _run_and_emit(
        "structure", args, run_structure, args.pipeline, args.k, A, B, D, _config(args)
    )


def cmd_sumset_ap(args) -> int:
    A = read_set_file(args.set_a)
    B = read_set_file(args.set_b)
    return _run_and_emit(
        "sumset_ap", args, run_sumset_ap, A, B, args.n, args.local, args.oracle,
        _config(args), args.k_override,
    )


def cmd_roth(args) -> int:
    cfg = _config(args)
    if args.exhaustive_r3 is not None:
        return _run_and_emit("roth", args, lambda: run_roth("r3", cfg, r3_N=args.exhaustive_r3))
    A = read_set_file(args.set)
    if args.increment:
        return _run_and_emit(
            "roth", args,
            lambda: run_roth("increment", cfg, A=A, N=args.n, c1=args.c1,
                             k_override=args.k_override, max_steps=args.max_steps),
        )
    if args.epsilon is None:
        raise ValueError("--epsilon is required for the smoothed-T₃ comparison")
    return _run_and_emit(
        "roth", args,
        lambda: run_roth("t3", cfg, A=A, epsilon=args.epsilon, N=args.n,
                         k_override=args.k_override),
    )


def cmd_strong_approx(args) -> int:
    if args.squares_mod is not None:
        p = args.squares_mod
        g = parse_group(f"Z%{p}")
        A = GSet(g, [(a,) for a in sorted({pow(x, 2, p) for x in range(1, p)} - {0})])
    else:
        if not args.set:
            raise ValueError("give --set FILE or --squares-mod P")
        A = read_set_file(args.set)
    return _run_and_emit("strong_approx", args, run_strong_approx, A, args.epsilon, _config(args))


def cmd_moments_grid(args) -> int:
    return _run_and_emit(
        "moments_grid", args, run_moments_grid, args.N_max, args.m_max, args.binom_n_max,
        args.threads,
    )


# ── verify: replay a report from its own raw inputs ─────────────────────────

def _set_from_payload(p: dict) -> GSet:
    A = GSet(parse_group(p["group"]), [tuple(e) for e in p["elements"]])
    if set_payload(A)["sha256"] != p["sha256"]:
        raise VerificationError("set content does not match its recorded hash")
    return A


def _replay(payload: dict):
    command = payload["command"]
    params = payload["parameters"]
    sets = payload["inputs"]["sets"]
    if command == "convolve":
        return run_convolve([_set_from_payload(p) for p in sets])
    if command == "periods":
        return run_periods(
            _set_from_payload(sets["A"]), _set_from_payload(sets["B"]), _set_from_payload(sets["S"]),
            payload_fraction(params["epsilon"]), params["m"], params["side"],
            _config_from_params(params),
        )
    if command == "structure":
        B = _set_from_payload(sets["B"]) if "B" in sets else None
        D = _set_from_payload(sets["D"]) if "D" in sets else None
        return run_structure(
            params["pipeline"], params["k"], _set_from_payload(sets["A"]), B, D,
            _config_from_params(params),
        )
    if command == "sumset_ap":
        return run_sumset_ap(
            _set_from_payload(sets["A"]), _set_from_payload(sets["B"]), params["N"],
            params["local"], params["oracle"], _config_from_params(params), params["k_override"],
        )
    if command == "roth":
        cfg = _config_from_params(params)
        if params["mode"] == "r3":
            return run_roth("r3", cfg, r3_N=params["N"])
        A = _set_from_payload(sets["A"])
        if params["mode"] == "increment":
            return run_roth("increment", cfg, A=A, N=params["N"],
                            c1=payload_fraction(params["c1"]),
                            k_override=params["k_override"], max_steps=params["max_steps"])
        return run_roth("t3", cfg, A=A, epsilon=payload_fraction(params["epsilon"]),
                        N=params["N"], k_override=params["k_override"])
    if command == "strong_approx":
        return run_strong_approx(
            _set_from_payload(sets["A"]), payload_fraction(params["epsilon"]),
            _config_from_params(params),
        )
    if command == "moments_grid":
        return run_moments_grid(params["N_max"], params["m_max"], params["binom_n_max"], 1)
    raise ValueError(f"cannot replay unknown command {command!r}")


def cmd_verify(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        text = fh.read()
    payload = json.loads(text)
    parsed = report_from_json(text)  # validates schema and required fields
    if parsed.version != __version__:
        print(f"verify: report version {parsed.version} ≠ {__version__}", file=sys.stderr)
        return 1
    if not stored_hash_consistent(payload):
        print("verify: determinism hash does not match report contents", file=sys.stderr)
        return 1
    inputs, parameters, results, verdicts = _replay(payload)
    fresh = RunReport(
        command=parsed.command,
        inputs=inputs,
        parameters=parameters,
        results=results,
        verdicts=verdicts,
        seed=parsed.seed,
        version=__version__,
        timing_ms=parsed.timing_ms,
    )
    if determinism_hash(fresh.payload()) != payload["determinism_hash"]:
        print("verify: replay produced different results", file=sys.stderr)
        return 1
    ok = fresh.passed()
    print(f"verify: replay matches; verdicts {'all pass' if ok else 'contain failures'}")
    return 0 if ok else 1


# ── argument parsing ─────────────────────────────────────────────────────────

def _fraction(s: str) -> Fraction:
    return Fraction(s)


def _env_int(name: str, default):
    v = os.environ.get(f"APLAB_{name}")
    return int(v) if v is not None else default


def _env_fraction(name: str, default: Fraction) -> Fraction:
    v = os.environ.get(f"APLAB_{name}")
    return Fraction(v) if v is not None else default


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=_env_int("SEED", 0))
    common.add_argument("--max-attempts", type=int, default=_env_int("MAX_ATTEMPTS", None))
    common.add_argument("--attempts-ceiling", type=int, default=_env_int("ATTEMPTS_CEILING", 500))
    common.add_argument(
        "--target-fraction", type=_fraction, default=_env_fraction("TARGET_FRACTION", Fraction(1, 2))
    )
    common.add_argument(
        "--on-exhausted",
        choices=("error", "fallback"),
        default=os.environ.get("APLAB_ON_EXHAUSTED", "error"),
    )
    common.add_argument(
        "--format",
        choices=("json", "csv"),
        default=os.environ.get("APLAB_FORMAT", "json"),
        help="json: full report; csv: verdict table with columns check,passed,margin",
    )
    common.add_argument("--out", default=os.environ.get("APLAB_OUT"))
    common.add_argument(
        "--threads",
        type=int,
        default=_env_int("THREADS", 1),
        help="independent verification lanes; 1 is the bit-reproducible baseline",
    )

    p = argparse.ArgumentParser(prog="aplab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("convolve", parents=[common], help="convolution table of set files")
    sp.add_argument("--sets", nargs="+", required=True, metavar="FILE")
    sp.set_defaults(func=cmd_convolve)

    sp = sub.add_parser("periods", parents=[common], help="seeded almost-period search")
    sp.add_argument("--set-a", required=True)
    sp.add_argument("--set-b", required=True)
    sp.add_argument("--set-s", required=True)
    sp.add_argument("--epsilon", type=_fraction, required=True)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--side", choices=("left", "right"), default="left")
    sp.set_defaults(func=cmd_periods)

    sp = sub.add_parser("structure", parents=[common], help="product-set structure pipelines")
    sp.add_argument("--pipeline", choices=("core_set", "abba"), default="core_set")
    sp.add_argument("--set-a", required=True)
    sp.add_argument("--set-b")
    sp.add_argument("--set-d")
    sp.add_argument("-k", type=int, default=2)
    sp.set_defaults(func=cmd_structure)

    sp = sub.add_parser("sumset_ap", parents=[common], help="arithmetic progressions in sumsets")
    sp.add_argument("--set-a", required=True)
    sp.add_argument("--set-b", required=True)
    sp.add_argument("--n", type=int, default=None, help="window size N for A,B ⊆ [1..N]")
    sp.add_argument("--local", action="store_true", help="use the small-sumset variant")
    sp.add_argument("--oracle", action="store_true", help="cross-check against the brute-force oracle")
    sp.add_argument("--k-override", type=int, default=None)
    sp.set_defaults(func=cmd_sumset_ap)

    sp = sub.add_parser("roth", parents=[common], help="T₃ machinery and density increments")
    sp.add_argument("--exhaustive-r3", type=int, default=None, metavar="N")
    sp.add_argument("--set", help="set file for the t3/increment modes")
    sp.add_argument("--epsilon", type=_fraction, default=None)
    sp.add_argument("--increment", action="store_true", help="run the density-increment loop")
    sp.add_argument("--c1", type=_fraction, default=Fraction(1, 8))
    sp.add_argument("--n", type=int, default=None, help="window size N (default: max element)")
    sp.add_argument("--k-override", type=int, default=None)
    sp.add_argument("--max-steps", type=int, default=64)
    sp.set_defaults(func=cmd_roth)

    sp = sub.add_parser("strong_approx", parents=[common], help="strong approximate groups")
    sp.add_argument("--set")
    sp.add_argument("--squares-mod", type=int, default=None, metavar="P")
    sp.add_argument("--epsilon", type=_fraction, default=Fraction(1, 2))
    sp.set_defaults(func=cmd_strong_approx)

    sp = sub.add_parser("moments_grid", parents=[common], help="exact moment/tail bound grids")
    sp.add_argument("--N-max", type=int, default=40, dest="N_max")
    sp.add_argument("--m-max", type=int, default=4, dest="m_max")
    sp.add_argument("--binom-n-max", type=int, default=30, dest="binom_n_max")
    sp.set_defaults(func=cmd_moments_grid)

    sp = sub.add_parser("verify", parents=[common], help="replay a report and compare hashes")
    sp.add_argument("report")
    sp.set_defaults(func=cmd_verify)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GroupError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (PreconditionError, DensityTooLowError, Not3APFreeError, NotPopularError,
            TranslateNotFoundError) as e:
        print(f"precondition failed: {e}", file=sys.stderr)
        return 3
    except AttemptsExhaustedError as e:
        print(f"attempts exhausted: {e}", file=sys.stderr)
        return 4
    except (VerificationError, PipelineVerificationError, StrongApproxVerificationError) as e:
        print(f"verification failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
