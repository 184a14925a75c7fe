"""Command-line entry point.

Subcommands: generate (semiprime or backbone CNFs), preprocess (simplification
ladder), solve (decompose + anneal, single cell or config-file sweep), bench
(compiled vs pure kernels), tts (time-to-solution from runs.jsonl), report
(aggregates + runtime plot data).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from .circuit import EncodingOption, generate_instance, semiprime_catalog
from .cnf import parse_dimacs, write_dimacs
from .preprocess import ConditionList, MAX_LEVEL, run_ladder
from . import harness
from .harness import (BackboneSpec, SweepConfig, compute_tts,
                      generate_backbone_instance, load_records, load_timings,
                      results_dir, run_experiment, timings_path_for,
                      write_aggregates, write_runtime_report)


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.backbone:
        n, m, b = args.backbone
        spec = BackboneSpec(n=int(n), m=int(m), b=float(b) / 100.0)
        cnf = generate_backbone_instance(spec, args.seed, force=args.force)
        Path(args.output).write_text(write_dimacs(cnf))
        print(f"wrote {args.output}: n={cnf.num_vars} m={cnf.num_clauses}")
        return 0
    if args.bits is None:
        print("generate needs --bits or --backbone", file=sys.stderr)
        return 2
    option = EncodingOption.OPTION2 if args.option == 2 else EncodingOption.OPTION1
    catalog = semiprime_catalog(args.bits)
    targets = [args.semiprime] if args.semiprime else [c.semiprime for c in catalog]
    if args.all:
        targets = [c.semiprime for c in catalog]
    outdir = Path(args.dir) if args.dir else None
    for number in targets if (args.all or args.semiprime) else targets[:1]:
        cnf, _nl, inst = generate_instance(args.bits, number, option)
        if outdir:
            outdir.mkdir(parents=True, exist_ok=True)
            path = outdir / f"semiprime-{args.bits:02d}-{number}.cnf"
        else:
            path = Path(args.output)
        path.write_text(write_dimacs(cnf, comments=[
            f"product {inst.semiprime} = {inst.p} * {inst.q}",
            f"bits {inst.bit_width}",
        ]))
        print(f"wrote {path}: {inst.semiprime} = {inst.p}*{inst.q}, "
              f"n={cnf.num_vars} m={cnf.num_clauses}")
    return 0


def _condition_json(cond: ConditionList) -> str:
    rows = [dataclasses.asdict(r) for r in cond.records]
    return json.dumps(rows, indent=1)


def _cmd_preprocess(args: argparse.Namespace) -> int:
    cnf = parse_dimacs(Path(args.input).read_text(), provenance=args.input)
    res = run_ladder(cnf, level=args.level, seed=args.seed,
                     max_guesses=args.max_guesses,
                     flip_on_conflict=args.flip_on_conflict)
    Path(args.output).write_text(write_dimacs(res.cnf))
    if args.cond:
        Path(args.cond).write_text(_condition_json(res.condition))
    if args.report:
        rows = [{
            "pass": r.name, "level": args.level,
            "vars_remaining": r.vars_after, "clauses_remaining": r.clauses_after,
            "wall_time": round(r.wall_time, 6),
        } for r in res.reports]
        Path(args.report).write_text(json.dumps(rows, indent=1))
    print(f"level {args.level}: {cnf.num_vars} vars / {cnf.num_clauses} clauses "
          f"-> {res.vars_remaining} vars / {res.cnf.num_clauses} clauses"
          + (" [UNSAT residual]" if res.unsat else ""))
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    if args.sweep:
        config = SweepConfig.from_file(args.sweep)
    else:
        if not args.input and not args.instance:
            print("solve needs -i/--input, --instance, or --sweep", file=sys.stderr)
            return 2
        config = SweepConfig(
            instances=[args.instance or args.input],
            levels=[args.level],
            strategies=[args.strategy],
            backends=[args.backend],
            repeats=args.repeats,
            seed=args.seed,
            cap=args.cap,
            budget=args.budget,
            num_samples=args.num_samples,
            max_guesses=args.max_guesses,
            stop_on_solve=args.stop_on_solve,
        )
    if args.output:
        out_path = Path(args.output)
        out_dir, runs_filename = out_path.parent, out_path.name
    else:
        out_dir, runs_filename = results_dir(args.results_dir), "runs.jsonl"

    def progress(rec):
        status = "solved" if rec.solved else f"failed ({rec.reason})"
        print(f"  {rec.instance} L{rec.level} {rec.strategy}/{rec.backend} "
              f"seed={rec.seed}: {status} in {rec.iterations_used} iterations")

    records = run_experiment(config, out_dir, runs_filename, progress=progress)
    solved = sum(r.solved for r in records)
    print(f"{solved}/{len(records)} repeats solved -> "
          f"{Path(out_dir) / runs_filename}")

    if args.trace and records:
        from .decompose import iterate as _iterate
        from .harness import expand_instances
        instance_id, cnf = expand_instances(config.instances[0])[0]
        res = run_ladder(cnf, level=config.levels[0], seed=config.seed,
                         max_guesses=config.max_guesses)
        run = _iterate(res.cnf, res.condition, cnf,
                       strategy=config.strategies[0],
                       backend=config.backends[0], cap=1, seed=config.seed,
                       num_samples=1, collect_trace=True)
        with Path(args.trace).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sweep", "temperature", "best_energy"])
            w.writerows(run.trace)
        print(f"anneal trace of the first solver call -> {args.trace}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    import random
    import time as _time

    from .solver import kernels
    from .solver import _kernels_py as pure

    try:
        from .solver import _kernels as compiled
    except ImportError:
        compiled = None

    n = args.spins
    rng = random.Random(args.seed)
    jd = [0.0] * (n * n)
    for i in range(n):
        for q in range(i + 1, n):
            v = float(rng.randint(-7, 7))
            jd[i * n + q] = v
            jd[q * n + i] = v
    h = [float(rng.randint(-5, 5)) for _ in range(n)]

    def run(mod):
        t0 = _time.perf_counter()
        outs = []
        for k in range(args.samples):
            seed = pure.mix_seed(args.seed, k)
            outs.append(mod.anneal(n, jd, h, args.sweeps, 10.0, 0.05, seed, False))
        return outs, _time.perf_counter() - t0

    pure_out, pure_t = run(pure)
    print(f"pure python : {args.samples} anneals of {n} spins x {args.sweeps} sweeps "
          f"in {pure_t:.3f}s")
    if compiled is None:
        print("compiled extension not built (pip install -e . rebuilds it); "
              "benchmark ran the fallback only")
        return 0
    comp_out, comp_t = run(compiled)
    print(f"compiled    : same workload in {comp_t:.3f}s")
    agree = all(pe == ce and list(ps) == list(cs)
                for (ps, pe, _), (cs, ce, _) in zip(pure_out, comp_out))
    print(f"identical results: {agree}")
    print(f"speedup: {pure_t / comp_t:.1f}x")
    print(f"import selected: {'compiled' if kernels.COMPILED_KERNELS else 'pure'}")
    return 0 if agree else 1


def _cmd_tts(args: argparse.Namespace) -> int:
    records = load_records(args.input)
    if not records:
        print("no records", file=sys.stderr)
        return 1
    cells: dict[tuple, list] = {}
    for r in records:
        cells.setdefault((r.instance, r.level, r.strategy, r.backend), []).append(r)
    print(f"{'instance':32} {'lvl':>3} {'strategy':8} {'backend':8} "
          f"{'p':>6} {'t':>9} {'tts':>12}")
    for key, recs in sorted(cells.items()):
        est = compute_tts(recs)
        tts = "inf" if est.tts == float("inf") else f"{est.tts:12.1f}"
        print(f"{key[0]:32} {key[1]:>3} {key[2]:8} {key[3]:8} "
              f"{est.p:6.2f} {est.t:9.1f} {tts:>12}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    records = load_records(args.input)
    if not records:
        print("no records", file=sys.stderr)
        return 1
    out_csv = Path(args.output)
    write_aggregates(records, out_csv)
    timings = load_timings(timings_path_for(Path(args.input)))
    plot_path = write_runtime_report(records, out_csv.parent, timings)
    print(f"aggregates -> {out_csv}")
    print(f"plot data  -> {plot_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="isingsat",
        description="factorization CNFs, preprocessing ladder, and "
                    "spin-budgeted decomposition on an emulated Ising annealer")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write semiprime or backbone CNFs")
    g.add_argument("--bits", type=int, help="semiprime bit width (4..16)")
    g.add_argument("--semiprime", type=int, help="specific product from the catalog")
    g.add_argument("--all", action="store_true", help="whole catalog for --bits")
    g.add_argument("--option", type=int, choices=(1, 2), default=1,
                   help="OR-gate encoding option (default 1)")
    g.add_argument("--backbone", nargs=3, metavar=("N", "M", "B"),
                   help="random 3SAT with planted backbone; B in percent")
    g.add_argument("--force", action="store_true",
                   help="allow off-grid backbone specs")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", default="instance.cnf")
    g.add_argument("--dir", help="directory for --all output")
    g.set_defaults(func=_cmd_generate)

    pre = sub.add_parser("preprocess", help="run the simplification ladder")
    pre.add_argument("-i", "--input", required=True)
    pre.add_argument("--level", type=int, default=MAX_LEVEL,
                    help=f"cumulative ladder level 0..{MAX_LEVEL}")
    pre.add_argument("--seed", type=int, default=0)
    pre.add_argument("--max-guesses", type=int, default=1)
    pre.add_argument("--flip-on-conflict", action="store_true")
    pre.add_argument("-o", "--output", required=True)
    pre.add_argument("--cond", help="write the condition list as JSON")
    pre.add_argument("--report", help="write per-pass statistics as JSON")
    pre.set_defaults(func=_cmd_preprocess)

    s = sub.add_parser("solve", help="preprocess + decompose + solve repeats")
    s.add_argument("-i", "--input", help="DIMACS file")
    s.add_argument("--instance", help="instance spec, e.g. semiprime:8:143")
    s.add_argument("--sweep", help="JSON sweep config (full factorial)")
    s.add_argument("--strategy", choices=("bfs", "dfs"), default="dfs")
    s.add_argument("--backend", choices=("emulator", "tabu"), default="emulator")
    s.add_argument("--level", type=int, default=MAX_LEVEL)
    s.add_argument("--budget", type=int, default=45)
    s.add_argument("--cap", type=int, default=5000)
    s.add_argument("--repeats", type=int, default=20)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--num-samples", type=int, default=10,
                   help="chip reads per solver call")
    s.add_argument("--max-guesses", type=int, default=1)
    s.add_argument("--stop-on-solve", action="store_true",
                   help="stop a cell's repeats after the first success")
    s.add_argument("-o", "--output", help="runs.jsonl path")
    s.add_argument("--results-dir", help=f"default dir (or ${harness.RESULTS_ENV})")
    s.add_argument("--trace", help="CSV dump of one anneal trace")
    s.set_defaults(func=_cmd_solve)

    b = sub.add_parser("bench", help="compare compiled and pure kernels")
    b.add_argument("--spins", type=int, default=45)
    b.add_argument("--sweeps", type=int, default=500)
    b.add_argument("--samples", type=int, default=20)
    b.add_argument("--seed", type=int, default=3)
    b.set_defaults(func=_cmd_bench)

    t = sub.add_parser("tts", help="time-to-solution table from runs.jsonl")
    t.add_argument("-i", "--input", required=True)
    t.set_defaults(func=_cmd_tts)

    r = sub.add_parser("report", help="aggregates.csv + runtime plot data")
    r.add_argument("-i", "--input", required=True, help="runs.jsonl")
    r.add_argument("-o", "--output", default="aggregates.csv")
    r.set_defaults(func=_cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
