import argparse
import json
import os
import sys
from dataclasses import replace

from chain_analysis import (DEFAULT_T_CAP, analyze, check_contraction, check_eigen_bound,
                            check_opnorm, check_sandwich, check_static_decay, check_tail_bound,
                            REPORT_HEADER, report_row)
from errors import ConfigurationError, NumericalError, RangeError, StructuralError
from exact_engine import (DEFAULT_DENSE_CAP, MISS_HEADER, TRAJECTORY_HEADER, complete_closed_form_series,
                          complete_miss_probabilities, exact_expected_unvisited)
from growth_model import (DEFAULT_EXPANDER_DEGREE, DEFAULT_GRAPH_SEED, grow, load_edge_list,
                          parse_schedule)
from monte_carlo import (DEFAULT_BATCH, DEFAULT_SEED, ESTIMATE_HEADER, PER_TRIAL_HEADER,
                         SimulationPlan, estimate_cover_time, estimate_unvisited, simulate_once)
from theorem_suite import (CATALOG, CERTIFICATE_HEADER, DEFAULT_DELTA, DEFAULT_TRIALS, ENGINES,
                           SCALING_HEADER, default_case, run_case, run_cases, scaling_table)
from transition_kernels import (DEFAULT_P, DEFAULT_Q, check_walk_family, kernel_csv_rows, kernel_for,
                                resolve_walk, verify_kernel)
from utils import banner, load_config, log, print_summary, set_quiet, write_csv

OUTPUT_DIR_ENV = "RWOGG_OUTPUT_DIR"
COVER_HEADER = ["start", "mean", "sd", "half_width", "trials", "seed", "capped"]
CHECK_HEADER = ["n", "check", "ok", "lhs", "rhs", "detail"]
SWEEP_GAMMAS = "0,0.5,1"
SWEEP_LADDER = "25,50,100,200"

# config.json keys and their built-in defaults
CONFIG_DEFAULTS = {
    "trials": DEFAULT_TRIALS,
    "seed": DEFAULT_SEED,
    "dense_cap": DEFAULT_DENSE_CAP,
    "jobs": 1,
    "t_cap": DEFAULT_T_CAP,
    "expander_degree": DEFAULT_EXPANDER_DEGREE,
    "graph_seed": DEFAULT_GRAPH_SEED,
    "delta": DEFAULT_DELTA,
    "output_dir": None,
    "batch_size": DEFAULT_BATCH,
}

THEOREM_PARAMS = ("c", "C", "gamma", "Delta", "a", "epsilon")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _key_value(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got '{text}'")
    try:
        return key, float(value)
    except ValueError:
        return key, value


def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument('--config', type=str, default=None,
                        help='Configuration file path (default: config.json when present)')
    shared.add_argument('--output', type=str, default=None,
                        help=f'CSV output file, "-" for stdout (default: ${OUTPUT_DIR_ENV}/<command>.csv)')
    shared.add_argument('--jobs', type=int, default=None, help='Worker processes')
    shared.add_argument('--quiet', action='store_true', help='Only print warnings and the summary')

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument('--family', type=str, default=None,
                       help='complete | path | lollipop | expander_like | custom')
    model.add_argument('--walk', type=str, default=None,
                       help='uniform | simple | metropolis | chain (or the full walk tag)')
    model.add_argument('--schedule', type=str, default=None,
                       help='constant:c=K | linear:C=K | power:C=K,gamma=G[,exp=E] | table:PATH')
    model.add_argument('--n', type=int, default=None, help='Final round')
    model.add_argument('--ladder', type=_int_list, default=None, help='Comma-separated rounds')
    model.add_argument('--n0', type=int, default=None, help='Initial vertices (1 = standard model)')
    model.add_argument('--p', type=float, default=None, help='Path chain endpoint holding probability')
    model.add_argument('--q', type=float, default=None, help='Path chain interior step probability')
    model.add_argument('--degree', type=int, default=None, help='Expander attachment degree')
    model.add_argument('--graph-seed', type=int, default=None, help='Expander attachment seed')
    model.add_argument('--edges', type=str, default=None, help='Edge list for the custom family')
    model.add_argument('--trials', type=int, default=None, help='Monte Carlo trials')
    model.add_argument('--seed', type=int, default=None, help='Master seed')
    model.add_argument('--dense-cap', type=int, default=None, help='Largest order for exact runs')
    model.add_argument('--t-cap', type=int, default=None, help='Mixing time search cap')
    model.add_argument('--batch-size', type=int, default=None, help='Trials walked together')
    model.add_argument('--engine', choices=ENGINES, default="auto", help='Engine override')

    parser = argparse.ArgumentParser(description='Random walks on growing graphs: unvisited vertices')
    sub = parser.add_subparsers(dest="command", required=True)

    exact = sub.add_parser('exact', parents=[shared, model], help='Exact E[U(n)]')
    exact.add_argument('--trajectory', action='store_true', help='Write E[U_t] for every step')
    exact.add_argument('--miss', action='store_true', help='Write Pr[v_k never visited] per k')

    simulate = sub.add_parser('simulate', parents=[shared, model], help='Monte Carlo estimate of E[U(n)]')
    simulate.add_argument('--per-trial', action='store_true', help='Write U(n) of every trial')
    simulate.add_argument('--trajectory', action='store_true', help='Write the U_t trace of trial 0')
    simulate.add_argument('--cover', action='store_true', help='Cover time of the static G^(n) instead')

    analyze_cmd = sub.add_parser('analyze', parents=[shared, model], help='Chain quantities per order')
    analyze_cmd.add_argument('--checks', action='store_true', help='Run the spectral inequality checks')
    analyze_cmd.add_argument('--dump-kernels', type=str, default=None, metavar='DIR',
                             help='Write each kernel as a dense CSV')

    theorem = sub.add_parser('theorem', parents=[shared, model], help='Theorem certificate')
    theorem.add_argument('theorem', nargs='?', default=None, help='Theorem id or "all"')
    theorem.add_argument('--list', action='store_true', help='List theorem ids')
    theorem.add_argument('--param', type=_key_value, action='append', default=[],
                         metavar='KEY=VALUE', help='Case parameter')
    for name in THEOREM_PARAMS:
        theorem.add_argument(f'--{name}', type=float, default=None, dest=f"param_{name}")
    theorem.add_argument('--delta', type=float, default=None, help='Trend proxy threshold')

    sweep = sub.add_parser('sweep', parents=[shared, model], help='Scaling table over gamma')
    sweep.add_argument('--gammas', type=_float_list, default=None,
                       help=f'Comma-separated gammas (default {SWEEP_GAMMAS})')
    sweep.add_argument('--C', type=float, default=1.0, help='Schedule prefactor')
    return parser


def _load(path):
    if path is None:
        if not os.path.exists('config.json'):
            return {}
        path = 'config.json'
    try:
        return load_config(path)
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e}", field="config")
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path} is not valid JSON: {e}", field="config")


def _settings(args, config):
    """Command-line flags over config.json over built-in defaults."""
    unknown = set(config) - set(CONFIG_DEFAULTS)
    if unknown:
        log(f"Ignoring unknown config keys: {', '.join(sorted(unknown))}", "!")
    pick = lambda flag, key: flag if flag is not None else config.get(key, CONFIG_DEFAULTS[key])
    settings = {
        "command": args.command,
        "trials": pick(args.trials, "trials"),
        "seed": pick(args.seed, "seed"),
        "dense_cap": pick(args.dense_cap, "dense_cap"),
        "jobs": pick(args.jobs, "jobs"),
        "t_cap": pick(args.t_cap, "t_cap"),
        "degree": pick(args.degree, "expander_degree"),
        "graph_seed": pick(args.graph_seed, "graph_seed"),
        "delta": pick(getattr(args, "delta", None), "delta"),
        "batch_size": pick(args.batch_size, "batch_size"),
        "output_dir": config.get("output_dir"),
        "engine": args.engine,
        "p": DEFAULT_P if args.p is None else args.p,
        "q": DEFAULT_Q if args.q is None else args.q,
        "n0": 1 if args.n0 is None else args.n0,
    }
    for key in ("trials", "jobs", "dense_cap", "t_cap", "batch_size"):
        if int(settings[key]) < 1:
            raise ConfigurationError(f"must be >= 1, got {settings[key]}", field=key)
    for key in ("family", "walk", "schedule", "n", "ladder", "edges"):
        settings[key] = getattr(args, key)
    return settings


def _graph_kwargs(settings):
    kwargs = {"degree": settings["degree"], "graph_seed": settings["graph_seed"]}
    if settings["family"] == "custom":
        if not settings["edges"]:
            raise ConfigurationError("custom family needs --edges", field="edges")
        kwargs["edges"] = tuple(load_edge_list(settings["edges"]))
    return kwargs


def _model(settings, need_schedule=True):
    """Fill family, walk and schedule defaults; return the parsed schedule."""
    settings["family"] = settings["family"] or "complete"
    if settings["walk"] is None:
        settings["walk"] = "uniform_complete" if settings["family"] == "complete" else "lazy_simple"
    settings["walk"] = check_walk_family(settings["walk"], settings["family"])
    if settings["n"] is None:
        if settings["ladder"]:
            settings["n"] = max(settings["ladder"])
        else:
            raise ConfigurationError("--n is required", field="n")
    if settings["n"] < 1:
        raise ConfigurationError(f"must be >= 1, got {settings['n']}", field="n")
    if not need_schedule:
        return None
    settings["schedule"] = settings["schedule"] or "linear:C=1"
    return parse_schedule(settings["schedule"], settings["n"], settings["family"], settings["n0"])


def _output_path(args, settings):
    if args.output:
        return args.output
    directory = os.environ.get(OUTPUT_DIR_ENV) or settings["output_dir"]
    if directory:
        return os.path.join(directory, f"{args.command}.csv")
    return None


def _emit(args, text):
    """Summary lines go to stdout unless the CSV itself does."""
    print(text, file=sys.stderr if args.output == "-" else sys.stdout)


def _write(args, settings, header, rows):
    path = _output_path(args, settings)
    if path:
        banner("[STEP 3] Writing results")
        write_csv(path, header, rows, config=settings)


def cmd_exact(args, settings):
    schedule = _model(settings)
    n, family, walk = settings["n"], settings["family"], settings["walk"]
    closed = family == "complete" and walk == "uniform_complete"
    engine = settings["engine"]
    if engine == "mc":
        raise ConfigurationError("the exact command has no Monte Carlo engine; use simulate",
                                 field="engine")
    if engine == "closed" and not closed:
        raise ConfigurationError("closed form needs the uniform walk on complete graphs",
                                 field="engine")

    banner("[STEP 2] Exact propagation")
    log(f"{family} / {walk} / {schedule.describe()} / n={n}")
    if closed and engine in ("auto", "closed") and not args.trajectory:
        series = complete_closed_form_series(schedule, n)
        value = float(series[-1])
        by_round = series
        miss = complete_miss_probabilities(schedule, n)
        trajectory_rows = []
    else:
        result = exact_expected_unvisited(schedule, family, walk, n, settings["p"], settings["q"],
                                          dense_cap=settings["dense_cap"],
                                          record_trajectory=args.trajectory,
                                          **_graph_kwargs(settings))
        value, by_round, miss = result.expected_unvisited, result.unvisited_by_round, result.miss_probabilities
        trajectory_rows = result.trajectory_rows()
        if result.truncated:
            log(f"{result.truncated} targets truncated below survival mass 1e-15")
    log(f"E[U({n})] computed", "+")

    if args.trajectory:
        _write(args, settings, TRAJECTORY_HEADER, trajectory_rows)
    elif args.miss:
        _write(args, settings, MISS_HEADER, [[k, float(p)] for k, p in enumerate(miss, 1)])
    else:
        _write(args, settings, ["n", "expected_unvisited"],
               [[m, float(v)] for m, v in enumerate(by_round, 1)])
    _emit(args, f"E[U]={value:.6f}")
    return 0


def cmd_simulate(args, settings):
    schedule = _model(settings)
    graph = _graph_kwargs(settings)
    banner("[STEP 2] Monte Carlo simulation")

    if args.cover:
        snapshot = grow(settings["family"], schedule.order_at(settings["n"]), **graph)
        kernel = kernel_for(settings["walk"], snapshot, settings["p"], settings["q"])
        record = estimate_cover_time(kernel, settings["trials"], settings["seed"])
        if record.capped:
            log("some trials hit the cover-time cap", "!")
        _write(args, settings, COVER_HEADER,
               [[record.start] + record.summary_row() + [record.capped]])
        _emit(args, f"t_cov~{record.mean:.6f} (start v{record.start}, trials={record.trials}, "
                    f"seed={record.seed})")
        return 0

    plan = SimulationPlan(schedule=schedule, family=settings["family"], walk=settings["walk"],
                          n=settings["n"], trials=settings["trials"], seed=settings["seed"],
                          p=settings["p"], q=settings["q"], degree=graph["degree"],
                          graph_seed=graph["graph_seed"], edges=graph.get("edges"))
    log(f"{plan.trials} trials, seed {plan.seed}, {settings['jobs']} jobs")

    if args.trajectory:
        outcome = simulate_once(replace(plan, record_trajectory=True), 0)
        times, rounds, values = outcome.trace
        _write(args, settings, TRAJECTORY_HEADER,
               [[int(t), int(i), int(v)] for t, i, v in zip(times, rounds, values)])
        _emit(args, f"U={outcome.unvisited} (trial 0, seed={plan.seed})")
        return 0

    record = estimate_unvisited(plan, settings["jobs"], settings["batch_size"])
    if not record.interval_valid:
        log(f"only {record.trials} trials; the normal half-width is indicative", "!")
    if args.per_trial:
        _write(args, settings, PER_TRIAL_HEADER,
               [[t, int(v)] for t, v in enumerate(record.values)])
    else:
        _write(args, settings, ESTIMATE_HEADER, [record.summary_row()])
    half = "n/a" if record.half_width is None else f"{record.half_width:.6f}"
    _emit(args, f"E[U]~{record.mean:.6f} +/- {half} (trials={record.trials}, seed={record.seed})")
    return 0


def _kernel_checks(kernel, report):
    if not (kernel.lazy and kernel.reversible):
        log(f"order {kernel.order}: checks need a lazy reversible kernel, skipped", "!")
        return []
    checks = [check_sandwich(report), check_eigen_bound(report)]
    if kernel.order > 1:
        checks += [check_opnorm(kernel, w, report.t_hit) for w in range(1, kernel.order + 1)]
        start = [1.0] + [0.0] * (kernel.order - 1)
        checks.append(check_contraction(kernel, start))
        horizon = max(1, int(report.t_hit))
        checks.append(check_tail_bound(kernel, kernel.order, [1, horizon, 2 * horizon], report.t_hit))
        checks.append(check_static_decay(kernel, 1.0, report.t_hit))
    return checks


def cmd_analyze(args, settings):
    _model(settings, need_schedule=False)
    graph = _graph_kwargs(settings)
    ladder = sorted(set(settings["ladder"] or [settings["n"]]))
    banner("[STEP 2] Chain analysis")

    rows, check_rows = [], []
    failures = 0
    report = None
    for m in ladder:
        snapshot = grow(settings["family"], m, **graph)
        kernel = kernel_for(settings["walk"], snapshot, settings["p"], settings["q"])
        verify_kernel(kernel)
        report = analyze(kernel, settings["t_cap"])
        rows.append(report_row(report))
        log(f"n={m}: t_hit={report.t_hit:.6g} t_mix={report.t_mix} lambda2={report.lambda2:.6g}")
        if args.dump_kernels:
            header, kernel_rows = kernel_csv_rows(kernel)
            write_csv(os.path.join(args.dump_kernels, f"kernel_{m}.csv"),
                      header, kernel_rows, config=settings)
        if args.checks:
            for check in _kernel_checks(kernel, report):
                check_rows.append([m, check.name, check.ok, check.lhs, check.rhs, check.detail])
                if not check.ok:
                    failures += 1
                    log(f"n={m}: {check.name} violated ({check.lhs:.6g} vs {check.rhs:.6g}, "
                        f"{check.detail})", "!")

    _write(args, settings, REPORT_HEADER, rows)
    if args.checks:
        path = _output_path(args, settings)
        if path and path != "-":
            stem, _ = os.path.splitext(path)
            write_csv(f"{stem}_checks.csv", CHECK_HEADER, check_rows, config=settings)
        print_summary({"checks": len(check_rows), "violations": failures}, title="INVARIANT CHECKS",
                      file=sys.stderr if args.output == "-" else None)
    t_mix = "exceeded" if report.t_mix_capped else report.t_mix
    _emit(args, f"t_hit={report.t_hit:.6f} t_mix={t_mix} lambda2={report.lambda2:.6f}")
    return 1 if failures else 0


def _theorem_params(args, settings):
    params = {name: getattr(args, f"param_{name}") for name in THEOREM_PARAMS
              if getattr(args, f"param_{name}") is not None}
    if args.n0 is not None:
        params["n0"] = args.n0
    if args.p is not None:
        params["p"] = args.p
    if args.q is not None:
        params["q"] = args.q
    if settings["schedule"]:
        params["schedule"] = settings["schedule"]
    params.update(dict(args.param))
    return params


def cmd_theorem(args, settings):
    if args.list:
        for theorem_id, entry in CATALOG.items():
            _emit(args, f"{theorem_id:<12} {entry.title}")
        return 0
    if not args.theorem:
        raise ConfigurationError("give a theorem id, 'all' or --list", field="theorem")

    ids = list(CATALOG) if args.theorem == "all" else [args.theorem]
    if args.theorem != "all" and args.theorem not in CATALOG:
        raise ConfigurationError(f"unknown theorem id '{args.theorem}'", field="theorem")
    ladder = settings["ladder"] or ([settings["n"]] if settings["n"] else [])
    graph = {"degree": settings["degree"], "graph_seed": settings["graph_seed"]}
    if settings["family"] == "custom":
        graph.update(_graph_kwargs(settings))

    cases = [default_case(theorem_id,
                          params=_theorem_params(args, settings),
                          ladder=tuple(ladder),
                          engine=settings["engine"],
                          family=settings["family"],
                          walk=settings["walk"],
                          trials=settings["trials"],
                          seed=settings["seed"],
                          dense_cap=settings["dense_cap"],
                          t_cap=settings["t_cap"],
                          delta=settings["delta"],
                          graph=graph,
                          jobs=1 if len(ids) > 1 else settings["jobs"])
             for theorem_id in ids]

    banner("[STEP 2] Theorem certificates")
    if len(cases) == 1:
        certificates = [run_case(cases[0])]
        errors = {}
    else:
        outcome = run_cases(cases, settings["jobs"])
        certificates = [r["value"] for r in outcome["results"] if r["value"] is not None]
        errors = {r["job"]: r["error"] for r in outcome["results"] if r["value"] is None}

    rows = [row for certificate in certificates for row in certificate.csv_rows()]
    _write(args, settings, CERTIFICATE_HEADER, rows)

    summary = {c.theorem_id: c.verdict for c in certificates}
    summary.update({job: "error" for job in errors})
    print_summary(summary, title="CERTIFICATE SUMMARY",
                  file=sys.stderr if args.output == "-" else None)
    for certificate in certificates:
        _emit(args, f"{certificate.theorem_id}: {certificate.verdict}")
    if errors or any(c.failed for c in certificates):
        return 1
    inapplicable = [c for c in certificates if c.verdict == "inapplicable"]
    for certificate in inapplicable:
        log(f"{certificate.theorem_id}: hypothesis violated: {certificate.violated}", "!")
    return 2 if inapplicable else 0


def cmd_sweep(args, settings):
    settings["family"] = settings["family"] or "path"
    settings["walk"] = resolve_walk(settings["walk"] or "lazy_simple")
    ladder = settings["ladder"] or _int_list(SWEEP_LADDER)
    gammas = args.gammas or _float_list(SWEEP_GAMMAS)
    settings["ladder"], settings["gammas"], settings["C"] = ladder, gammas, args.C
    banner("[STEP 2] Scaling sweep")
    table = scaling_table(settings["family"], settings["walk"], gammas, ladder, C=args.C,
                          engine=settings["engine"], trials=settings["trials"],
                          seed=settings["seed"], dense_cap=settings["dense_cap"],
                          p=settings["p"], q=settings["q"], jobs=settings["jobs"],
                          **_graph_kwargs(settings))
    _write(args, settings, SCALING_HEADER, [row.row() for row in table])
    for row in table:
        if row.n == max(ladder):
            _emit(args, f"gamma={row.gamma:g}: exponent={row.slope:.4f}")
    return 0


COMMANDS = {
    "exact": cmd_exact,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "theorem": cmd_theorem,
    "sweep": cmd_sweep,
}


def main(argv=None):
    """
    Parse, validate and run one subcommand.

    Returns:
        int: 0 on success, 1 on a failed certificate or check, 2 on a configuration error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    set_quiet(args.quiet)
    try:
        banner("[STEP 1] Configuration")
        settings = _settings(args, _load(args.config))
        log(f"Running '{args.command}' with seed {settings['seed']}")
        return COMMANDS[args.command](args, settings)
    except (ConfigurationError, RangeError, StructuralError) as e:
        log(f"Configuration error: {e}", "!")
        return 2
    except NumericalError as e:
        log(f"Numerical failure: {e} (residual {e.residual})", "!")
        return 1


if __name__ == "__main__":
    sys.exit(main())
