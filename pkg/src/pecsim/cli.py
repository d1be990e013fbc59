"""Command-line interface.

Subcommands:
  run       drift experiment from a JSON config (built-in default schedule
            when no config is given); writes report JSON, CSVs and figures
  qpd       print the signed decomposition table for given noise parameters
  estimate  chain posterior updates over the periods of a counts file and
            emit per-period parameter estimates
  metrics   summarize a written report, optionally re-rendering figures
"""

from __future__ import annotations

import argparse
import json
import sys

from .bayes import (
    GridSpec,
    adaptive_update,
    fit_forward_map,
    init_estimator_state,
    pair_marginal_simulator,
)
from .circuit import build_bv
from .harness import ExperimentConfig, run_experiment
from .noise import NoiseParams
from .pec import composite_qpd
from .reports import (
    config_from_dict,
    dumps_json,
    load_counts,
    plot_metrics,
    write_report,
)


def _parse_grid(text: str) -> GridSpec:
    """Compact grid syntax: "f=lo:hi:step,x=lo:hi:step[,refine=N]"."""
    kwargs = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        key = key.strip()
        if key == "f" or key == "x":
            pieces = value.split(":")
            if len(pieces) != 3:
                raise argparse.ArgumentTypeError(f"bad grid range {part!r}")
            lo, hi, step = (float(p) for p in pieces)
            kwargs[f"{key}_lo"], kwargs[f"{key}_hi"], kwargs[f"{key}_step"] = lo, hi, step
        elif key == "refine":
            kwargs["refine_levels"] = int(value)
        else:
            raise argparse.ArgumentTypeError(f"unknown grid field {key!r}")
    return GridSpec(**kwargs)


def _cmd_run(args) -> int:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = config_from_dict(json.load(fh))
    else:
        config = ExperimentConfig.default()
    if args.seeds:
        from dataclasses import replace

        config = replace(config, seeds=tuple(int(s) for s in args.seeds.split(",")))
    report = run_experiment(config)
    paths = write_report(report, args.out, figures=not args.no_figures)
    imps = report.summary.get("improvements")
    if imps:
        for key in ("accuracy_mean_pct", "stability_mean_pct",
                    "accuracy_final_pct", "stability_final_pct"):
            value = imps.get(key)
            shown = "n/a" if value is None else f"{value:.1f}%"
            print(f"{key}: {shown}")
    if report.summary.get("failed_periods"):
        print(f"failed periods: {report.summary['failed_periods']}", file=sys.stderr)
    for name, path in paths.items():
        print(f"wrote {name}: {path}")
    return 0


def _cmd_qpd(args) -> int:
    from .harness import check_circuit_scale

    spam = tuple(float(v) for v in args.spam.split(","))
    params = NoiseParams(spam, args.xc, args.xt)
    circuit = build_bv(args.secret)
    check_circuit_scale(circuit)
    if params.n_qubits != circuit.n_qubits:
        print(
            f"error: {params.n_qubits} fidelities for a {circuit.n_qubits}-qubit circuit",
            file=sys.stderr,
        )
        return 2
    qpd = composite_qpd(params, circuit)
    print(f"# secret={args.secret} n_circuits={qpd.size} gamma={qpd.gamma!r}")
    print("k\teta\tweight\tsign")
    weights = qpd.weights
    signs = qpd.signs
    for k in range(qpd.size):
        print(f"{k}\t{float(qpd.eta[k])!r}\t{float(weights[k])!r}\t{int(signs[k])}")
    return 0


def _cmd_estimate(args) -> int:
    with open(args.prior, "r", encoding="utf-8") as fh:
        prior = json.load(fh)
    secret = prior["secret"]
    circuit = build_bv(secret)
    grid = _parse_grid(args.grid) if args.grid else GridSpec()
    counts = load_counts(args.counts)
    if counts.n_qubits != circuit.n_qubits:
        print(
            f"error: counts have {counts.n_qubits} qubits, circuit has {circuit.n_qubits}",
            file=sys.stderr,
        )
        return 2

    spam_priors = prior["spam"]
    state = init_estimator_state(
        circuit,
        tuple(p["mean"] for p in spam_priors),
        tuple(p.get("variance", 1e-4) for p in spam_priors),
        prior["depol"]["xc"]["mean"],
        prior["depol"]["xt"]["mean"],
        prior.get("dirichlet_pseudocount", 10.0),
    )
    fmap = fit_forward_map(pair_marginal_simulator(circuit)) if circuit.n_cnots else None

    records = []
    for period in counts.periods():
        table = counts.tables.get((period, 0))
        if table is None:
            print(f"error: period {period} has no circuit_index 0", file=sys.stderr)
            return 2
        state, params, _ = adaptive_update(state, table, fmap, grid, circuit)
        records.append(
            {
                "period": period,
                "spam": list(params.spam),
                "xc": params.xc,
                "xt": params.xt,
            }
        )
    text = dumps_json({"secret": secret, "shots": counts.shots, "estimates": records})
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_metrics(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        report_dict = json.load(fh)
    summary = report_dict.get("summary", {})
    for name, stats in summary.get("per_pipeline", {}).items():
        print(
            f"{name}: mean eps_R={stats['mean_eps_r']:.4f} "
            f"final eps_R={stats['final_eps_r']:.4f} "
            f"mean s_R={stats['mean_s_r']:.4f} final s_R={stats['final_s_r']:.4f}"
        )
    imps = summary.get("improvements")
    if imps:
        for key, value in imps.items():
            shown = "n/a" if value is None else f"{value:.1f}%"
            print(f"{key}: {shown}")
    if args.out:
        from .plots import render_figures

        paths = render_figures(plot_metrics(report_dict), args.out)
        for name, path in paths.items():
            print(f"wrote {name}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pecsim",
        description="Adaptive probabilistic error cancellation under drifting noise.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a drift experiment")
    p_run.add_argument("--config", help="JSON config path (default: built-in schedule)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seeds", help="comma-separated seed override")
    p_run.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_run.set_defaults(func=_cmd_run)

    p_qpd = sub.add_parser("qpd", help="print the signed decomposition table")
    p_qpd.add_argument("--spam", required=True, help="comma-separated per-qubit fidelities")
    p_qpd.add_argument("--xc", type=float, required=True, help="control depolarizing rate")
    p_qpd.add_argument("--xt", type=float, required=True, help="target depolarizing rate")
    p_qpd.add_argument("--secret", default="1000")
    p_qpd.set_defaults(func=_cmd_qpd)

    p_est = sub.add_parser("estimate", help="estimate parameters from a counts file")
    p_est.add_argument("--counts", required=True, help="counts CSV path")
    p_est.add_argument("--prior", required=True, help="prior JSON path")
    p_est.add_argument("--grid", help='grid spec, e.g. "f=0.5:1:0.01,x=0:0.25:0.005,refine=1"')
    p_est.add_argument("--out", help="output JSON path (default: stdout)")
    p_est.set_defaults(func=_cmd_estimate)

    p_met = sub.add_parser("metrics", help="summarize a written report")
    p_met.add_argument("--report", required=True, help="report.json path")
    p_met.add_argument("--out", help="directory for re-rendered figures")
    p_met.set_defaults(func=_cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
