"""Report serialization and the counts-file format.

Counts files are CSV with header ``period,circuit_index,bitstring,count``;
bitstrings have qubit 0 leftmost, counts within one (period, circuit_index)
group must sum to the declared shot total, UTF-8 with LF line endings.

Reports are schema-versioned JSON plus two CSVs: a per-qubit table
(seed-averaged) and a plot-ready per-period metric table. All floating
values are serialized with 17 significant digits so regeneration from the
same config and seeds is byte-identical.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from .errors import CountsParseError
from .harness import ExperimentConfig, ExperimentReport
from .noise import DriftSpec, ParamDrift
from .qsim import CountsTable

REPORT_SCHEMA_VERSION = 1
COUNTS_HEADER = ("period", "circuit_index", "bitstring", "count")


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _dump_json(obj, out: io.StringIO, indent: int = 0) -> None:
    # Hand-rolled writer: json.dumps cannot format floats, and 17
    # significant digits are part of the report contract.
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        items = list(obj.items())
        for i, (key, value) in enumerate(items):
            out.write(f'{pad}  "{key}": ')
            _dump_json(value, out, indent + 2)
            out.write(",\n" if i + 1 < len(items) else "\n")
        out.write(pad + "}")
    elif isinstance(obj, list):
        if not obj:
            out.write("[]")
            return
        out.write("[")
        for i, value in enumerate(obj):
            _dump_json(value, out, indent)
            if i + 1 < len(obj):
                out.write(", ")
        out.write("]")
    elif isinstance(obj, bool):
        out.write("true" if obj else "false")
    elif obj is None:
        out.write("null")
    elif isinstance(obj, float):
        out.write(fmt17(obj))
    elif isinstance(obj, int):
        out.write(str(obj))
    elif isinstance(obj, str):
        out.write('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    else:
        raise TypeError(f"cannot serialize {type(obj)}")


def dumps_json(obj) -> str:
    out = io.StringIO()
    _dump_json(_to_jsonable(obj), out)
    out.write("\n")
    return out.getvalue()


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "secret": config.secret,
        "shots": config.shots,
        "periods": config.drift.n_periods,
        "drift": {
            "spam": [
                {
                    "initial_mean": d.initial_mean,
                    "per_period_delta": d.per_period_delta,
                    "variance": d.variance,
                }
                for d in config.drift.spam
            ],
            "depol": {
                "xc": {
                    "initial_mean": config.drift.xc.initial_mean,
                    "per_period_delta": config.drift.xc.per_period_delta,
                    "variance": config.drift.xc.variance,
                },
                "xt": {
                    "initial_mean": config.drift.xt.initial_mean,
                    "per_period_delta": config.drift.xt.per_period_delta,
                    "variance": config.drift.xt.variance,
                },
            },
            "x_max": config.drift.x_max,
        },
        "priors": {
            "spam": [
                {"mean": p.mean, "variance": p.variance} for p in config.spam_priors
            ],
            "depol": {
                "xc": {"mean": config.xc_prior_mean},
                "xt": {"mean": config.xt_prior_mean},
            },
            "dirichlet_pseudocount": config.dirichlet_pseudocount,
        },
        "grid": {
            "f": {"lo": config.grid.f_lo, "hi": config.grid.f_hi, "step": config.grid.f_step},
            "x": {"lo": config.grid.x_lo, "hi": config.grid.x_hi, "step": config.grid.x_step},
            "refine": config.grid.refine_levels,
        },
        "pipelines": list(config.pipelines),
        "seeds": list(config.seeds),
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    from .bayes import GridSpec
    from .harness import PriorSpec

    drift_data = data["drift"]
    drift = DriftSpec(
        spam=tuple(
            ParamDrift(d["initial_mean"], d["per_period_delta"], d["variance"])
            for d in drift_data["spam"]
        ),
        xc=ParamDrift(**{k: drift_data["depol"]["xc"][k] for k in
                         ("initial_mean", "per_period_delta", "variance")}),
        xt=ParamDrift(**{k: drift_data["depol"]["xt"][k] for k in
                         ("initial_mean", "per_period_delta", "variance")}),
        n_periods=data["periods"],
        x_max=drift_data.get("x_max", 1.0 / 3.0),
    )
    priors = data["priors"]
    grid_data = data.get("grid", {})
    grid = GridSpec(
        f_lo=grid_data.get("f", {}).get("lo", 0.5),
        f_hi=grid_data.get("f", {}).get("hi", 1.0),
        f_step=grid_data.get("f", {}).get("step", 0.01),
        x_lo=grid_data.get("x", {}).get("lo", 0.0),
        x_hi=grid_data.get("x", {}).get("hi", 0.25),
        x_step=grid_data.get("x", {}).get("step", 0.005),
        refine_levels=grid_data.get("refine", 0),
    )
    return ExperimentConfig(
        secret=data["secret"],
        shots=data["shots"],
        drift=drift,
        spam_priors=tuple(
            PriorSpec(p["mean"], p.get("variance", 1e-4)) for p in priors["spam"]
        ),
        xc_prior_mean=priors["depol"]["xc"]["mean"],
        xt_prior_mean=priors["depol"]["xt"]["mean"],
        dirichlet_pseudocount=priors.get("dirichlet_pseudocount", 10.0),
        grid=grid,
        pipelines=tuple(data.get("pipelines", ("raw", "roem", "pec_static", "pec_adaptive"))),
        seeds=tuple(data.get("seeds", (1, 2, 3, 4, 5))),
    )


def report_to_dict(report: ExperimentReport) -> dict:
    seeds = []
    for sr in report.seed_results:
        periods = []
        for p in sr.periods:
            entry = {
                "period": p.period,
                "params": {
                    "spam": list(p.params.spam),
                    "xc": p.params.xc,
                    "xt": p.params.xt,
                },
                "failure": p.failure,
                "pipelines": {
                    name: {
                        "expectations": list(pr.expectations),
                        "eps_r": pr.eps_r,
                        "s_r": pr.s_r,
                    }
                    for name, pr in p.pipelines.items()
                },
            }
            if p.adaptive_params is not None:
                entry["adaptive_estimate"] = {
                    "spam": list(p.adaptive_params.spam),
                    "xc": p.adaptive_params.xc,
                    "xt": p.adaptive_params.xt,
                }
            periods.append(entry)
        seeds.append({"seed": sr.seed, "periods": periods})
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": config_to_dict(report.config),
        "results": seeds,
        "summary": report.summary,
    }


def plot_metrics(report_dict: dict) -> list[dict]:
    """Seed-averaged per-period metrics, one row per (period, pipeline)."""
    pipelines = report_dict["config"]["pipelines"]
    periods = report_dict["config"]["periods"]
    rows = []
    for t in range(1, periods + 1):
        for name in pipelines:
            eps, s = [], []
            for sr in report_dict["results"]:
                p = sr["periods"][t - 1]
                if p["failure"] is None and name in p["pipelines"]:
                    eps.append(p["pipelines"][name]["eps_r"])
                    s.append(p["pipelines"][name]["s_r"])
            if not eps:
                continue
            rows.append(
                {
                    "period": t,
                    "pipeline": name,
                    "eps_r_mean": float(np.mean(eps)),
                    "eps_r_std": float(np.std(eps)),
                    "s_r_mean": float(np.mean(s)),
                    "s_r_std": float(np.std(s)),
                }
            )
    return rows


def write_report(report: ExperimentReport, out_dir: str, figures: bool = True) -> dict[str, str]:
    """Write report.json, the per-qubit and plot-ready CSVs, and (by
    default) the rendered metric figures. Returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    report_dict = report_to_dict(report)

    json_path = os.path.join(out_dir, "report.json")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(report_dict))
    paths["report"] = json_path

    csv_path = os.path.join(out_dir, "period_results.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("period,pipeline,qubit,expectation,eps_R,s_R\n")
        n_qubits = len(report.config.secret) + 1
        for t in range(1, report.config.n_periods + 1):
            for name in report.config.pipelines:
                rows = [
                    sr["periods"][t - 1]["pipelines"][name]
                    for sr in report_dict["results"]
                    if sr["periods"][t - 1]["failure"] is None
                    and name in sr["periods"][t - 1]["pipelines"]
                ]
                if not rows:
                    continue
                expectations = np.mean([r["expectations"] for r in rows], axis=0)
                eps = float(np.mean([r["eps_r"] for r in rows]))
                s = float(np.mean([r["s_r"] for r in rows]))
                for q in range(n_qubits):
                    fh.write(
                        f"{t},{name},{q},{fmt17(expectations[q])},{fmt17(eps)},{fmt17(s)}\n"
                    )
    paths["period_results"] = csv_path

    metrics = plot_metrics(report_dict)
    plot_path = os.path.join(out_dir, "plot_metrics.csv")
    with open(plot_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("period,pipeline,eps_r_mean,eps_r_std,s_r_mean,s_r_std\n")
        for row in metrics:
            fh.write(
                f"{row['period']},{row['pipeline']},{fmt17(row['eps_r_mean'])},"
                f"{fmt17(row['eps_r_std'])},{fmt17(row['s_r_mean'])},{fmt17(row['s_r_std'])}\n"
            )
    paths["plot_metrics"] = plot_path

    if figures:
        from .plots import render_figures

        paths.update(render_figures(metrics, out_dir))
    return paths


@dataclass(frozen=True)
class CountsFile:
    """Parsed counts dataset: one table per (period, circuit_index)."""

    n_qubits: int
    shots: int
    tables: dict[tuple[int, int], CountsTable]

    def periods(self) -> list[int]:
        return sorted({p for p, _ in self.tables})

    def circuit_indices(self, period: int) -> list[int]:
        return sorted({k for p, k in self.tables if p == period})


def write_counts(path: str, counts: CountsFile) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(COUNTS_HEADER) + "\n")
        for (period, k) in sorted(counts.tables):
            table = counts.tables[(period, k)]
            for bits, c in table.entries.items():
                fh.write(f"{period},{k},{bits},{c}\n")


def load_counts(path: str, shots: int | None = None) -> CountsFile:
    """Parse and validate a counts file.

    Every (period, circuit_index) group must sum to `shots` (inferred from
    the first group when not given). Malformed rows raise CountsParseError
    with the 1-based line number.
    """
    groups: dict[tuple[int, int], dict[str, int]] = {}
    n_qubits = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CountsParseError("empty file", line=1) from None
        if tuple(h.strip() for h in header) != COUNTS_HEADER:
            raise CountsParseError(
                f"bad header {header!r}, expected {','.join(COUNTS_HEADER)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise CountsParseError(f"expected 4 fields, got {len(row)}", line=lineno)
            try:
                period = int(row[0])
                k = int(row[1])
                count = int(row[3])
            except ValueError:
                raise CountsParseError(f"non-integer field in {row!r}", line=lineno) from None
            bits = row[2].strip()
            if not bits or any(c not in "01" for c in bits):
                raise CountsParseError(f"invalid bitstring {row[2]!r}", line=lineno)
            if n_qubits is None:
                n_qubits = len(bits)
            elif len(bits) != n_qubits:
                raise CountsParseError(
                    f"bitstring length {len(bits)} != {n_qubits}", line=lineno
                )
            if count < 0:
                raise CountsParseError(f"negative count {count}", line=lineno)
            group = groups.setdefault((period, k), {})
            if bits in group:
                raise CountsParseError(
                    f"duplicate bitstring {bits!r} for period {period}, circuit {k}",
                    line=lineno,
                )
            group[bits] = count
    if not groups:
        raise CountsParseError("no data rows", line=2)

    tables = {}
    for key in sorted(groups):
        entries = dict(sorted(groups[key].items()))
        total = sum(entries.values())
        if shots is None:
            shots = total
        if total != shots:
            raise CountsParseError(
                f"period {key[0]} circuit {key[1]}: counts sum to {total}, expected {shots}"
            )
        tables[key] = CountsTable(n_qubits, entries, total)
    return CountsFile(n_qubits, shots, tables)
