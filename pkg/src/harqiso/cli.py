"""Command line front end.

    harqiso exponent  --snr-db -4.64 --rate 0.3333
    harqiso stability --p-1 0.4 --h 0.5 --g 1 --servers 1
    harqiso simulate  --p-1 0.45 --h 0.5 --slots 100000 --seed 7 --format json
    harqiso sweep     --snr-db-min -6 --snr-db-max -4 --snr-db-step 0.25 \\
                      --k-info 16 --dk 0 --n-base 47 --dn 1 --simulate

Exit codes: 0 success, 2 usage error, 3 domain or convergence error,
4 I/O error. ``HARQISO_SEED`` supplies the seed when ``--seed`` is absent.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import blocksize, exponent, queueing, sim, wer
from .errors import HarqError

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4

COMMANDS = ("exponent", "series", "stability", "optimize", "simulate", "sweep")

# flags that cannot be combined; a config-file key is ignored when any member
# of its group is already on the command line
_EXCLUSIVE = [("--snr-db", "--snr-linear"), ("--rate", "--rate-nat")]


class UsageError(Exception):
    pass


@dataclass
class RunSpec:
    command: str
    parameters: dict = field(default_factory=dict)
    output: str = "json"
    output_path: Optional[str] = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=100)


def _add_output(p):
    p.add_argument("--format", choices=("csv", "json"), default="json",
                   help="output format (default json)")
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--config", metavar="PATH", help="key=value file, one flag per line")


def _add_snr(p, required=False):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--snr-db", type=float, help="per-symbol SNR in dB")
    g.add_argument("--snr-linear", type=float, help="per-symbol SNR, linear")


def _add_geometry(p):
    p.add_argument("--k-info", type=int, help="information bits K")
    p.add_argument("--dk", type=int, default=0, help="CRC bits (default 0)")
    p.add_argument("--n-base", type=int, help="coded bits of the base code")
    p.add_argument("--dn", type=int, help="bits per retransmission group")


def _add_series(p):
    p.add_argument("--p-1", dest="p_minus1", type=float, help="WER of the base code")
    p.add_argument("--h", type=float, help="per-step WER ratio")
    p.add_argument("--g", type=float, default=1.0, help="ratio of ratios (default 1)")
    p.add_argument("--series-file", metavar="PATH", help="WER table CSV (index,wer)")
    _add_snr(p)
    _add_geometry(p)


def _add_sim(p):
    p.add_argument("--algorithm", choices=("A", "B"), default=None,
                   help="A: one HARQ server, B: several (default A, or B when --servers > 1)")
    p.add_argument("--slots", type=int, default=100_000, help="slots to simulate")
    p.add_argument("--seed", type=int, default=None, help="64-bit seed (env HARQISO_SEED)")
    p.add_argument("--eps0", type=float, default=1e-3, help="delay quantile level")
    p.add_argument("--queue-cap", type=int, default=None, help="drop beyond this many queued")
    p.add_argument("--no-boost", action="store_true", help="never send new packets at C_0")
    p.add_argument("--warmup", type=float, default=0.01, help="warm-up fraction for steady stats")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="harqiso", formatter_class=_formatter,
                     description="Isochronous HARQ-II analysis and simulation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("exponent", formatter_class=_formatter,
                       help="error exponent landmarks and WER bound")
    _add_snr(p, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rate", type=float, help="binary code rate (bits per coded symbol)")
    g.add_argument("--rate-nat", type=float, help="code rate in nats")
    p.add_argument("--n-coded", type=int, help="block length for the WER bound")
    _add_output(p)

    p = sub.add_parser("series", formatter_class=_formatter, help="list a WER ladder")
    _add_series(p)
    p.add_argument("--terms", type=int, default=10, help="entries from index -1 (default 10)")
    _add_output(p)

    p = sub.add_parser("stability", formatter_class=_formatter, help="queue stability report")
    _add_series(p)
    p.add_argument("--servers", type=int, default=1, help="HARQ servers a (default 1)")
    _add_output(p)

    p = sub.add_parser("optimize", formatter_class=_formatter,
                       help="retransmission block scaling, or the closed-form design with --k0")
    p.add_argument("--k0", type=float, help="stability budget; selects the closed-form design")
    p.add_argument("--servers", type=int, default=1, help="HARQ servers a (default 1)")
    p.add_argument("--p0", type=float, help="estimated WER of C_0")
    p.add_argument("--h", type=float, help="estimated per-step ratio")
    p.add_argument("--g", type=float, default=1.0, help="estimated ratio of ratios")
    p.add_argument("--series-file", metavar="PATH", help="estimate p0, h, g, theta from a table")
    p.add_argument("--theta", type=float, default=None, help="error-floor tail mass")
    p.add_argument("--dn-bas", type=int, default=1, help="base retransmission block")
    p.add_argument("--r-min", type=float, default=0.1, help="lower scaling bound")
    p.add_argument("--r-max", type=float, default=8.0, help="upper scaling bound")
    _add_output(p)

    p = sub.add_parser("simulate", formatter_class=_formatter, help="slotted protocol simulation")
    _add_series(p)
    p.add_argument("--servers", type=int, default=1, help="HARQ servers a (default 1)")
    _add_sim(p)
    p.add_argument("--trace", metavar="PATH", help="write a slot trace CSV")
    p.add_argument("--trace-slots", type=int, default=100, help="slots covered by --trace")
    _add_output(p)

    p = sub.add_parser("sweep", formatter_class=_formatter,
                       help="stability and throughput over an SNR grid")
    p.add_argument("--snr-db-min", type=float, required=True)
    p.add_argument("--snr-db-max", type=float, required=True)
    p.add_argument("--snr-db-step", type=float, default=0.1)
    _add_geometry(p)
    p.add_argument("--servers", type=int, default=1, help="HARQ servers a (default 1)")
    p.add_argument("--simulate", action="store_true", help="also run the simulator per point")
    _add_sim(p)
    _add_output(p)
    return parser


def _config_tokens(path: str, argv: list) -> list:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from None
    present = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
    tokens = []
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"--config line {n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.lstrip("-").replace("_", "-")
        group = next((grp for grp in _EXCLUSIVE if flag in grp), (flag,))
        if any(f in present for f in group):
            continue
        if flag in ("--no-boost", "--simulate"):
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(flag)
            continue
        tokens.append(f"{flag}={value}")
    return tokens


def _need(cond, flag, msg):
    if not cond:
        raise UsageError(f"{flag}: {msg}")


def _validate(ns) -> None:
    d = vars(ns)
    if d.get("snr_linear") is not None:
        _need(d["snr_linear"] > 0, "--snr-linear", "must be positive")
    if d.get("p_minus1") is not None:
        _need(0 < d["p_minus1"] <= 1, "--p-1", "must be in (0, 1]")
    if d.get("h") is not None:
        _need(0 < d["h"] < 1, "--h", "must be in (0, 1)")
    if d.get("g") is not None:
        _need(0 < d["g"] <= 1, "--g", "must be in (0, 1]")
    if d.get("p0") is not None:
        _need(0 < d["p0"] <= 1, "--p0", "must be in (0, 1]")
    if d.get("k0") is not None:
        _need(0 < d["k0"] < 1, "--k0", "must be in (0, 1)")
    if d.get("theta") is not None:
        _need(d["theta"] >= 0, "--theta", "must be >= 0")
    if "servers" in d:
        _need(d["servers"] >= 1, "--servers", "must be >= 1")
    if d.get("slots") is not None:
        _need(d["slots"] >= 1, "--slots", "must be >= 1")
    if d.get("seed") is not None:
        _need(0 <= d["seed"] < 2**64, "--seed", "must be a 64-bit unsigned integer")
    if d.get("eps0") is not None:
        _need(0 < d["eps0"] < 1, "--eps0", "must be in (0, 1)")
    if d.get("dk") is not None:
        _need(d["dk"] >= 0, "--dk", "must be >= 0")
    if d.get("terms") is not None:
        _need(d["terms"] >= 1, "--terms", "must be >= 1")
    if d.get("n_coded") is not None:
        _need(d["n_coded"] >= 1, "--n-coded", "must be >= 1")
    if d.get("dn_bas") is not None:
        _need(d["dn_bas"] >= 1, "--dn-bas", "must be >= 1")
    if d.get("r_min") is not None:
        _need(0 < d["r_min"] < d["r_max"], "--r-min", "need 0 < r-min < r-max")
    if d.get("warmup") is not None:
        _need(0 <= d["warmup"] < 1, "--warmup", "must be in [0, 1)")
    if d.get("queue_cap") is not None:
        _need(d["queue_cap"] >= 0, "--queue-cap", "must be >= 0")
    if d.get("algorithm") == "A" and d.get("servers", 1) != 1:
        raise UsageError("--algorithm: A requires --servers 1")

    cmd = ns.command
    if cmd in ("series", "stability", "simulate"):
        sources = [d["p_minus1"] is not None or d["h"] is not None,
                   d["series_file"] is not None,
                   d["snr_db"] is not None or d["snr_linear"] is not None]
        _need(sum(sources) == 1, "--p-1",
              "give exactly one series source: --p-1/--h, --series-file, or an SNR with geometry")
        if sources[0]:
            _need(d["p_minus1"] is not None and d["h"] is not None, "--h",
                  "the (h, g) model needs both --p-1 and --h")
        if sources[2]:
            for flag, key in (("--k-info", "k_info"), ("--n-base", "n_base"), ("--dn", "dn")):
                _need(d[key] is not None, flag, "required with an SNR series")
    if cmd == "sweep":
        _need(d["snr_db_step"] > 0, "--snr-db-step", "must be positive")
        _need(d["snr_db_min"] <= d["snr_db_max"], "--snr-db-max", "must be >= --snr-db-min")
        for flag, key in (("--k-info", "k_info"), ("--n-base", "n_base"), ("--dn", "dn")):
            _need(d[key] is not None, flag, "required for a sweep")
    if cmd == "optimize" and d["k0"] is None:
        if d["series_file"] is None:
            _need(d["p0"] is not None and d["h"] is not None, "--p0",
                  "needs --p0 and --h (or --series-file, or --k0)")
    if cmd == "exponent" and d.get("n_coded") is not None:
        _need(d["rate"] is not None or d["rate_nat"] is not None, "--n-coded",
              "needs --rate or --rate-nat")


def parse_args(argv) -> RunSpec:
    argv = list(argv)
    parser = build_parser()
    # read --config first so the file can supply required flags
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    config = pre.parse_known_args(argv[1:])[0].config if argv else None
    if config:
        argv = argv[:1] + _config_tokens(config, argv) + argv[1:]
    ns = parser.parse_args(argv)
    if hasattr(ns, "seed") and ns.seed is None:
        env = os.environ.get("HARQISO_SEED")
        if env is not None:
            try:
                ns.seed = int(env)
            except ValueError:
                raise UsageError(f"HARQISO_SEED: not an integer: {env!r}") from None
        else:
            ns.seed = 0
    if hasattr(ns, "algorithm") and ns.algorithm is None:
        ns.algorithm = "B" if ns.servers > 1 else "A"
    _validate(ns)
    params = {k: v for k, v in vars(ns).items()
              if k not in ("command", "format", "out", "config")}
    return RunSpec(command=ns.command, parameters=params, output=ns.format,
                   output_path=ns.out)


# --- dispatch -------------------------------------------------------------

def _channel(p: dict) -> Optional[exponent.ChannelParams]:
    if p.get("snr_db") is not None:
        return exponent.ChannelParams.from_db(p["snr_db"])
    if p.get("snr_linear") is not None:
        return exponent.ChannelParams.from_linear(p["snr_linear"])
    return None


def _geometry(p: dict) -> wer.CodeFamilyGeometry:
    return wer.CodeFamilyGeometry(p["k_info"], p["dk"], p["n_base"], p["dn"])


def build_series(p: dict) -> wer.WerSeries:
    if p.get("series_file"):
        return wer.TableSeries.from_csv(p["series_file"])
    ch = _channel(p)
    if ch is not None:
        return wer.AnalyticSeries(_geometry(p), ch)
    return wer.GeometricSeries(p["p_minus1"], p["h"], p["g"])


def _exponent(p: dict) -> dict:
    ch = _channel(p)
    lm = exponent.landmarks(ch)
    out = {"a_linear": ch.a_linear, "a_db": ch.a_db, "capacity": lm.capacity,
           "r_crit": lm.r_crit, "r0": lm.r0}
    r = p.get("rate_nat")
    if p.get("rate") is not None:
        r = exponent.binary_to_nats(p["rate"])
    if r is not None:
        out["rate_nat"] = r
        out["error_exponent"] = exponent.error_exponent(r, ch)
        if p.get("n_coded") is not None:
            out["n_coded"] = p["n_coded"]
            out["wer_bound"] = exponent.wer_bound(p["n_coded"], r, ch)
    return out


def _series_rows(p: dict) -> list:
    s = build_series(p)
    return [{"index": i, "wer": s.p(i)} for i in range(-1, p["terms"] - 1)]


def _stability(p: dict) -> dict:
    return queueing.stability_check(build_series(p), p["servers"]).to_dict()


def _optimize(p: dict) -> dict:
    if p.get("k0") is not None:
        return queueing.optimal_design(p["k0"], p["servers"]).to_dict()
    bounds = (p["r_min"], p["r_max"])
    if p.get("series_file"):
        inputs = blocksize.inputs_from_series(wer.TableSeries.from_csv(p["series_file"]),
                                              p["dn_bas"], bounds)
        if p.get("theta") is not None:
            inputs = blocksize.OptimizerInputs(inputs.p0_hat, inputs.h_hat, inputs.g_hat,
                                               p["theta"], p["dn_bas"], bounds)
    else:
        inputs = blocksize.OptimizerInputs(p["p0"], p["h"], p["g"], p.get("theta") or 0.0,
                                           p["dn_bas"], bounds)
    res = blocksize.optimize_r(inputs)
    out = {"p0_hat": inputs.p0_hat, "h_hat": inputs.h_hat, "g_hat": inputs.g_hat,
           "theta": inputs.theta, "dn_bas": inputs.dn_bas}
    out.update(res.to_dict())
    return out


def _sim_config(p: dict, series: wer.WerSeries, trace_slots: int = 0) -> sim.SimConfig:
    return sim.SimConfig(series=series, slots=p["slots"], algorithm=p["algorithm"],
                         servers=p["servers"], seed=p["seed"], dk=p["dk"], eps0=p["eps0"],
                         queue_cap=p["queue_cap"], boost=not p["no_boost"],
                         warmup=p["warmup"], trace_slots=trace_slots)


def _simulate(p: dict) -> dict:
    trace_slots = p["trace_slots"] if p.get("trace") else 0
    metrics = sim.run(_sim_config(p, build_series(p), trace_slots))
    if p.get("trace"):
        try:
            sim.write_trace(metrics.trace, p["trace"])
        except OSError as exc:
            raise _IOFailure(str(exc)) from None
    return metrics.to_dict()


def sweep_grid(lo: float, hi: float, step: float) -> list:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(n)]


SWEEP_COLUMNS = ("snr_db", "p_minus1", "p0", "stability_sum", "stable",
                 "throughput_sim", "mean_delay", "t_eps0", "error")


def run_sweep(spec: RunSpec) -> list:
    """One row per SNR point in ascending order; failures land in ``error``."""
    p = spec.parameters
    geometry = _geometry(p)
    rows = []
    for snr in sweep_grid(p["snr_db_min"], p["snr_db_max"], p["snr_db_step"]):
        row = dict.fromkeys(SWEEP_COLUMNS, "")
        row["snr_db"] = snr
        try:
            series = wer.AnalyticSeries(geometry, exponent.ChannelParams.from_db(snr))
            row["p_minus1"] = series.p(-1)
            row["p0"] = series.p(0)
            rep = queueing.stability_check(series, p["servers"])
            row["stability_sum"] = rep.stability_sum
            row["stable"] = rep.stable
            if p.get("simulate"):
                m = sim.run(_sim_config(p, series))
                row["throughput_sim"] = m.throughput
                row["mean_delay"] = m.mean_delay
                row["t_eps0"] = m.t_eps0
        except HarqError as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


# --- output ---------------------------------------------------------------

class _IOFailure(Exception):
    pass


def _fmt(x):
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.12g}")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, dict):
        return {k: _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_fmt(v) for v in x]
    return x


def _cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return f"{x:.12g}" if math.isfinite(x) else ""
    if x is None:
        return ""
    if isinstance(x, (dict, list, tuple)):
        return json.dumps(_fmt(x), separators=(",", ":"))
    return str(x)


def render(report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_fmt(report), indent=2) + "\n"
    rows = report if isinstance(report, list) else [report]
    buf = io.StringIO()
    if rows:
        w = csv.writer(buf)
        header = list(rows[0].keys())
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(r.get(k)) for k in header])
    return buf.getvalue()


def emit(report, fmt: str, path: Optional[str]) -> None:
    text = render(report, fmt)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from None


_HANDLERS = {
    "exponent": _exponent,
    "series": _series_rows,
    "stability": _stability,
    "optimize": _optimize,
    "simulate": _simulate,
}


def execute(spec: RunSpec):
    if spec.command == "sweep":
        return run_sweep(spec)
    return _HANDLERS[spec.command](spec.parameters)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        spec = parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = execute(spec)
        emit(report, spec.output, spec.output_path)
    except _IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (HarqError, ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
