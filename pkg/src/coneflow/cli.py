"""``cone-flow`` command line: trace, integrals, verify, sweep.

Configuration is a JSON file; results go to CSV (bulk trajectories) or JSON
(reports). Exit codes: 0 success, 1 tolerance breach, 2 configuration error,
3 numerical failure.
"""

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .ambient import PhasePoint, classify, integral_I
from .correspondence import asymptotic_directions
from .engine import BACKENDS, IntegratorSettings, sample_trajectory
from .errors import ConeFlowError, ConfigError, IntegrationError, NoConvergence, NotOnCone, RankDeficient
from .integrals import integrals_I_vec, integrals_J, recover
from .manifolds import ManifoldConfig, chart_to_phase, random_launch, reduce, validate_phase

EXIT_OK, EXIT_BREACH, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_THRESHOLDS = {"I": 1e-8, "I_vec": 1e-6, "disagreement": 1e-6}
NUMERIC_ERRORS = (IntegrationError, RankDeficient, NoConvergence)


@dataclass
class RunConfig:
    manifold: ManifoldConfig
    initial: PhasePoint = None
    span: tuple = (0.0, 1.0)
    samples: int = 101
    backend: str = "direct"
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    seed: int = 0
    count: int = 10
    t_range: tuple = (0.5, 2.0)
    ivec_samples: int = 5
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    output_format: str = "csv"
    output_path: str = None


def _num(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    return float(value)


def _vec(value, where, length=None):
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list of numbers")
    out = np.array([_num(x, f"{where}[{i}]") for i, x in enumerate(value)])
    if length is not None and out.size != length:
        raise ConfigError(f"{where}: expected {length} entries, got {out.size}")
    return out


def _initial(cfg, d):
    if not isinstance(d, dict) or len(d) != 1 or not ({"ambient", "chart"} & d.keys()):
        raise ConfigError("initial: expected {\"ambient\": {...}} or {\"chart\": {...}}")
    if "ambient" in d:
        a = d["ambient"]
        p = PhasePoint(_vec(a.get("x"), "initial.ambient.x", cfg.dim), _vec(a.get("v"), "initial.ambient.v", cfg.dim))
    else:
        c = d["chart"]
        u = _vec(c.get("u"), "initial.chart.u", cfg.n)
        du = _vec(c.get("du"), "initial.chart.du", cfg.n)
        p = chart_to_phase(cfg, _num(c.get("t"), "initial.chart.t"), u, _num(c.get("dt"), "initial.chart.dt"), du)
    if not np.any(p.v):
        raise ConfigError("initial: velocity must be nonzero")
    try:
        validate_phase(cfg, p)
    except NotOnCone as exc:
        raise ConfigError(f"initial: {exc}") from None
    return p


def parse_config(d, need_initial=True):
    """Validate a config mapping into a :class:`RunConfig`; errors name the offending field."""
    if not isinstance(d, dict):
        raise ConfigError("config: top level must be an object")
    known = {"manifold", "initial", "span", "samples", "backend", "integrator", "seed", "count",
             "t_range", "ivec_samples", "thresholds", "output"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"config: unknown field(s) {sorted(extra)}")
    if "manifold" not in d:
        raise ConfigError("manifold: required")
    cfg = ManifoldConfig.from_dict(d["manifold"])
    rc = RunConfig(manifold=cfg)
    if "initial" in d:
        rc.initial = _initial(cfg, d["initial"])
    elif need_initial:
        raise ConfigError("initial: required")
    if "span" in d:
        span = _vec(d["span"], "span", 2)
        if not span[0] < span[1]:
            raise ConfigError("span: need s_a < s_b")
        rc.span = tuple(span)
    if "samples" in d:
        if not isinstance(d["samples"], int) or d["samples"] < 2:
            raise ConfigError("samples: expected an integer >= 2")
        rc.samples = d["samples"]
    if "backend" in d:
        if d["backend"] not in BACKENDS + ("both",):
            raise ConfigError(f"backend: expected one of direct|lift|both, got {d['backend']!r}")
        rc.backend = d["backend"]
    if "integrator" in d:
        if not isinstance(d["integrator"], dict):
            raise ConfigError("integrator: expected an object")
        rc.integrator = IntegratorSettings.from_dict(d["integrator"])
    if "seed" in d:
        if not isinstance(d["seed"], int) or isinstance(d["seed"], bool):
            raise ConfigError("seed: expected an integer")
        rc.seed = d["seed"]
    if "count" in d:
        if not isinstance(d["count"], int) or d["count"] < 1:
            raise ConfigError("count: expected an integer >= 1")
        rc.count = d["count"]
    if "t_range" in d:
        tr = _vec(d["t_range"], "t_range", 2)
        if not 0 < tr[0] < tr[1]:
            raise ConfigError("t_range: need 0 < t_min < t_max")
        rc.t_range = tuple(tr)
    if "ivec_samples" in d:
        if not isinstance(d["ivec_samples"], int) or d["ivec_samples"] < 1:
            raise ConfigError("ivec_samples: expected an integer >= 1")
        rc.ivec_samples = d["ivec_samples"]
    if "thresholds" in d:
        th = d["thresholds"]
        if not isinstance(th, dict) or set(th) - set(DEFAULT_THRESHOLDS):
            raise ConfigError(f"thresholds: expected an object with keys from {sorted(DEFAULT_THRESHOLDS)}")
        for k, v in th.items():
            if _num(v, f"thresholds.{k}") < 0:
                raise ConfigError(f"thresholds.{k}: must be nonnegative")
            rc.thresholds[k] = float(v)
    if "output" in d:
        out = d["output"]
        if not isinstance(out, dict):
            raise ConfigError("output: expected an object")
        out_fmt = out.get("format", "csv")
        if out_fmt not in ("csv", "json"):
            raise ConfigError("output.format: expected csv or json")
        rc.output_format = out_fmt
        rc.output_path = out.get("path")
    return rc


def load_config(path, need_initial=True):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(d, need_initial)


# -- output helpers ---------------------------------------------------------


def fmt(x):
    return f"{float(x):.17g}"


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _tolist(a):
    return [float(x) for x in np.asarray(a).ravel()]


# -- commands ---------------------------------------------------------------


def trace_table(rc):
    """Header and rows of the trace CSV for ``rc``."""
    cfg = rc.manifold
    backend = "direct" if rc.backend == "both" else rc.backend
    tr = sample_trajectory(cfg, rc.initial, rc.span, rc.samples, backend, rc.integrator)
    d, n = cfg.dim, cfg.n
    header = (["s"] + [f"x_{i + 1}" for i in range(d)] + [f"v_{i + 1}" for i in range(d)]
              + ["t"] + [f"u_{i + 1}" for i in range(n)] + ["norm_sq", "I"])
    u = tr.reduced_u(cfg)
    I = tr.integral_I()
    rows = []
    for k in range(len(tr)):
        rows.append([tr.s[k], *tr.x[k], *tr.v[k], tr.t[k], *u[k], float(tr.x[k] @ tr.x[k]), I[k]])
    return header, rows


def cmd_trace(rc):
    header, rows = trace_table(rc)
    if rc.output_format == "json":
        return json.dumps({"columns": header, "rows": [[float(x) for x in r] for r in rows]}, indent=1) + "\n", EXIT_OK
    return _csv_text(header, [[float(x) for x in r] for r in rows]), EXIT_OK


def integrals_document(rc):
    cfg, p = rc.manifold, rc.initial
    backend = "direct" if rc.backend == "both" else rc.backend
    c = classify(p)
    if c.radial:
        return {"I": 0.0, "I_vec": [0.0] * (2 * cfg.dim), "note": "radial family"}
    j = integrals_J(cfg, p, rc.integrator, backend)
    iv = integrals_I_vec(cfg, p, rc.integrator, backend)
    I_rec, _ = recover(iv)
    d_plus, d_minus = asymptotic_directions(cfg, p, rc.integrator)
    return {
        "I": c.I_value,
        "s0": j.s0,
        "J": _tolist(j.values),
        "I_vec": _tolist(iv.values),
        "recovered_I": I_rec,
        "asymptotics": {"plus": _tolist(d_plus), "minus": _tolist(d_minus)},
    }


def cmd_integrals(rc):
    return json.dumps(integrals_document(rc), indent=1) + "\n", EXIT_OK


def drift_report(rc):
    """Conservation report for the run described by ``rc``; ``passed`` is False on any breach."""
    cfg, p = rc.manifold, rc.initial
    start = time.perf_counter()
    backends = ["direct", "lift"] if rc.backend == "both" else [rc.backend]
    trajs = {b: sample_trajectory(cfg, p, rc.span, rc.samples, b, rc.integrator) for b in backends}
    main = trajs[backends[0]]
    entries = []
    I0 = integral_I(p)
    dev = np.abs(main.integral_I() - I0)
    entries.append({"name": "I", "initial": I0, "max_deviation": float(dev.max()), "mean_deviation": float(dev.mean())})
    iv0 = integrals_I_vec(cfg, p, rc.integrator, backends[0]).values
    picks = np.unique(np.linspace(0, len(main) - 1, rc.ivec_samples).round().astype(int))
    ivs = np.array([integrals_I_vec(cfg, main.state(main.s[k]), rc.integrator, backends[0]).values for k in picks])
    ivdev = np.abs(ivs - iv0[None, :])
    for k in range(iv0.size):
        entries.append({"name": f"I^{k + 1}", "initial": float(iv0[k]),
                        "max_deviation": float(ivdev[:, k].max()), "mean_deviation": float(ivdev[:, k].mean())})
    report = {"integrals": entries}
    breaches = []
    if dev.max() > rc.thresholds["I"]:
        breaches.append("I")
    if ivdev.max() > rc.thresholds["I_vec"]:
        breaches.append("I_vec")
    if rc.backend == "both":
        a, b = trajs["direct"], trajs["lift"]
        dis = float(max(np.abs(a.x - b.x).max(), np.abs(a.v - b.v).max()))
        report["backend_disagreement"] = dis
        if dis > rc.thresholds["disagreement"]:
            breaches.append("disagreement")
    report["steps"] = {b: {"nfev": int(trajs[b].meta.get("nfev", 0))} for b in backends}
    report["thresholds"] = dict(rc.thresholds)
    report["breaches"] = breaches
    report["passed"] = not breaches
    report["runtime_seconds"] = time.perf_counter() - start
    return report


def cmd_verify(rc):
    report = drift_report(rc)
    return json.dumps(report, indent=1) + "\n", EXIT_OK if report["passed"] else EXIT_BREACH


def sweep_table(rc):
    cfg = rc.manifold
    rng = np.random.default_rng(rc.seed)
    backend = "direct" if rc.backend == "both" else rc.backend
    n, d = cfg.n, cfg.dim
    header = (["index", "t0"] + [f"u0_{i + 1}" for i in range(n)] + ["dt0"] + [f"du0_{i + 1}" for i in range(n)]
              + ["I"] + [f"I_vec_{k + 1}" for k in range(2 * d)] + ["max_I_drift"])
    rows = []
    for idx in range(rc.count):
        t, u, dt, du = random_launch(cfg, rng, rc.t_range)
        p = chart_to_phase(cfg, t, u, dt, du)
        I0 = integral_I(p)
        iv = integrals_I_vec(cfg, p, rc.integrator, backend).values
        tr = sample_trajectory(cfg, p, rc.span, rc.samples, backend, rc.integrator)
        drift = float(np.abs(tr.integral_I() - I0).max())
        rows.append([idx, t, *reduce(cfg, u), dt, *du, I0, *iv, drift])
    return header, rows


def cmd_sweep(rc):
    header, rows = sweep_table(rc)
    return _csv_text(header, [[r[0]] + [float(x) for x in r[1:]] for r in rows]), EXIT_OK


COMMANDS = {
    "trace": (cmd_trace, True),
    "integrals": (cmd_integrals, True),
    "verify": (cmd_verify, True),
    "sweep": (cmd_sweep, False),
}


def build_parser():
    ap = argparse.ArgumentParser(prog="cone-flow", description="Geodesic flows on cones and their first integrals.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output path (default: config output.path, else stdout)")
    ap.add_argument("--backend", choices=["direct", "lift", "both"])
    ap.add_argument("--rtol", type=float)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    func, need_initial = COMMANDS[args.command]
    try:
        rc = load_config(args.config, need_initial)
        if args.backend:
            rc.backend = args.backend
        if args.rtol is not None:
            rc.integrator = replace(rc.integrator, rtol=args.rtol)
    except ConeFlowError as exc:
        print(f"cone-flow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text, code = func(rc)
    except ConfigError as exc:
        print(f"cone-flow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NUMERIC_ERRORS + (ConeFlowError,)) as exc:
        print(f"cone-flow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(text, args.out or rc.output_path)
    return code


if __name__ == "__main__":
    sys.exit(main())
