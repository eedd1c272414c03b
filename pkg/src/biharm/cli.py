"""Command line front end: ``biharm <subcommand> [--flags] [--config FILE]``.

Parameters come from defaults, then a flat ``key=value`` config file, then
flags, the later source winning.  Field data go to CSV (``--out``), series to
JSON lines (``--series``) and one JSON report line per check to stdout or
``--report``.  Exit codes: 0 all checks pass, 1 a check failed, 2 bad
configuration, 3 I/O error.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import math
import os
import sys

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    """A configuration problem; the message names the offending key."""


# ---------------------------------------------------------------------------
# formatting


def fmt(x):
    """Number with 17 significant digits (integers unchanged)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def to_json(obj):
    """Compact deterministic JSON with 17-digit floats; non-finite floats become null."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return _json_str(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{_json_str(str(k))}:{to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(to_json(v) for v in obj) + "]"
    return _json_str(str(obj))


def _json_str(s):
    import json
    return json.dumps(s)


# ---------------------------------------------------------------------------
# parameters


class Param:
    def __init__(self, name, kind, default=None, check=None, choices=None, help=""):
        self.name, self.kind, self.default = name, kind, default
        self.check, self.choices, self.help = check, choices, help

    def convert(self, raw):
        if self.kind is int:
            try:
                value = int(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{self.name}: expected an integer, got {raw!r}") from None
        elif self.kind is float:
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{self.name}: expected a real number, got {raw!r}") from None
            if not math.isfinite(value):
                raise ConfigError(f"{self.name}: must be finite")
        elif self.kind == "auto_float":
            if str(raw) == "auto":
                return "auto"
            return Param(self.name, float, check=self.check).convert(raw)
        else:
            value = str(raw)
        if self.choices is not None and value not in self.choices:
            raise ConfigError(f"{self.name}: must be one of {', '.join(map(str, self.choices))}")
        if self.check is not None and value is not None:
            ok, what = self.check
            if not ok(value):
                raise ConfigError(f"{self.name}: {what}")
        return value


POS = (lambda v: v > 0, "must be positive")
NONNEG = (lambda v: v >= 0, "must be nonnegative")
DIM = (lambda v: v >= 1, "must be >= 1")
MODELS = ("euclidean", "hyperbolic", "appendix")
ENDS = ("pole", "clamped", "reflect")


def _model_params(default_model="euclidean"):
    return [Param("model", str, default_model, choices=MODELS),
            Param("dim", int, 1, DIM),
            Param("curvature", float, 1.0, NONNEG, help="K for the hyperbolic model"),
            Param("epsilon", float, 1.0, POS, help="epsilon of the appendix model")]


def _grid_params(r_max=30.0, nodes=1200):
    return [Param("r_min", "auto_float", "auto"),
            Param("r_max", float, r_max, POS),
            Param("nodes", int, nodes, (lambda v: v >= 16, "must be >= 16"))]


COMMON = [Param("out", str, None), Param("series", str, None), Param("report", str, None),
          Param("seed", int, 0, NONNEG)]

SUBCOMMANDS = {
    "kernel": [Param("dim", int, 1, (lambda v: 1 <= v <= 3, "must be 1, 2 or 3")),
               Param("eta_max", float, 20.0, POS),
               Param("resolution", int, 10000, (lambda v: v >= 1000, "must be >= 1000")),
               Param("t", float, 1.0, POS),
               Param("nodes", int, 401, (lambda v: v >= 2, "must be >= 2")),
               Param("fit_lo", float, 5.0, POS), Param("fit_hi", float, 30.0, POS),
               Param("oracle_tol", float, 1e-6, POS)],
    "geom": _model_params() + [Param("r_max", float, 10.0, POS),
                               Param("nodes", int, 101, (lambda v: v >= 2, "must be >= 2"))],
    "simulate": _model_params() + _grid_params() + [
        Param("left", str, "auto", choices=ENDS + ("auto",)),
        Param("right", str, "clamped", choices=ENDS),
        Param("dt", float, 1e-3, POS), Param("t_end", float, 1.0, NONNEG),
        Param("theta", float, 0.5, (lambda v: 0.5 <= v <= 1.0, "must lie in [0.5, 1]")),
        Param("init", str, "delta", choices=("delta", "bumps")),
        Param("center", float, 0.0), Param("width", float, 4.0, POS),
        Param("bump_count", int, 4, DIM), Param("samples", int, 10, DIM)],
    "probe": [Param("check", str, "conservation",
                    choices=("conservation", "decay", "meanvalue", "linfty"))]
    + _model_params() + _grid_params() + [
        Param("t", float, 1.0, POS), Param("dt", float, 1e-3, POS),
        Param("tol", float, 1e-3, POS), Param("noise_floor", float, 1e-8, POS),
        Param("ball_radius", float, 1.0, POS), Param("horizon", float, 1.0, POS),
        Param("bound", float, 3.0, POS), Param("traj", str, None)],
    "distlike": [Param("model", str, "euclidean", choices=("euclidean", "hyperbolic")),
                 Param("dim", int, 3, (lambda v: v >= 2, "must be >= 2")),
                 Param("curvature", float, 0.0, NONNEG), Param("R", float, 20.0,
                                                                (lambda v: v > 2, "must exceed 2")),
                 Param("spacing", float, 0.01, POS), Param("C_hat", float, 1.0, POS),
                 Param("k", int, 4, (lambda v: v >= 2, "must be >= 2")),
                 Param("rho", float, 1.0, POS)],
    "weights": [Param("variant", str, "kernel", choices=("kernel", "uniqueness", "l2decay"))]
    + _model_params() + [
        Param("R", float, 1.0, POS), Param("T", float, 0.5, POS), Param("S", float, 1.0, POS),
        Param("R1", float, 1.0, POS), Param("A", "auto_float", "auto", POS),
        Param("r_max", float, 30.0, POS), Param("nodes", int, 1001, (lambda v: v >= 16, "must be >= 16"))],
    "counterexample": [Param("epsilon", float, 1.0, POS),
                       Param("dim", int, 2, (lambda v: v >= 2, "must be >= 2")),
                       Param("rmax", "auto_float", "auto", POS),
                       Param("nodes", int, 4000, (lambda v: v >= 16, "must be >= 16")),
                       Param("samples", int, 50, DIM),
                       Param("t_max", "auto_float", "auto", POS)],
    "suite": [Param("only", str, "all")],
}


def _table(sub):
    return {p.name: p for p in SUBCOMMANDS[sub] + COMMON}


def read_config_file(path):
    """Pairs from a flat key=value file; '#' starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    pairs = {}
    for no, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"config line {no}: expected key=value")
        key, value = (s.strip() for s in body.split("=", 1))
        key = key.replace("-", "_")
        if key in pairs:
            raise ConfigError(f"{key}: given twice in {path}")
        pairs[key] = value
    return pairs


def build_parser():
    parser = argparse.ArgumentParser(prog="biharm", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = subs.add_parser(name)
        sp.add_argument("--config", default=None)
        for p in SUBCOMMANDS[name] + COMMON:
            flag = "--" + p.name.replace("_", "-")
            if p.name == "check":
                sp.add_argument("check_pos", nargs="?", default=None, metavar="check")
            sp.add_argument(flag, dest=p.name, default=None, help=p.help or None)
    return parser


def parse_config(argv):
    """Resolved configuration dict (with key 'subcommand') for argv."""
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = args.subcommand
    table = _table(sub)
    raw = {k: p.default for k, p in table.items()}
    if args.config is not None:
        for key, value in read_config_file(args.config).items():
            if key not in table:
                raise ConfigError(f"{key}: unknown key for '{sub}'")
            raw[key] = value
    given = vars(args)
    if given.get("check_pos") is not None:
        raw["check"] = given["check_pos"]
    for key in table:
        if given.get(key) is not None:
            raw[key] = given[key]
    cfg = {"subcommand": sub}
    for key, p in table.items():
        cfg[key] = None if raw[key] is None else p.convert(raw[key])
    return cfg


# ---------------------------------------------------------------------------
# model helpers


def _model(cfg):
    from . import warped_geometry as wg
    kind, n = cfg["model"], cfg["dim"]
    if kind == "euclidean":
        return wg.euclidean(n)
    if kind == "hyperbolic":
        if n < 2:
            raise ConfigError("dim: the hyperbolic model needs dim >= 2")
        return wg.hyperbolic(n, cfg["curvature"])
    if n < 2:
        raise ConfigError("dim: the appendix model needs dim >= 2")
    return wg.appendix(n, cfg["epsilon"])


def _grid(cfg, model):
    from . import warped_geometry as wg
    line = model.topology == "line"
    r_min = cfg["r_min"]
    if r_min == "auto":
        r_min = -cfg["r_max"] if line else 0.0
    left = cfg.get("left", "auto")
    if left in (None, "auto"):
        left = "pole" if not line else cfg.get("right", "clamped") or "clamped"
    right = cfg.get("right") or "clamped"
    try:
        grid = wg.RadialGrid(float(r_min), cfg["r_max"], cfg["nodes"], (left, right))
        grid.check_model(model)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    return grid


# ---------------------------------------------------------------------------
# output


class Output:
    """Collects report lines and writes CSV / JSON-lines files."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.lines = []
        self.passes = []

    def report(self, record):
        rec = dict(record)
        rec.pop("seconds", None)
        if "pass" in rec:
            self.passes.append(bool(rec["pass"]))
        rec["config"] = self.cfg
        self.lines.append(to_json(rec))

    def csv(self, key, header, columns):
        path = self.cfg.get(key)
        if path is None:
            return
        cols = [np.asarray(c) for c in columns]
        body = [",".join(header)]
        for row in zip(*cols):
            body.append(",".join(fmt(v) for v in row))
        _write(path, "\n".join(body) + "\n")

    def jsonl(self, key, records):
        path = self.cfg.get(key)
        if path is None:
            return
        _write(path, "".join(to_json(r) + "\n" for r in records))

    def finish(self):
        text = "".join(line + "\n" for line in self.lines)
        if self.cfg.get("report"):
            _write(self.cfg["report"], text)
        else:
            sys.stdout.write(text)
        return EXIT_OK if all(self.passes) else EXIT_FAIL


class OutputError(OSError):
    pass


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"{path}: {exc.strerror or exc}") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_kernel(cfg, out):
    from . import euclid_kernel as ek
    n, t = cfg["dim"], cfg["t"]
    if not cfg["fit_lo"] < cfg["fit_hi"]:
        raise ConfigError("fit_lo: must be smaller than fit_hi")
    eta = np.linspace(0.0, cfg["eta_max"], cfg["nodes"])
    F = ek.profile_values(n, eta)
    b = ek.kernel_point(n, eta * t ** 0.25, t)
    out.csv("out", ("eta", "F", "b"), (eta, F, b))
    xs = np.linspace(0.0, 6.0, 10)
    ts = (0.25, 0.5, 1.0, 2.0, 4.0)
    err = max(abs(ek.kernel_point(n, x, s) / ek.kernel_oracle(n, x, s) - 1) for x in xs for s in ts)
    out.report({"check": "oracle", "dim": n, "max_rel_error": err, "tol": cfg["oracle_tol"],
                "pass": err <= cfg["oracle_tol"]})
    roots = ek.sign_change_roots(n, cfg["eta_max"], cfg["resolution"])
    out.report({"check": "sign_changes", "dim": n, "count": len(roots), "roots": list(roots),
                "pass": len(roots) >= 3})
    fit = ek.fit_decay_exponent(n, cfg["fit_lo"], cfg["fit_hi"])
    out.report({"check": "decay", "dim": n, "p": fit["p"], "c": fit["c"], "p_plain": fit["p_plain"],
                "points": fit["points"], "tol": 0.07, "pass": abs(fit["p"] - 4 / 3) <= 0.07})


def cmd_geom(cfg, out):
    from . import warped_geometry as wg
    model = _model(cfg)
    lo = -cfg["r_max"] if model.topology == "line" and not model.flat_line else 0.0
    r = np.linspace(lo, cfg["r_max"], cfg["nodes"])
    logphi = wg.measure_exponent(model, r) / max(model.n - 1, 1)
    reports = [wg.volume_report(model, abs(x)) if x != 0 else None for x in r]
    V = np.array([0.0 if v is None else v.V for v in reports])
    nu = np.array([np.nan if v is None or not v.nu_defined else v.nu for v in reports])
    out.csv("out", ("r", "logphi", "V", "nu"), (r, logphi, V, nu))
    K = wg.ricci_lower_bound(model, cfg["r_max"])
    rec = {"check": "geometry", "ricci_lower_bound": K, "volume_at_rmax": float(V[-1])}
    if model.kind == "euclidean":
        from .euclid_kernel import ball_volume
        exact = ball_volume(model.n) * cfg["r_max"] ** model.n if model.n > 1 else 2 * cfg["r_max"]
        rec["volume_rel_error"] = abs(V[-1] / exact - 1)
        rec["pass"] = rec["volume_rel_error"] <= 1e-8
    else:
        rec["pass"] = bool(np.all(np.isfinite(V)))
    out.report(rec)


def _initial(cfg, disc, grid):
    from . import kernel_probe as kp
    from . import radial_solver as rs
    if cfg["init"] == "delta":
        return rs.delta_init(disc, cfg["center"], cfg["width"] * grid.h)
    r = grid.r
    span = (r[0] + 0.25 * (r[-1] - r[0]), r[-1] - 0.25 * (r[-1] - r[0]))
    return kp.random_bumps(grid, cfg["seed"], cfg["bump_count"], span)


def cmd_simulate(cfg, out):
    from . import radial_solver as rs
    model = _model(cfg)
    grid = _grid(cfg, model)
    disc = rs.build_discretization(model, grid)
    u0 = _initial(cfg, disc, grid)
    times = tuple(np.linspace(0.0, cfg["t_end"], cfg["samples"] + 1))
    traj = rs.run(model, grid, u0, rs.Schedule(cfg["dt"], cfg["t_end"], times, cfg["theta"]), disc)
    T = np.concatenate([np.full(grid.node_count, s.t) for s in traj.states])
    R = np.tile(disc.r, len(traj.states))
    U = np.concatenate([s.u for s in traj.states])
    out.csv("out", ("t", "r", "u"), (T, R, U))
    out.jsonl("series", ({"step": k, "t": t, "mass": m, "l2": l2, "linf": li}
                         for k, (t, m, l2, li) in enumerate(zip(traj.times, traj.mass,
                                                                 traj.l2_norm, traj.linf_norm))))
    l2 = traj.l2_norm
    rise = float(np.max((l2[1:] - l2[:-1]) / l2[:-1])) if l2.size > 1 else 0.0
    out.report({"check": "l2_monotone", "max_relative_rise": rise, "tol": 1e-12,
                "final_mass": float(traj.mass[-1]), "boundary_ratio": traj.boundary_ratio,
                "steps": int(l2.size - 1), "pass": rise <= 1e-12})


def _load_traj(path, model, cfg):
    """Trajectory from a t,r,u CSV on a uniform grid."""
    from . import radial_solver as rs
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise OutputError(f"{path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise ConfigError(f"traj: cannot parse {path}: {exc}") from None
    ts = np.unique(data[:, 0])
    r = data[data[:, 0] == ts[0], 1]
    cfg = dict(cfg, r_min=float(r[0]), r_max=float(r[-1]), nodes=int(r.size))
    grid = _grid(cfg, model)
    disc = rs.build_discretization(model, grid)
    states = [rs.EvolutionState(float(t), data[data[:, 0] == t, 2], k) for k, t in enumerate(ts)]
    diag = [rs.diagnose(disc, s) for s in states]
    return rs.Trajectory(states, ts, np.array([d.mass for d in diag]),
                         np.array([d.l2_norm for d in diag]), np.array([d.linf_norm for d in diag]),
                         [(t, t) for t in ts], float("nan"), disc), grid


def cmd_probe(cfg, out):
    from . import kernel_probe as kp
    from . import radial_solver as rs
    model = _model(cfg)
    check = cfg["check"]
    if cfg["traj"] is not None:
        traj, grid = _load_traj(cfg["traj"], model, cfg)
        disc = traj.disc
    else:
        grid = _grid(cfg, model)
        disc = rs.build_discretization(model, grid)
        traj = None
    if check == "conservation":
        if traj is not None:
            drift = float(np.max(np.abs(traj.mass - traj.mass[0])))
            out.report({"check": "conservation", "mass": float(traj.mass[-1]), "drift": drift,
                        "tol": cfg["tol"], "pass": drift <= cfg["tol"]})
        else:
            est = kp.estimate_kernel(model, grid, cfg["t"], dt=cfg["dt"], disc=disc)
            out.report(kp.check_conservation(est, cfg["tol"]))
    elif check == "decay":
        if traj is not None:
            last = traj.states[-1]
            est = kp.KernelEstimate(model, last.t, 0.0, disc.r, last.u, kp.Quality(0.0, 0.0), disc)
        else:
            est = kp.estimate_kernel(model, grid, cfg["t"], dt=cfg["dt"], disc=disc)
        fit = kp.check_kernel_decay(est, cfg["noise_floor"])
        rec = {"check": "decay", **fit._asdict(), "tol": 0.07}
        rec["pass"] = abs(fit.p - 4 / 3) <= 0.07 if model.kind == "euclidean" else 1.2 <= fit.p <= 1.5
        out.report(rec)
    elif check == "meanvalue":
        if traj is None:
            times = tuple(np.linspace(0.0, cfg["t"], int(round(cfg["t"] / cfg["dt"])) + 1))
            u0 = rs.delta_init(disc, 0.0, 8 * grid.h)
            traj = rs.run(model, grid, u0, rs.Schedule(cfg["dt"], cfg["t"], times), disc)
        rec = kp.check_mean_value(model, traj, cfg["ball_radius"], traj.states[-1].t)
        rec["pass"] = bool(np.isfinite(rec["ratio"]))
        out.report(rec)
    else:
        if traj is not None:
            ratio = traj.linf_norm / traj.linf_norm[0]
            sup = float(ratio.max())
        else:
            u0 = kp.random_bumps(grid, cfg["seed"], 4)
            res = kp.check_linfty_contraction(model, grid, u0, cfg["horizon"], cfg["dt"])
            sup = res["sup_ratio_over_time"]
        out.report({"check": "linfty", "sup_ratio_over_time": sup, "bound": cfg["bound"],
                    "pass": sup <= cfg["bound"]})


def cmd_distlike(cfg, out):
    from . import distance_like as dl
    from . import warped_geometry as wg
    K = cfg["curvature"]
    if cfg["model"] == "euclidean" and K != 0:
        raise ConfigError("curvature: must be 0 for the euclidean model")
    model = wg.euclidean(cfg["dim"]) if cfg["model"] == "euclidean" else wg.hyperbolic(cfg["dim"], K)
    conf = dl.ScaffoldConfig(model, cfg["R"], K, k=cfg["k"], rho=cfg["rho"], C_hat=cfg["C_hat"],
                             spacing=cfg["spacing"])
    sc = dl.build_scaffold(conf)
    out.csv("out", ("r", "h", "f", "df", "lapf", "phi"), (sc.r, sc.h, sc.f, sc.df, sc.lapf, sc.phi))
    rec = {"check": "scaffold", **dl.verify_scaffold(sc)}
    out.report(rec)
    cut = dl.cutoff_bounds(sc, 0.5 * cfg["R"], cfg["rho"])
    out.report({"check": "cutoff", **cut})


def cmd_weights(cfg, out):
    from . import weight_monitor as wm
    model = _model(cfg)
    r = np.linspace(-cfg["r_max"] if model.topology == "line" else 0.0, cfg["r_max"], cfg["nodes"])
    spec = wm.WeightSpec(cfg["variant"], cfg["R"], cfg["T"], S=cfg["S"], R1=cfg["R1"])
    wm.check_horizon(spec, model, cfg["r_max"])
    if cfg["A"] == "auto":
        A, trace = wm.calibrate_A(spec, model, r)
    else:
        A, trace = cfg["A"], []
    spec = wm.WeightSpec(cfg["variant"], cfg["R"], cfg["T"], A=A, S=cfg["S"], R1=cfg["R1"])
    worst = max(wm.eval_dissipation(spec, model, r, t).max for t in wm.time_lattice(cfg["T"]))
    seams = wm.seam_check(spec)
    out.jsonl("series", ({"A": a, "max_N": m} for a, m in trace))
    out.report({"check": "weights", "variant": cfg["variant"], "A": A, "max_N": worst,
                "horizon": wm.horizon(spec, model, cfg["r_max"]),
                "seams": [list(s) for s in seams], "pass": worst <= 0.0})


def cmd_counterexample(cfg, out):
    from . import counterexample as ce
    rmax = None if cfg["rmax"] == "auto" else cfg["rmax"]
    nf = ce.nested_F(cfg["epsilon"], cfg["dim"], r_max=rmax)
    v = ce.verify_bilaplacian_one(nf, nodes=cfg["nodes"])
    out.csv("out", ("r", "F", "lapF", "bilapF"), (v["r"], v["F"], v["lapF"], v["bilapF"]))
    t_max = None if cfg["t_max"] == "auto" else cfg["t_max"]
    if t_max is not None and not t_max > 2 * nf.F_sup:
        raise ConfigError(f"t_max: must exceed 2 F_sup = {fmt(2 * nf.F_sup)}")
    g = ce.growth_run(nf, t_max, cfg["samples"])
    out.jsonl("series", ({"t": t, "linf": li} for t, li in zip(g["t"], g["linf"])))
    out.report({"check": "bilaplacian", "max_abs_residual": v["max_abs_residual"],
                "max_lap_minus_I2": v["max_lap_minus_I2"], "tol": 1e-3,
                "pass": v["max_abs_residual"] <= 1e-3})
    slope_dev = max(abs(g["slope_min"] - 1), abs(g["slope_max"] - 1))
    out.report({"check": "growth", "F_sup": nf.F_sup, "tail": nf.tail,
                "slope_deviation": slope_dev, "tol": 1e-12, "pass": slope_dev <= 1e-12})


def _run_criterion(k):
    from . import acceptance
    return acceptance.CRITERIA[k]()


def threads():
    """Worker cap from BIHARM_THREADS (default 1)."""
    raw = os.environ.get("BIHARM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"BIHARM_THREADS: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("BIHARM_THREADS: must be >= 1")
    return n


def cmd_suite(cfg, out):
    from . import acceptance
    if cfg["only"] == "all":
        ks = sorted(acceptance.CRITERIA)
    else:
        try:
            ks = sorted({int(s) for s in cfg["only"].split(",")})
        except ValueError:
            raise ConfigError("only: expected 'all' or a comma list of criterion numbers") from None
        if any(k not in acceptance.CRITERIA for k in ks):
            raise ConfigError("only: criteria are numbered 1 to 11")
    workers = min(threads(), len(ks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_criterion, ks))
    else:
        results = [_run_criterion(k) for k in ks]
    for rec in results:
        out.report({"check": f"criterion_{rec['criterion']}", **rec})


COMMANDS = {"kernel": cmd_kernel, "geom": cmd_geom, "simulate": cmd_simulate, "probe": cmd_probe,
            "distlike": cmd_distlike, "weights": cmd_weights, "counterexample": cmd_counterexample,
            "suite": cmd_suite}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        threads()
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"biharm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse usage errors and --help
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    out = Output(cfg)
    try:
        COMMANDS[cfg["subcommand"]](cfg, out)
        return out.finish()
    except OutputError as exc:
        print(f"biharm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"biharm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"biharm: precondition failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError) as exc:
        # a computation that could not complete counts as a failed check
        out.report({"check": cfg["subcommand"], "error": f"{type(exc).__name__}: {exc}",
                    "pass": False})
        try:
            out.finish()
        except OutputError as io:
            print(f"biharm: I/O error: {io}", file=sys.stderr)
            return EXIT_IO
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
