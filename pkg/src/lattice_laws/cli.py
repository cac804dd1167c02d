"""Command-line harness: seeded state generation, verification sweeps,
evolution runs, coercivity scans and report emission.

Usage::

    lattice-laws verify --model toda --n-states 100 --kappa 1 --kappa 2 --kappa 3
    lattice-laws evolve --model al --z 2 --out runs/al
    lattice-laws coercivity --model al --z 2 --z 3
    lattice-laws macroscopic --model al --config sweep.cfg

Results go to ``<out>/report.json`` plus CSV tables.  The exit status is 0
exactly when every check passes.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, al, flow, toda
from .errors import BallUnreachable, ConfigError, DomainError, LatticeLawsError, OutOfBallWarning
from .window import LatticeWindow

SCHEMA = 1
MODES = ("verify", "evolve", "coercivity", "macroscopic")
BALL_TARGET = 0.9
CONVEXITY_DIRECTIONS = 20
COERCIVITY_DIRECTION_SIZE = 8

# name -> (anchor, default tolerance)
CHECKS = {
    # Toda
    "quadratic": ("G(n,n+1)[1 + a_n G(n,n+1)] = a_n G(n,n) G(n+1,n+1)", 1e-9),
    "d1": ("one-step recursion of G in the first argument", 1e-9),
    "u1": ("one-step recursion of G in the second argument", 1e-9),
    "middle": ("G(k,l) G(n+1,n) = G(k,n+1) G(n,l) for k <= n < l", 1e-9),
    "involution": ("L_+ - 2 cosh(kappa) = -U L_- U", 1e-9),
    "symmetry": ("G(n,m) = G(m,n)", 1e-9),
    "rho_forms": ("agreement of the equivalent expressions for rho_n", 1e-9),
    "rho_conservation": ("d rho_n/dt = j_{n+1} - j_n", 1e-9),
    "gamma_conservation": ("d gamma_n/dt = gamma_j_{n+1} - gamma_j_n", 1e-9),
    "rho_ledger": ("sum rho_n = log-determinant ledger", 1e-8),
    "gamma_ledger": ("sum gamma_n = trace ledger", 1e-8),
    "log_det_routes": ("log det by pivots vs trace-log series", 1e-9),
    "positivity": ("rho_n >= 0 and gamma_n >= 0", 1e-12),
    "convexity": ("second differences >= 0 relative to |direction|^2", 1e-6),
    "a_gradient": ("d rho_n / d a_n = 0", 1e-8),
    # Ablowitz-Ladik
    "det": ("det G(n,m) = 0", 1e-9),
    "trace": ("tr G(n+1,n) = -1", 1e-9),
    "nD": ("propagation of G12 in the first argument", 1e-9),
    "nU": ("propagation of G21 in the second argument", 1e-9),
    "nD2": ("propagation of G11 in the first argument", 1e-9),
    "nU2": ("propagation of G11 in the second argument", 1e-9),
    "wrap": ("U_n G(n,n) = 1 + G(n+1,n) = G(n+1,n+1) U_{n+1}", 1e-9),
    "vacuous": ("tr{(L^-1 - L0^-1) S} = 0", 1e-9),
    "gamma_forms": ("gamma_n = 2 G11(n+1,n)", 1e-9),
    "z_derivative": ("z d/dz log det[L L0^-1] = tr{(L^-1 - L0^-1) S sigma3}", 1e-6),
    "coercivity_im": ("quadratic part of sum Im j_n vs Fourier form (relative)", 1e-4),
    "coercivity_re": ("quadratic part of sum Re rho~_n vs Fourier form (relative)", 1e-4),
    "coercivity_sign": ("sign of the quadratic forms", 0.0),
    # flow
    "drift_H": ("drift of H over the run", 1e-7),
    "drift_M": ("drift of M over the run", 1e-7),
    "drift_P": ("drift of P over the run", 1e-7),
    "drift_sum_rho": ("drift of sum rho_n over the run", 1e-7),
    "drift_sum_gamma": ("drift of sum gamma_n over the run", 1e-7),
    "drift_log_det": ("drift of log det[L L0^-1] over the run", 1e-7),
    "drift_halving": ("drift(tol/2) / drift(tol) for H", 0.125),
}

TODA_VERIFY = ("quadratic", "d1", "u1", "middle", "involution", "symmetry", "rho_forms",
               "rho_conservation", "gamma_conservation", "rho_ledger", "gamma_ledger",
               "log_det_routes", "positivity", "convexity", "a_gradient")
AL_VERIFY = ("det", "trace", "nD", "nU", "nD2", "nU2", "wrap", "vacuous", "rho_forms",
             "gamma_forms", "rho_conservation", "gamma_conservation", "rho_ledger",
             "gamma_ledger", "z_derivative")
TODA_MACRO = ("rho_ledger", "gamma_ledger", "log_det_routes")
AL_MACRO = ("rho_ledger", "gamma_ledger", "z_derivative")


@dataclass
class ExperimentConfig:
    model: str = "toda"
    mode: str = "verify"
    seed: int = 0
    n_states: int = 10
    window_size: int = 32
    amplitude: float = 0.05
    kappas: tuple = (1.0, 2.0, 3.0)
    zs: tuple = (2.0, 3.0, 2 + 1j)
    signs: tuple = (1, -1)
    tolerances: dict = field(default_factory=dict)
    out: str = "lattice_laws_out"
    T: float = 1.0
    tol: float = 1e-10
    snapshots: int = 11
    eps: float = 1e-3
    tables: int = 1
    halving: bool = False
    unsupported: bool = False

    def __post_init__(self):
        if self.model not in ("toda", "al"):
            raise ConfigError(f"model: expected 'toda' or 'al', got {self.model!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode: expected one of {MODES}, got {self.mode!r}")
        if self.seed < 0:
            raise ConfigError("seed: must be a nonnegative integer")
        if self.n_states < 1:
            raise ConfigError("n_states: must be positive")
        if self.window_size < 8:
            raise ConfigError("window: must be at least 8")
        if self.amplitude < 0:
            raise ConfigError("amplitude: must be nonnegative")
        for s in self.signs:
            if s not in (1, -1):
                raise ConfigError(f"sign: expected +1 or -1, got {s!r}")
        if self.model == "toda":
            for k in self.kappas:
                if not k > 0 or (k < 1 and not self.unsupported):
                    raise ConfigError(f"kappa: {k} is outside the supported range kappa >= 1")
        else:
            for z in self.zs:
                if not abs(z) > 1 or (abs(z) < 2 and not self.unsupported):
                    raise ConfigError(f"z: {z} is outside the supported range |z| >= 2")
        for name in self.tolerances:
            if name not in CHECKS:
                raise ConfigError(f"tol-{name}: unknown check")

    @property
    def params(self) -> tuple:
        return self.kappas if self.model == "toda" else self.zs

    def tolerance(self, name: str) -> float:
        return self.tolerances.get(name, CHECKS[name][1])


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *key])))


def _scale_into_ball(make, inside, what):
    """Largest ``t`` in ``(0, 1]`` (by bisection) with ``inside(make(t))``."""
    if inside(make(1.0)):
        return make(1.0)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        try:
            ok = inside(make(mid))
        except DomainError:
            ok = False
        lo, hi = (mid, hi) if ok else (lo, mid)
    if lo == 0.0:
        raise BallUnreachable(f"no rescaling of the drawn state reaches the ball for {what}")
    return make(lo)


def generate_state(config: ExperimentConfig, index: int, sign: int = 1):
    """Seeded random state, rescaled to sit well inside the ball.

    Site values come from a Philox generator keyed by ``(seed, index)``;
    Toda draws ``a = exp(A u)/2``, ``b = A v`` and Ablowitz-Ladik draws
    ``alpha = A (u + i v)`` with ``u, v`` uniform on ``[-1, 1]`` and ``A`` the
    amplitude.  If the draw is outside the ball for the most restrictive
    spectral parameter, it is scaled down until its ball functional is 90% of
    the bound.

    Raises
    ------
    BallUnreachable
        If the ball bound is not positive or no rescaling reaches it.
    """
    window = LatticeWindow(0, config.window_size)
    rng = _rng(config.seed, index)
    u = rng.uniform(-1.0, 1.0, config.window_size)
    v = rng.uniform(-1.0, 1.0, config.window_size)
    A = config.amplitude
    if config.model == "toda":
        kappa = min(config.kappas)
        bound = toda.DEFAULT_DELTA ** 2 * kappa
        if not bound > 0:
            raise BallUnreachable(f"empty ball at kappa = {kappa}")

        def make(t):
            return toda.TodaState(window, 0.5 * np.exp(t * A * u), t * A * v)

        return _scale_into_ball(make, lambda s: toda.energy(s) <= BALL_TARGET * bound, f"kappa = {kappa}")

    r = min(abs(z) for z in config.zs)
    bound = al.DEFAULT_DELTA ** 2 * (r * r - 1) / r
    if not bound > 0:
        raise BallUnreachable(f"empty ball at |z| = {r}")

    def make(t):
        return al.ALState(window, t * A * (u + 1j * v), sign)

    def inside(s):
        M = abs(al.mass_and_energy(s)[0])
        return M * math.exp(M) <= BALL_TARGET * bound

    return _scale_into_ball(make, inside, f"|z| = {r}")


def _param_label(config, p) -> str:
    if config.model == "toda":
        return f"kappa{p:g}"
    p = complex(p)
    return f"z{p.real:g}{p.imag:+g}i" if p.imag else f"z{p.real:g}"


def _param_json(p):
    p = complex(p)
    return p.real if p.imag == 0 else [p.real, p.imag]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, columns):
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(str(int(c)) if isinstance(c, (int, np.integer)) else _fmt(c) for c in row))
    path.write_text("\n".join(lines) + "\n")


def _site_tables(config, out: Path, stem: str, sites, pairs):
    """Per-site ``site,density,current,residual`` tables, split into re/im for complex data."""
    for name, (density, current, residual) in pairs.items():
        if np.iscomplexobj(density) or np.iscomplexobj(current) or np.iscomplexobj(residual):
            for part, fn in (("re", np.real), ("im", np.imag)):
                _write_csv(out / f"{stem}_{name}_{part}.csv", ("site", "density", "current", "residual"),
                           (sites, fn(density), fn(current), fn(residual)))
        else:
            _write_csv(out / f"{stem}_{name}.csv", ("site", "density", "current", "residual"),
                       (sites, density, current, residual))


# ---- per-task workers; each returns {check: residual} plus optional tables ----

def _toda_verify(config, index, kappa, sign, macro_only=False):
    s = generate_state(config, index)
    G = toda.green_table(s, kappa, sign)
    n = toda.density_sites(s, G)
    if macro_only:
        m = toda.macroscopic_check(s, kappa, sign, G)
        return {"rho_ledger": abs(m["lhs_rho"] - m["rhs_rho"]),
                "gamma_ledger": abs(m["lhs_gamma"] - m["rhs_gamma"]),
                "log_det_routes": abs(m["log_det"] - m["log_det_pivots"])}, None
    rep = toda.toda_report(s, kappa, sign)
    res = {k: rep.residuals[k] for k in TODA_VERIFY if k in rep.residuals}
    res["positivity"] = max(0.0, -float(min(rep.rho.min(), rep.gamma.min())))

    rng = _rng(config.seed, index, 1)
    dirs = []
    for _ in range(CONVEXITY_DIRECTIONS):
        c, d = rng.standard_normal((2, config.window_size))
        norm = math.sqrt(float(c @ c + d @ d))
        dirs.append((c / norm, d / norm))
    rho2, gamma2 = toda.convexity_scan(s, kappa, sign, dirs, n)
    res["convexity"] = max(0.0, -float(min(rho2.min(), gamma2.min())))
    res["a_gradient"] = float(np.max(np.abs(toda.a_gradient(s, kappa, sign, s.window.sites))))

    table = None
    if index < config.tables:
        drho, dgamma = toda.density_time_derivative(s, kappa, sign, G, n)
        gj, j = toda.currents(s, kappa, sign, G, np.append(n, n[-1] + 1))
        table = (n, {"rho": (rep.rho, j[:-1], sign * drho - np.diff(j)),
                     "gamma": (rep.gamma, gj[:-1], sign * dgamma - np.diff(gj))})
    return res, table


def _al_verify(config, index, z, sign, macro_only=False):
    s = generate_state(config, index, sign)
    G = al.green_table_al(s, z, unsupported=config.unsupported)
    n = al.density_sites(s, G)
    zc = al.z_derivative_check(s, z)
    z_res = abs(zc["lhs"] - zc["rhs"])
    if macro_only:
        m = al.macroscopic_check_al(s, z, G)
        return {"rho_ledger": abs(m["sum_rho"] - m["log_det"]),
                "gamma_ledger": abs(m["sum_gamma"] - m["weighted_trace"]),
                "z_derivative": z_res}, None
    rep = al.al_report(s, z)
    res = {k: rep.residuals[k] for k in AL_VERIFY if k in rep.residuals}
    res["z_derivative"] = z_res
    table = None
    if index < config.tables:
        drho, dgamma = al.density_time_derivative_al(s, z, G, n)
        j, gj = al.currents_al(s, z, G, np.append(n, n[-1] + 1))
        table = (n, {"rho": (rep.rho, j[:-1], drho - np.diff(j)),
                     "gamma": (rep.gamma, gj[:-1], dgamma - np.diff(gj))})
    return res, table


def _evolve(config, index, param, sign):
    s = generate_state(config, index, sign)
    times = np.linspace(0.0, config.T, config.snapshots)
    which = list(flow.FUNCTIONALS) if config.model == "toda" else [f for f in flow.FUNCTIONALS if f != "P"]

    def drifts(tol):
        traj = flow.integrate(s, T=config.T, tol=tol, times=times)
        return flow.conservation_monitor(traj, param, which, sign=sign)

    table = drifts(config.tol)
    res = {f"drift_{k}": v for k, v in table.drifts.items()}
    if config.halving:
        half = drifts(config.tol / 2)
        res["drift_halving"] = half.drifts["H"] / table.drifts["H"] if table.drifts["H"] else 0.0
    return res, table


def coercivity_direction(config, index) -> np.ndarray:
    """Unit-norm complex direction keyed by ``(seed, index)``."""
    rng = _rng(config.seed, index, 2)
    d = rng.standard_normal(COERCIVITY_DIRECTION_SIZE) + 1j * rng.standard_normal(COERCIVITY_DIRECTION_SIZE)
    return d / np.linalg.norm(d)


def _coercivity(config, index, z, sign):
    r = al.coercivity_check(coercivity_direction(config, index), float(complex(z).real), sign, config.eps)
    res = {
        "coercivity_im": abs(r["sum_im_j2"] - r["dft_im"]) / abs(r["dft_im"]),
        "coercivity_re": abs(r["sum_re_rho2"] - r["dft_re"]) / abs(r["dft_re"]),
        "coercivity_sign": max(0.0, sign * r["sum_im_j2"], -sign * r["sum_re_rho2"]),
    }
    return res, r


def _tasks(config):
    return [(i, p, s) for i in range(config.n_states) for p in config.params for s in config.signs]


def _threads() -> int:
    raw = os.environ.get("LATTICE_LAWS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"LATTICE_LAWS_THREADS: expected an integer, got {raw!r}") from None


def run(config: ExperimentConfig) -> dict:
    """Execute one mode over all (state, parameter, sign) tasks and write outputs.

    Returns the report dictionary (also written to ``<out>/report.json``).
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    if config.mode == "coercivity" and config.model != "al":
        raise ConfigError("mode: coercivity scans are defined for the al model only")
    if config.mode == "coercivity" and any(complex(z).imag or complex(z).real < 2 for z in config.zs):
        raise ConfigError("z: coercivity scans need real z >= 2")

    worker = {
        ("toda", "verify"): _toda_verify,
        ("al", "verify"): _al_verify,
        ("toda", "macroscopic"): lambda c, i, p, s: _toda_verify(c, i, p, s, macro_only=True),
        ("al", "macroscopic"): lambda c, i, p, s: _al_verify(c, i, p, s, macro_only=True),
        ("toda", "evolve"): _evolve,
        ("al", "evolve"): _evolve,
        ("al", "coercivity"): _coercivity,
    }[(config.model, config.mode)]

    tasks = _tasks(config)

    def guarded(task):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OutOfBallWarning)
            try:
                return worker(config, *task), None
            except LatticeLawsError as exc:
                return (None, None), f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(guarded, tasks))

    worst: dict = {}
    errors = []
    for task, ((res, extra), err) in zip(tasks, results):
        index, param, sign = task
        if err is not None:
            errors.append({"state": index, "param": _param_json(param), "sign": sign, "error": err})
            continue
        for name, value in res.items():
            if name not in worst or value > worst[name][0] or math.isnan(value):
                worst[name] = (value, index, param, sign)
        _emit_tables(config, out, task, extra)

    if config.mode == "coercivity":
        _coercivity_tables(config, out, tasks, results)

    checks = []
    for name in sorted(worst, key=list(CHECKS).index):
        value, index, param, sign = worst[name]
        tol = config.tolerance(name)
        checks.append({
            "name": name,
            "anchor": CHECKS[name][0],
            "max_residual": value,
            "tolerance": tol,
            "pass": bool(value <= tol),
            "worst_case": {"state": index, "param": _param_json(param), "sign": sign},
        })
    report = {
        "schema": SCHEMA,
        "environment": {
            "seed": config.seed,
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        },
        "config": _config_json(config),
        "checks": checks,
        "errors": errors,
        "pass": bool(checks) and not errors and all(c["pass"] for c in checks),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=False) + "\n")
    return report


def _config_json(config):
    d = dataclasses.asdict(config)
    d["kappas"] = list(config.kappas)
    d["zs"] = [_param_json(z) for z in config.zs]
    d["signs"] = list(config.signs)
    return d


def _emit_tables(config, out, task, extra):
    index, param, sign = task
    if extra is None:
        return
    stem = f"{config.model}_state{index}_{_param_label(config, param)}_sign{sign:+d}"
    if config.mode in ("verify", "macroscopic"):
        sites, pairs = extra
        _site_tables(config, out, stem, sites, pairs)
    elif config.mode == "evolve" and index < config.tables:
        header, cols = ["time"], [extra.times]
        for k, v in extra.values.items():
            if np.iscomplexobj(v):
                header += [f"{k}_re", f"{k}_im"]
                cols += [v.real, v.imag]
            else:
                header.append(k)
                cols.append(v)
        _write_csv(out / f"{stem}_drift.csv", header, cols)


def _coercivity_tables(config, out, tasks, results):
    for p in config.params:
        for s in config.signs:
            rows = [r[0][1] for t, r in zip(tasks, results) if t[1] == p and t[2] == s and r[1] is None]
            keys = ("sum_im_j2", "dft_im", "sum_re_rho2", "dft_re")
            _write_csv(out / f"al_coercivity_{_param_label(config, p)}_sign{s:+d}.csv", keys,
                       [[row[k] for row in rows] for k in keys])


# ---- argument handling ----

def _parse_sign(text: str) -> int:
    value = {"+1": 1, "1": 1, "+": 1, "-1": -1, "-": -1}.get(text.strip())
    if value is None:
        raise ValueError(text)
    return value


def _parse_complex(text: str) -> complex:
    return complex(text.strip().replace("i", "j") if "j" not in text else text.strip())


FILE_KEYS = {
    "model": str, "seed": int, "n_states": int, "window": int, "amplitude": float,
    "kappa": lambda t: tuple(float(x) for x in t.split(",")),
    "z": lambda t: tuple(_parse_complex(x) for x in t.split(",")),
    "sign": lambda t: tuple(_parse_sign(x) for x in t.split(",")),
    "out": str, "T": float, "tol": float, "snapshots": int, "eps": float, "tables": int,
    "halving": lambda t: t.strip().lower() in ("1", "true", "yes"),
    "unsupported": lambda t: t.strip().lower() in ("1", "true", "yes"),
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines (``#`` comments) into option values.

    Raises
    ------
    ConfigError
        With the file, line number and field of the first bad entry.
    """
    values, tolerances = {}, {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            if key.startswith("tol_"):
                name = _check_name(key[4:])
                tolerances[name] = float(value)
            elif key in FILE_KEYS:
                values[key] = FILE_KEYS[key](value)
            else:
                raise ConfigError(f"unknown field {key!r}")
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path}:{lineno}: field {key!r}: {exc}") from None
    if tolerances:
        values["tolerances"] = tolerances
    return values


def _check_name(raw: str) -> str:
    """Map a flag spelling such as ``rho-ledger`` or ``nd2`` to a check name."""
    key = raw.replace("-", "_")
    for name in CHECKS:
        if name.lower() == key.lower():
            return name
    raise ConfigError(f"unknown check {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lattice-laws", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run the {mode} sweep")
        p.add_argument("--config", help="key = value file; command-line flags take precedence")
        p.add_argument("--model", choices=("toda", "al"))
        p.add_argument("--seed", type=int)
        p.add_argument("--n-states", type=int, dest="n_states")
        p.add_argument("--window", type=int, help="state window size (>= 8)")
        p.add_argument("--amplitude", type=float)
        p.add_argument("--kappa", type=float, action="append", help="Toda spectral parameter (repeatable)")
        p.add_argument("--z", type=_parse_complex, action="append",
                       help="Ablowitz-Ladik spectral parameter such as 2 or 2+1j (repeatable)")
        p.add_argument("--sign", type=_parse_sign, action="append",
                       help="Lax sign (Toda) or +1 defocusing / -1 focusing (Ablowitz-Ladik); repeatable")
        p.add_argument("--out", help="output directory")
        p.add_argument("--tables", type=int, help="number of states with per-site tables")
        p.add_argument("--unsupported", action="store_true", default=None,
                       help="allow kappa < 1 or |z| < 2")
        if mode == "evolve":
            p.add_argument("--T", type=float, dest="T")
            p.add_argument("--tol", type=float)
            p.add_argument("--snapshots", type=int)
            p.add_argument("--halving", action="store_true", default=None,
                           help="also run at tol/2 and check the drift ratio")
        if mode == "coercivity":
            p.add_argument("--eps", type=float)
    return parser


def parse_config(argv=None) -> ExperimentConfig:
    """Merge defaults, an optional config file and flags (flags win)."""
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    tolerances = {}
    it = iter(extra)
    for token in it:
        if not token.startswith("--tol-"):
            parser.error(f"unrecognized argument {token}")
        name, _, value = token[6:].partition("=")
        if not value:
            value = next(it, None)
            if value is None:
                parser.error(f"{token} needs a value")
        try:
            tolerances[_check_name(name)] = float(value)
        except (ValueError, ConfigError) as exc:
            parser.error(f"{token}: {exc}")

    merged = read_config_file(args.config) if args.config else {}
    for key in ("model", "seed", "n_states", "window", "amplitude", "out", "tables", "unsupported",
                "T", "tol", "snapshots", "halving", "eps"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    for key, attr in (("kappa", "kappa"), ("z", "z"), ("sign", "sign")):
        if getattr(args, attr) is not None:
            merged[key] = tuple(getattr(args, attr))
    merged.setdefault("tolerances", {}).update(tolerances)

    rename = {"window": "window_size", "kappa": "kappas", "z": "zs", "sign": "signs"}
    fields = {rename.get(k, k): v for k, v in merged.items()}
    return ExperimentConfig(mode=args.mode, **fields)


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
        report = run(config)
    except ConfigError as exc:
        print(f"lattice-laws: config error: {exc}", file=sys.stderr)
        return 2
    for check in report["checks"]:
        flag = "PASS" if check["pass"] else "FAIL"
        print(f"{flag} {check['name']}: {check['max_residual']:.3e} (tol {check['tolerance']:.1e})")
    for err in report["errors"]:
        print(f"ERROR state {err['state']} param {err['param']} sign {err['sign']}: {err['error']}")
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
