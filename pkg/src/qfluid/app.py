"""Command-line entry point: configuration, regime dispatch and CSV output.

Configuration files are line-oriented ``key = value`` text grouped under
``[section]`` headers, with ``#`` comments::

    subcommand = simulate

    [physics]
    statistics = fd
    T = 1.0
    eps = 0.1
    d = 1

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, closure, solvers, specfun
from .exceptions import ConvergenceError, DomainError, NumericalAbort
from .fields import Grid, write_snapshot

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "initial_state",
    "build_potential",
    "run",
    "main",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_ABORT",
    "EXIT_VERIFY",
]

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_VERIFY = 0, 2, 3, 4

SUBCOMMANDS = ("specfun", "closure", "simulate", "verify")
INITIAL_CONDITIONS = ("uniform", "gaussian-bump", "cosine", "pure-state-gaussian", "random")
POTENTIALS = ("zero", "cosine-well", "harmonic-windowed")


class ConfigError(DomainError):
    """Invalid configuration; ``line`` is the offending line number when known."""

    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


# (section, key, type, default). Sections group keys in the file; field
# names are ``section_key`` except for the top-level ``subcommand``.
_SCHEMA = (
    ("", "subcommand", str, None),
    ("physics", "statistics", str, "mb"),
    ("physics", "T", float, 1.0),
    ("physics", "eps", float, 0.1),
    ("physics", "d", int, 1),
    ("grid", "points", int, 128),
    ("grid", "length", float, 2.0 * math.pi),
    ("model", "regime", str, "general"),
    ("model", "model", str, "hydro"),
    ("initial", "name", str, "uniform"),
    ("initial", "density", float, 1.0),
    ("initial", "amplitude", float, 0.1),
    ("initial", "width", float, 0.5),
    ("initial", "center", float, None),
    ("initial", "velocity", float, 0.0),
    ("initial", "mode", int, 1),
    ("potential", "name", str, "zero"),
    ("potential", "amplitude", float, 1.0),
    ("potential", "omega", float, 1.0),
    ("potential", "mode", int, 1),
    ("output", "t_end", float, 1.0),
    ("output", "interval", float, 0.1),
    ("output", "directory", str, "out"),
    ("table", "order", float, None),
    ("table", "z_min", float, -5.0),
    ("table", "z_max", float, 5.0),
    ("table", "n_min", float, 1e-3),
    ("table", "n_max", float, 10.0),
    ("table", "samples", int, 101),
)


def _field_name(section, key):
    return key if not section else f"{section}_{key}"


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; see the module docstring for the format."""

    subcommand: str | None = None
    physics_statistics: str = "mb"
    physics_T: float = 1.0
    physics_eps: float = 0.1
    physics_d: int = 1
    grid_points: int = 128
    grid_length: float = 2.0 * math.pi
    model_regime: str = "general"
    model_model: str = "hydro"
    initial_name: str = "uniform"
    initial_density: float = 1.0
    initial_amplitude: float = 0.1
    initial_width: float = 0.5
    initial_center: float | None = None
    initial_velocity: float = 0.0
    initial_mode: int = 1
    potential_name: str = "zero"
    potential_amplitude: float = 1.0
    potential_omega: float = 1.0
    potential_mode: int = 1
    output_t_end: float = 1.0
    output_interval: float = 0.1
    output_directory: str = "out"
    table_order: float | None = None
    table_z_min: float = -5.0
    table_z_max: float = 5.0
    table_n_min: float = 1e-3
    table_n_max: float = 10.0
    table_samples: int = 101

    @property
    def statistics(self):
        return specfun.Statistics.from_name(self.physics_statistics, self.physics_T, self.physics_d)

    @property
    def grid(self):
        return Grid(self.physics_d, self.grid_points, self.grid_length)

    def to_text(self):
        """Canonical text form; ``parse_config(cfg.to_text()) == cfg``."""
        lines = []
        current = ""
        for section, key, _, _ in _SCHEMA:
            value = getattr(self, _field_name(section, key))
            if value is None:
                continue
            if section != current:
                lines.append("")
                lines.append(f"[{section}]")
                current = section
            lines.append(f"{key} = {_format_value(value)}")
        return "\n".join(lines).lstrip("\n") + "\n"

    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(raw, typ, key, line):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            out = float(raw)
            if not math.isfinite(out):
                raise ValueError
            return out
    except ValueError:
        raise ConfigError(f"{key} expects {typ.__name__}, got {raw!r}", line) from None
    return raw


def parse_config(text, validate=True):
    """Parse configuration text into a :class:`RunConfig`.

    Parameters
    ----------
    text : str
    validate : bool
        Check cross-field constraints (on by default).

    Raises
    ------
    ConfigError
        Unknown section or key, duplicate key, type mismatch or constraint
        violation; the message carries the line number.
    """
    known = {(sec, key): typ for sec, key, typ, _ in _SCHEMA}
    sections = {sec for sec, _, _, _ in _SCHEMA}
    values = {}
    lines = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"malformed section header {body!r}", lineno)
            section = body[1:-1].strip()
            if section not in sections:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (part.strip() for part in body.split("=", 1))
        if (section, key) not in known:
            where = f"[{section}]" if section else "the top level"
            raise ConfigError(f"unknown key {key!r} in {where}", lineno)
        name = _field_name(section, key)
        if name in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[name]})", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        values[name] = _convert(value, known[(section, key)], key, lineno)
        lines[name] = lineno
    cfg = RunConfig(**values)
    if validate:
        validate_config(cfg, lines)
    return cfg


def _initial_peak(cfg):
    """Upper bound of the initial density, computable without a grid."""
    name = cfg.initial_name
    if name == "pure-state-gaussian":
        w = cfg.initial_width
        return cfg.initial_density * (2.0 * math.pi * w * w) ** (-cfg.physics_d / 2.0)
    if name == "uniform":
        return cfg.initial_density
    return cfg.initial_density + abs(cfg.initial_amplitude)


def validate_config(cfg, lines=None):
    """Cross-field checks, run before any field allocation."""
    lines = lines or {}

    def fail(message, *fields):
        line = next((lines[f] for f in fields if f in lines), None)
        raise ConfigError(message, line)

    if cfg.subcommand is None:
        fail("subcommand is required (specfun, closure, simulate or verify)")
    if cfg.subcommand not in SUBCOMMANDS:
        fail(f"unknown subcommand {cfg.subcommand!r}; choose from {SUBCOMMANDS}", "subcommand")
    try:
        stat = cfg.statistics
    except DomainError as exc:
        fail(str(exc), "physics_statistics", "physics_T", "physics_d")
    if not cfg.physics_eps >= 0:
        fail("eps must be non-negative", "physics_eps")

    crit = specfun.critical_density(stat)
    if math.isfinite(crit):
        bound = (1.0 - closure.SUPERCRITICAL_MARGIN) * crit
        if cfg.subcommand == "closure" and cfg.table_n_max > bound:
            fail(
                f"n_max = {cfg.table_n_max!r} exceeds the Bose-Einstein critical density "
                f"{crit:.10g} = n_d zeta(d/2)/|lambda|",
                "table_n_max",
            )
        if cfg.subcommand == "simulate" and _initial_peak(cfg) > bound:
            fail(
                f"initial density peak {_initial_peak(cfg):.6g} exceeds the Bose-Einstein critical "
                f"density {crit:.10g} = n_d zeta(d/2)/|lambda|",
                "initial_density",
                "initial_amplitude",
            )

    if cfg.subcommand == "simulate":
        if cfg.physics_d not in (1, 2):
            fail("simulations run on d = 1 or 2 grids", "physics_d")
        if cfg.grid_points < 8:
            fail("grid points must be at least 8", "grid_points")
        if not cfg.grid_length > 0:
            fail("grid length must be positive", "grid_length")
        try:
            solvers.validate_regime(cfg.model_regime, cfg.model_model, cfg.physics_eps, stat)
        except DomainError as exc:
            fail(str(exc), "model_regime", "model_model")
        if cfg.initial_name not in INITIAL_CONDITIONS:
            fail(f"unknown initial condition {cfg.initial_name!r}; choose from {INITIAL_CONDITIONS}", "initial_name")
        if cfg.potential_name not in POTENTIALS:
            fail(f"unknown potential {cfg.potential_name!r}; choose from {POTENTIALS}", "potential_name")
        if not cfg.initial_density > 0:
            fail("initial density must be positive", "initial_density")
        if cfg.initial_name in ("gaussian-bump", "pure-state-gaussian") and not cfg.initial_width > 0:
            fail("initial width must be positive", "initial_width")
        if cfg.initial_name in ("cosine", "random") and not abs(cfg.initial_amplitude) < cfg.initial_density:
            fail("|amplitude| must be below the background density", "initial_amplitude")
        if cfg.initial_name == "pure-state-gaussian" and cfg.model_regime != "madelung":
            fail("pure-state-gaussian initial data belong to the madelung regime", "initial_name")
        if not cfg.output_t_end >= 0:
            fail("t_end must be non-negative", "output_t_end")
        if not cfg.output_interval > 0:
            fail("snapshot interval must be positive", "output_interval")
    if cfg.subcommand in ("specfun", "closure"):
        if cfg.table_samples < 2:
            fail("samples must be at least 2", "table_samples")
        if not cfg.table_z_min < cfg.table_z_max:
            fail("z_min must be below z_max", "table_z_min", "table_z_max")
        if not 0 < cfg.table_n_min < cfg.table_n_max:
            fail("need 0 < n_min < n_max", "table_n_min", "table_n_max")
    return cfg


# ---------------------------------------------------------------------------
# Initial conditions and potentials


def _periodic_offset(grid, x, center):
    """Smooth periodic stand-in for ``x - center``: ``(L/pi) sin(pi (x - c)/L)``."""
    L = grid.length
    return (L / math.pi) * np.sin(math.pi * (x - center) / L)


def build_potential(cfg, grid):
    """External potential ``V`` on the grid."""
    coords = grid.coordinates()
    L = grid.length
    name = cfg.potential_name
    if name == "zero":
        return np.zeros(grid.shape)
    if name == "cosine-well":
        k = 2.0 * math.pi * cfg.potential_mode / L
        return cfg.potential_amplitude * sum(1.0 - np.cos(k * x) for x in coords)
    if name == "harmonic-windowed":
        c = 0.5 * L
        r2 = sum(_periodic_offset(grid, x, c) ** 2 for x in coords)
        return 0.5 * cfg.potential_omega**2 * r2
    raise ConfigError(f"unknown potential {name!r}")


def initial_state(cfg, grid, seed=0):
    """Initial :class:`solvers.FluidState` for the configured model."""
    coords = grid.coordinates()
    d = grid.dimension
    L = grid.length
    c = 0.5 * L if cfg.initial_center is None else cfg.initial_center
    name = cfg.initial_name
    rho = cfg.initial_density
    u = np.zeros((d,) + grid.shape)
    if name == "uniform":
        n = np.full(grid.shape, rho)
        u[0] = cfg.initial_velocity
    elif name == "gaussian-bump":
        r2 = sum(_periodic_offset(grid, x, c) ** 2 for x in coords)
        n = rho + cfg.initial_amplitude * np.exp(-r2 / (2.0 * cfg.initial_width**2))
        u[0] = cfg.initial_velocity
    elif name == "cosine":
        k = 2.0 * math.pi * cfg.initial_mode / L
        n = rho + cfg.initial_amplitude * np.prod([np.cos(k * x) for x in coords], axis=0)
        # u is the discrete gradient of a phase, so the discrete curl vanishes exactly
        S = cfg.initial_velocity / k * sum(np.sin(k * x + 0.3 * a) for a, x in enumerate(coords))
        u = grid.gradient(S)
    elif name == "pure-state-gaussian":
        w = cfg.initial_width
        r2 = sum((x - c) ** 2 for x in coords)
        n = rho * (2.0 * math.pi * w * w) ** (-d / 2.0) * np.exp(-r2 / (2.0 * w * w))
        u[0] = cfg.initial_velocity
    elif name == "random":
        rng = np.random.default_rng(seed)
        n = rho + cfg.initial_amplitude * (2.0 * rng.random(grid.shape) - 1.0)
    else:
        raise ConfigError(f"unknown initial condition {name!r}")
    n = np.maximum(n, 0.0)
    if cfg.model_model == "diffusive":
        return solvers.FluidState(0.0, n)
    return solvers.FluidState(0.0, n, n * u)


def pure_state_wavefunction(cfg, grid):
    """Wave function ``sqrt(n) exp(i S / eps)`` matching the pure-state initial data."""
    (x,) = grid.coordinates()
    c = 0.5 * grid.length if cfg.initial_center is None else cfg.initial_center
    w = cfg.initial_width
    amp = math.sqrt(cfg.initial_density) * (2.0 * math.pi * w * w) ** -0.25
    phase = cfg.initial_velocity * x / cfg.physics_eps if cfg.physics_eps > 0 else 0.0 * x
    return amp * np.exp(-((x - c) ** 2) / (4.0 * w * w) + 1j * phase)


# ---------------------------------------------------------------------------
# Subcommands


def provenance(cfg, seed):
    return [
        f"qfluid {__version__}",
        f"config sha256/16 {cfg.digest()}",
        f"seed {seed}",
    ]


def _write_csv(path, header, rows, prov):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in prov:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def run_specfun(cfg, out, prov):
    stat = cfg.statistics
    order = stat.half_dim if cfg.table_order is None else cfg.table_order
    z = np.linspace(cfg.table_z_min, cfg.table_z_max, cfg.table_samples)
    if stat.lam < 0:
        z = z[z < -math.log(-stat.lam)]
    values = np.atleast_1d(specfun.phi(stat, order, z))
    path = out / "specfun.csv"
    _write_csv(path, ["z", f"phi_{order!r}"], zip(z, values), prov + [f"lambda {stat.lam!r} order {order!r}"])
    return [path]


def run_closure(cfg, out, prov):
    stat = cfg.statistics
    n = np.geomspace(cfg.table_n_min, cfg.table_n_max, cfg.table_samples)
    table = closure.tabulate(stat, n)
    path = out / "closure.csv"
    names = list(table)
    _write_csv(path, names, zip(*(table[k] for k in names)), prov + [
        f"lambda {stat.lam!r} T {stat.temperature!r} d {stat.dimension}",
        "Q = -(2 bohm_a lap(n) + bohm_b |grad n|^2) / 24",
    ])
    return [path]


def run_simulate(cfg, out, prov, seed):
    grid = cfg.grid
    stat = cfg.statistics
    V = build_potential(cfg, grid)
    regime = solvers.RegimeSpec(cfg.model_regime, cfg.model_model, cfg.physics_eps, stat, grid, V)
    state = initial_state(cfg, grid, seed)
    t_end = cfg.output_t_end
    count = int(math.floor(t_end / cfg.output_interval + 1e-9))
    times = [k * cfg.output_interval for k in range(1, count + 1)]
    records = solvers.integrate(state, regime, t_end, output_times=times)
    (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    paths = []
    for k, (t, snap, _) in enumerate(records):
        columns = {"n": snap.n}
        if snap.J is not None:
            for a, label in zip(range(grid.dimension), "xy"):
                columns[f"J_{label}"] = snap.J[a]
        path = out / f"snapshot_{k:04d}.csv"
        write_snapshot(path, t, grid, columns, provenance=prov)
        paths.append(path)
    header = ["t", "mass", "momentum_x"] + (["momentum_y"] if grid.dimension == 2 else [])
    header += ["max_abs_curl", "min_density", "supercritical"]
    diag_path = out / "diagnostics.csv"
    _write_csv(diag_path, header, (r[2].row() for r in records), prov)
    return paths + [diag_path]


def run_verify(cfg, out, prov):
    from . import suites

    results, residual = suites.run_all()
    path = out / "verify.csv"
    _write_csv(path, ["suite", "metric", "tolerance", "pass"],
               ((r.name, r.metric, r.tolerance, int(r.passed)) for r in results), prov)
    rpath = out / "moyal_residual.csv"
    _write_csv(rpath, ["eps", "residual"], residual, prov)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.metric:.3e} (tolerance {r.tolerance:.1e})")
    return [path, rpath], all(r.passed for r in results)


def run(cfg, out=None, seed=0):
    """Execute ``cfg`` and return ``(exit_code, written_paths)``."""
    out = Path(out if out is not None else cfg.output_directory)
    out.mkdir(parents=True, exist_ok=True)
    prov = provenance(cfg, seed)
    if cfg.subcommand == "specfun":
        return EXIT_OK, run_specfun(cfg, out, prov)
    if cfg.subcommand == "closure":
        return EXIT_OK, run_closure(cfg, out, prov)
    if cfg.subcommand == "simulate":
        return EXIT_OK, run_simulate(cfg, out, prov, seed)
    paths, ok = run_verify(cfg, out, prov)
    return (EXIT_OK if ok else EXIT_VERIFY), paths


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("threads must be at least 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="qfluid", description="Semiclassical quantum fluid models.")
    parser.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS,
                        help="overrides the subcommand named in the config")
    parser.add_argument("--config", type=Path, help="configuration file")
    parser.add_argument("--out", type=Path, help="output directory (overrides [output] directory)")
    parser.add_argument("--seed", type=_u64, default=0, help="seed for random initial data")
    parser.add_argument("--threads", type=_positive, default=1, help="worker threads for BLAS/OpenMP")
    parser.add_argument("--version", action="version", version=f"qfluid {__version__}")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(args.threads)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, validate=False)
        if args.subcommand:
            cfg = dataclasses.replace(cfg, subcommand=args.subcommand)
        validate_config(cfg, _line_map(text))
    except OSError as exc:
        print(f"qfluid: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"qfluid: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, paths = run(cfg, args.out, args.seed)
    except (NumericalAbort, ConvergenceError, DomainError) as exc:
        where = ""
        if isinstance(exc, NumericalAbort) and exc.step is not None:
            where = f" at step {exc.step}, t = {exc.time!r}"
        print(f"qfluid: numerical abort{where}: {exc}", file=sys.stderr)
        return EXIT_ABORT
    for p in paths:
        print(p)
    return code


def _line_map(text):
    """Field name to line number, for error messages after overrides."""
    out = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body.startswith("[") and body.endswith("]"):
            section = body[1:-1].strip()
        elif "=" in body:
            out.setdefault(_field_name(section, body.split("=", 1)[0].strip()), lineno)
    return out


def main_exit():
    sys.exit(main())
