"""Command-line scenario runner.

Subcommands: ``simulate <config>``, ``sweep <config>``, ``verify [suite]``
and ``elliptic-table <k> <u_max> <n>``.  Configurations are flat
``key = value`` text files; CSV goes to stdout (or ``--output``) with a
``.`` decimal separator, 17 significant digits and LF line endings, so a
given configuration always produces byte-identical output.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 runtime/integration failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import heun, verify, wigner
from . import spin_dynamics as sd
from .elliptic import jacobi, jacobi_identity_residuals
from .errors import DomainError, EllipspinError, IntegrationError

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

OUTPUT_KINDS = ("trajectory", "probability", "polarization", "heun_check", "wigner")

_DIMENSIONLESS_KEYS = ("k", "h_over_omega", "delta_over_omega")
_PHYSICAL_KEYS = ("g", "h0_tesla", "H0_tesla", "omega_rad_per_s")
_OTHER_KEYS = (
    "tau_max",
    "n_samples",
    "tol",
    "spin_j",
    "initial_re1",
    "initial_im1",
    "initial_re2",
    "initial_im2",
    "outputs",
    "sweep_cap",
)
_KNOWN_KEYS = set(_DIMENSIONLESS_KEYS) | set(_PHYSICAL_KEYS) | set(_OTHER_KEYS)

DEFAULT_SWEEP_CAP = 100_000


class ConfigError(Exception):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        place = f" (line {line}, column {column})" if line else ""
        super().__init__(f"{message}{place}")


@dataclass
class Scenario:
    params: sd.SimParams
    tau_max: float
    n_samples: int
    tol: float
    spin_j: float
    initial: sd.SpinState
    outputs: tuple[str, ...]
    # sweep-only grids; singleton lists when the config is scalar
    k_grid: list[float] = field(default_factory=list)
    delta_grid: list[float] = field(default_factory=list)
    h_grid: list[float] = field(default_factory=list)
    sweep_cap: int = DEFAULT_SWEEP_CAP


def _read_pairs(path: str) -> dict[str, tuple[str, int, int]]:
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config is not plain ASCII: {exc}")
    pairs: dict[str, tuple[str, int, int]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno, 1)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        col = raw.index("=") + 2
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, raw.find(key) + 1)
        if key in pairs:
            raise ConfigError(f"duplicate key {key!r}", lineno, 1)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno, col)
        pairs[key] = (value, lineno, col)
    return pairs


def _parse_float(pairs, key, default=None):
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    value, line, col = pairs[key]
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key!r} is not a number: {value!r}", line, col)


def _parse_float_list(pairs, key, default=None):
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    value, line, col = pairs[key]
    out = []
    for part in value.split(","):
        part = part.strip()
        try:
            out.append(float(part))
        except ValueError:
            raise ConfigError(f"{key!r} has a non-numeric entry: {part!r}", line, col)
    return out


def load_scenario(path: str, allow_grids: bool = False) -> Scenario:
    pairs = _read_pairs(path)

    has_dimensionless = any(k in pairs for k in ("h_over_omega", "delta_over_omega"))
    has_physical = any(k in pairs for k in _PHYSICAL_KEYS)
    if has_physical and has_dimensionless:
        print(
            "warning: both dimensionless and physical field keys present; "
            "dimensionless values take precedence",
            file=sys.stderr,
        )

    if allow_grids:
        k_grid = _parse_float_list(pairs, "k")
        delta_grid = _parse_float_list(pairs, "delta_over_omega")
        h_grid = _parse_float_list(pairs, "h_over_omega")
        k_value, delta, h = k_grid[0], delta_grid[0], h_grid[0]
    else:
        if has_dimensionless or not has_physical:
            k_value = _parse_float(pairs, "k")
            delta = _parse_float(pairs, "delta_over_omega")
            h = _parse_float(pairs, "h_over_omega")
        else:
            k_value = _parse_float(pairs, "k")
            g = _parse_float(pairs, "g")
            h0 = _parse_float(pairs, "h0_tesla")
            big_h0 = _parse_float(pairs, "H0_tesla")
            omega = _parse_float(pairs, "omega_rad_per_s")
            try:
                derived = sd.derive_parameters(g, h0, big_h0, omega, k=k_value)
            except DomainError as exc:
                raise ConfigError(str(exc))
            delta = derived.delta_over_omega
            h = derived.h_over_omega
        k_grid, delta_grid, h_grid = [k_value], [delta], [h]

    tau_max = _parse_float(pairs, "tau_max")
    if not tau_max > 0.0:
        raise ConfigError(f"tau_max must be positive, got {tau_max!r}")
    n_samples_f = _parse_float(pairs, "n_samples")
    n_samples = int(n_samples_f)
    if n_samples != n_samples_f or n_samples < 2:
        raise ConfigError(f"n_samples must be an integer >= 2, got {n_samples_f!r}")
    tol = _parse_float(pairs, "tol", default=sd.DEFAULT_TOL)
    if not (0.0 < tol <= 1e-4):
        raise ConfigError(f"tol must lie in (0, 1e-4], got {tol!r}")
    spin_j = _parse_float(pairs, "spin_j", default=0.5)
    if spin_j < 0 or abs(2 * spin_j - round(2 * spin_j)) > 1e-12 or spin_j > wigner.MAX_J:
        raise ConfigError(f"spin_j must be a half-integer in [0, {wigner.MAX_J}], got {spin_j!r}")

    re1 = _parse_float(pairs, "initial_re1", default=1.0)
    im1 = _parse_float(pairs, "initial_im1", default=0.0)
    re2 = _parse_float(pairs, "initial_re2", default=0.0)
    im2 = _parse_float(pairs, "initial_im2", default=0.0)
    initial = sd.SpinState(complex(re1, im1), complex(re2, im2))
    norm = math.sqrt(initial.norm_sq)
    if abs(norm - 1.0) > 1e-6:
        raise ConfigError(f"initial state norm is {norm!r}; must be 1 within 1e-6")
    initial = sd.SpinState(initial.psi1 / norm, initial.psi2 / norm)

    if "outputs" in pairs:
        value, line, col = pairs["outputs"]
        outputs = tuple(part.strip() for part in value.split(","))
        for out in outputs:
            if out not in OUTPUT_KINDS:
                raise ConfigError(f"unknown output kind {out!r}", line, col)
    else:
        outputs = ("trajectory",)

    sweep_cap_f = _parse_float(pairs, "sweep_cap", default=float(DEFAULT_SWEEP_CAP))
    sweep_cap = int(sweep_cap_f)
    if sweep_cap != sweep_cap_f or sweep_cap < 1:
        raise ConfigError(f"sweep_cap must be a positive integer, got {sweep_cap_f!r}")

    try:
        params = sd.SimParams.from_detuning(h_grid[0], delta_grid[0], k_grid[0])
    except DomainError as exc:
        raise ConfigError(str(exc))
    return Scenario(
        params=params,
        tau_max=tau_max,
        n_samples=n_samples,
        tol=tol,
        spin_j=spin_j,
        initial=initial,
        outputs=outputs,
        k_grid=k_grid,
        delta_grid=delta_grid,
        h_grid=h_grid,
        sweep_cap=sweep_cap,
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _open_output(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="ascii", newline="\n"), True


def cmd_simulate(config_path: str, output: str | None) -> int:
    try:
        scenario = load_scenario(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    taus = np.linspace(0.0, scenario.tau_max, scenario.n_samples)
    try:
        traj = sd.evolve(scenario.initial, scenario.params, taus, tol=scenario.tol)
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except EllipspinError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    stream, owned = _open_output(output)
    try:
        stream.write("tau,re_psi1,im_psi1,re_psi2,im_psi2,p_flip,px,py,pz,norm_drift\n")
        drift = traj.norm_drift
        for i in range(len(traj)):
            l1, l2 = traj.lab[i]
            row = (
                traj.taus[i],
                l1.real,
                l1.imag,
                l2.real,
                l2.imag,
                traj.p_flip[i],
                traj.polarization[i, 0],
                traj.polarization[i, 1],
                traj.polarization[i, 2],
                drift[i],
            )
            stream.write(",".join(_fmt(x) for x in row) + "\n")
    finally:
        if owned:
            stream.close()

    # Extra requested outputs go to stderr so the CSV bytes stay canonical.
    if "heun_check" in scenario.outputs:
        if not 0.0 < scenario.params.k < 1.0:
            print("config error: heun_check requires 0 < k < 1", file=sys.stderr)
            return EXIT_CONFIG
        try:
            p_series = heun.flip_probability_heun(scenario.tau_max, scenario.params)
        except EllipspinError as exc:
            print(f"runtime failure in reduction cross-check: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        p_ode = float(traj.p_flip[-1])
        print(
            f"heun_check tau={_fmt(scenario.tau_max)}: ode={_fmt(p_ode)} "
            f"series={_fmt(p_series)} diff={_fmt(abs(p_ode - p_series))}",
            file=sys.stderr,
        )
    if "wigner" in scenario.outputs:
        try:
            u = sd.propagator(scenario.tau_max, scenario.params, tol=scenario.tol)
            angles = wigner.euler_angles(u)
            j = scenario.spin_j
            p_top = (
                wigner.transition_probability_j(j, j, j - 1.0, angles.theta)
                if j >= 1.0
                else wigner.transition_probability_j(j, j, -j, angles.theta)
                if j > 0.0
                else 0.0
            )
        except EllipspinError as exc:
            print(f"runtime failure in spin-J report: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        print(
            f"wigner tau={_fmt(scenario.tau_max)}: phi={_fmt(angles.phi)} "
            f"theta={_fmt(angles.theta)} psi={_fmt(angles.psi)} "
            f"p_top_transition={_fmt(p_top)}",
            file=sys.stderr,
        )
    return EXIT_OK


def _sweep_workers(n_tasks: int) -> int:
    env = os.environ.get("ELLIPSPIN_THREADS", "")
    try:
        cap = int(env) if env else (os.cpu_count() or 1)
    except ValueError:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def cmd_sweep(config_path: str, output: str | None) -> int:
    try:
        scenario = load_scenario(config_path, allow_grids=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    grid = [
        (k, d, h)
        for k in scenario.k_grid
        for d in scenario.delta_grid
        for h in scenario.h_grid
    ]
    if len(grid) > scenario.sweep_cap:
        print(
            f"config error: grid has {len(grid)} runs, cap is {scenario.sweep_cap}",
            file=sys.stderr,
        )
        return EXIT_CONFIG

    taus = np.linspace(0.0, scenario.tau_max, scenario.n_samples)

    def one(point):
        k, d, h = point
        params = sd.SimParams.from_detuning(h, d, k)
        traj = sd.evolve(scenario.initial, params, taus, tol=scenario.tol)
        return traj.p_flip

    try:
        with ThreadPoolExecutor(max_workers=_sweep_workers(len(grid))) as pool:
            all_pflip = list(pool.map(one, grid))
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    stream, owned = _open_output(output)
    try:
        stream.write("k,delta_over_omega,h_over_omega,tau,p_flip\n")
        for (k, d, h), pf in zip(grid, all_pflip):
            for tau, val in zip(taus, pf):
                stream.write(
                    ",".join(_fmt(x) for x in (k, d, h, tau, val)) + "\n"
                )
    finally:
        if owned:
            stream.close()
    return EXIT_OK


def cmd_verify(suite: str, tol: float) -> int:
    if suite not in ("all", *verify.SUITES):
        print(
            f"config error: unknown suite {suite!r}; choose from "
            f"{('all', *verify.SUITES)}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    try:
        results = verify.run_suite(suite, tol=tol)
    except EllipspinError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    failed = [r for r in results if not r.passed]
    for r in results:
        print(r.line())
    if failed:
        names = ", ".join(r.name for r in failed)
        print(f"FAILED checks: {names}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_elliptic_table(k: float, u_max: float, n: int, output: str | None) -> int:
    if not (0.0 <= k <= 1.0):
        print(f"config error: k must lie in [0, 1], got {k!r}", file=sys.stderr)
        return EXIT_CONFIG
    if n < 2:
        print(f"config error: need at least 2 rows, got {n!r}", file=sys.stderr)
        return EXIT_CONFIG
    if not (math.isfinite(u_max) and u_max > 0.0):
        print(f"config error: u_max must be positive, got {u_max!r}", file=sys.stderr)
        return EXIT_CONFIG
    stream, owned = _open_output(output)
    try:
        stream.write("u,sn,cn,dn,res_sncn,res_dnsn\n")
        for u in np.linspace(0.0, u_max, n):
            trip = jacobi(float(u), k)
            r1, r2 = jacobi_identity_residuals(trip, k)
            stream.write(
                ",".join(_fmt(x) for x in (u, trip.sn, trip.cn, trip.dn, r1, r2)) + "\n"
            )
    finally:
        if owned:
            stream.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellipspin",
        description="Spin dynamics in an elliptically modulated magnetic field.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate one scenario and emit a trajectory CSV")
    p_sim.add_argument("config")
    p_sim.add_argument("-o", "--output", default=None, help="CSV file (default stdout)")

    p_sweep = sub.add_parser("sweep", help="run a parameter grid and emit a flat CSV")
    p_sweep.add_argument("config")
    p_sweep.add_argument("-o", "--output", default=None, help="CSV file (default stdout)")

    p_ver = sub.add_parser("verify", help="run the verification suites")
    p_ver.add_argument("suite", nargs="?", default="all", help="invariants, heun, wigner or all")
    p_ver.add_argument("--tol", type=float, default=sd.DEFAULT_TOL, help="ODE tolerance for the checks")

    p_tab = sub.add_parser("elliptic-table", help="dump sn, cn, dn values and identity residuals")
    p_tab.add_argument("k", type=float)
    p_tab.add_argument("u_max", type=float)
    p_tab.add_argument("n", type=int)
    p_tab.add_argument("-o", "--output", default=None, help="CSV file (default stdout)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.output)
        if args.command == "sweep":
            return cmd_sweep(args.config, args.output)
        if args.command == "verify":
            if not args.tol > 0.0:
                print(f"config error: tol must be positive, got {args.tol!r}", file=sys.stderr)
                return EXIT_CONFIG
            return cmd_verify(args.suite, args.tol)
        if args.command == "elliptic-table":
            return cmd_elliptic_table(args.k, args.u_max, args.n, args.output)
    except BrokenPipeError:
        # Downstream consumer (head, less, ...) closed the stream; point
        # stdout at devnull so interpreter shutdown stays silent.
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
