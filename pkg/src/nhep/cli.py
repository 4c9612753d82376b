"""Command-line interface.

Exit codes: 0 success, 1 computational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, cxla, dynamics, entangle, perturb, spectrum
from .model import ModelSpec, SpinMechParams, build_collapse_ops, build_effective_h, build_passive_h, build_rabi_h


class UsageError(Exception):
    pass


def _fmt(x: float, precision: int) -> str:
    x = float(x)
    if np.isnan(x):
        return "nan"
    return f"{x:.{precision}g}"


def _csv(header: list[str], rows, precision: int) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v, precision) for v in row))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _log(args, msg: str) -> None:
    if getattr(args, "verbose", False):
        print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# argument groups
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--precision", type=int, default=9, help="significant digits, 6 to 17")
    p.add_argument("--seed", type=int, default=0, help="random seed (reserved; outputs are deterministic)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--verbose", action="store_true")


def _add_model(p: argparse.ArgumentParser, omega: bool = True) -> None:
    p.add_argument("--interaction", choices=["ising", "dipolar"], default="ising")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--xi", type=float, default=0.0, help="Ising coupling")
    p.add_argument("--g", type=float, default=0.0, help="dipolar coupling")
    p.add_argument("--dipolar-variant", choices=["physical", "as-printed"], default="physical")
    if omega:
        p.add_argument("--omega", type=float, default=0.0)


def _add_range(p: argparse.ArgumentParser, steps: int = 600) -> None:
    p.add_argument("--omega-min", type=float, default=0.0)
    p.add_argument("--omega-max", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=steps)


def _add_time(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tmax", type=float, default=40.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--sample-every", type=int, default=10)
    p.add_argument("--method", choices=["rk4-fixed", "rk45-adaptive"], default="rk4-fixed")


def _spec(args, omega: float | None = None) -> ModelSpec:
    try:
        return ModelSpec(
            gamma=args.gamma,
            omega=args.omega if omega is None else omega,
            interaction=args.interaction,
            xi=args.xi,
            g=args.g,
            dipolar_variant=args.dipolar_variant,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _cfg(args) -> dynamics.IntegratorConfig:
    try:
        return dynamics.IntegratorConfig(args.method, args.dt, args.tmax, args.sample_every)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _jobs(args) -> int:
    env = os.environ.get("NHEP_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"NHEP_JOBS must be an integer, got {env!r}") from exc
    return max(1, args.jobs)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    if args.steps < 2 or not args.omega_max > args.omega_min:
        raise UsageError("need --steps >= 2 and --omega-max > --omega-min")
    sw = spectrum.sweep_spectrum(_spec(args, 0.0), (args.omega_min, args.omega_max), args.steps, _jobs(args))
    header = ["omega"] + [f"re_l{k}" for k in range(1, 5)] + [f"im_l{k}" for k in range(1, 5)] + ["phase"]
    rows = [[w, *v.real, *v.imag, ph.value] for w, v, ph in zip(sw.omegas, sw.values, sw.phases)]
    _emit(_csv(header, rows, args.precision), args.out)
    return 0


def cmd_find_ep(args) -> int:
    if args.coarse_steps < 3 or not args.omega_max > args.omega_min:
        raise UsageError("need --coarse-steps >= 3 and --omega-max > --omega-min")
    spec = _spec(args, 0.0)
    eps = spectrum.find_eps(spec, (args.omega_min, args.omega_max), args.coarse_steps)
    model = spec.to_dict()
    model.pop("omega")
    report = {
        "model": model,
        "eps": [
            {
                "omega": float(_fmt(e.omega_star, args.precision)),
                "order": e.order,
                "phase_below": e.phase_below.value,
                "phase_above": e.phase_above.value,
            }
            for e in eps
        ],
    }
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return 0


def _evolve(args) -> dynamics.Trajectory:
    psi0 = dynamics.initial_state(args.init)
    cfg = _cfg(args)
    if args.engine in ("ode", "eigen"):
        h = build_passive_h(_spec(args))
        if args.engine == "ode":
            return dynamics.evolve_density(h, psi0, cfg)
        return dynamics.evolve_pure_eigen(h, psi0, cfg.times)
    if args.interaction != "ising":
        raise UsageError("Lindblad engines model the Ising coupling only")
    p = SpinMechParams(delta_m=args.delta_m, g_eff=args.g_eff if args.g_eff is not None else np.sqrt(max(args.xi, 0.0) * args.delta_m),
                       kappa=args.kappa, gamma_nv=args.gamma, n_trunc=args.n_trunc)
    if args.engine == "lindblad-full":
        h = build_rabi_h(p, args.omega)
        rho0 = dynamics.with_vacuum(dynamics.projector(psi0), p.n_trunc)
        return dynamics.evolve_lindblad(h, build_collapse_ops(p, "full"), rho0, cfg, env_dim=p.n_trunc)
    h = build_effective_h(args.xi, args.omega)
    return dynamics.evolve_lindblad(h, build_collapse_ops(p, "effective"), psi0, cfg)


def _add_evolve(p: argparse.ArgumentParser) -> None:
    _add_model(p)
    _add_time(p)
    p.add_argument("--init", choices=["aa", "bb", "ab", "ba", "bell1"], default="aa")
    p.add_argument("--engine", choices=["ode", "eigen", "lindblad-full", "lindblad-eff"], default="ode")
    p.add_argument("--n-trunc", type=int, default=None)
    p.add_argument("--delta-m", type=float, default=None)
    p.add_argument("--g-eff", type=float, default=None)
    p.add_argument("--kappa", type=float, default=1.0)


def _check_engine_flags(args) -> None:
    if args.engine != "lindblad-full":
        given = [f for f in ("n_trunc", "delta_m", "g_eff") if getattr(args, f) is not None]
        if given:
            raise UsageError(f"--{given[0].replace('_', '-')} requires --engine lindblad-full")
    else:
        args.n_trunc = 10 if args.n_trunc is None else args.n_trunc
        args.delta_m = 40.0 if args.delta_m is None else args.delta_m
        if args.n_trunc < 2:
            raise UsageError("--n-trunc must be >= 2")
    if args.engine == "lindblad-eff":
        args.delta_m = 40.0


def cmd_evolve(args) -> int:
    _check_engine_flags(args)
    traj = _evolve(args)
    _emit(traj.to_csv(args.precision), args.out)
    return 0


def cmd_classify(args) -> int:
    _check_engine_flags(args)
    traj = _evolve(args)
    tag, fit = analysis.classify_dynamics(traj.times, traj.concurrence)

    def num(x):
        return None if np.isnan(x) else float(_fmt(x, args.precision))

    report = {"type": tag.value, "gamma_up": num(fit.gamma_up), "gamma_low": num(fit.gamma_low),
              "c_inf": num(fit.c_inf)}
    _emit(json.dumps(report) + "\n", args.out)
    return 0


def cmd_perturb_compare(args) -> int:
    eta2 = 16 * args.omega**2 - args.gamma**2
    if eta2 <= 0:
        raise UsageError("analytic path defined in PTS only (need 4 omega > gamma)")
    cfg = _cfg(args)
    h = build_passive_h(ModelSpec(gamma=args.gamma, omega=args.omega, xi=args.xi))
    num = dynamics.evolve_density(h, dynamics.initial_state("aa"), cfg)
    ana = perturb.analytic_evolution(args.omega, args.gamma, args.xi, times=num.times, variant=args.variant)
    err = np.abs(num.concurrence - ana.concurrence)
    rows = zip(num.times, num.concurrence, ana.concurrence, err)
    _emit(_csv(["t", "c_numeric", "c_analytic", "abs_err"], rows, args.precision), args.out)
    print(f"sup_abs_err={_fmt(err.max(), args.precision)}", file=sys.stderr)
    return 0


def cmd_lindblad_compare(args) -> int:
    if args.n_trunc < 2:
        raise UsageError("--n-trunc must be >= 2")
    g_eff = args.g_eff if args.g_eff is not None else np.sqrt(max(args.xi, 0.0) * args.delta_m)
    p = SpinMechParams(delta_m=args.delta_m, g_eff=g_eff, kappa=args.kappa, gamma_nv=args.gamma,
                       n_trunc=args.n_trunc)
    cfg = _cfg(args)
    psi0 = dynamics.initial_state(args.init)
    full_ops = build_collapse_ops(p, "full")
    eff_ops = build_collapse_ops(p, "effective")
    h_full = build_rabi_h(p, args.omega)
    h_eff = build_effective_h(p.xi_equiv, args.omega)
    rho_full = dynamics.with_vacuum(dynamics.projector(psi0), p.n_trunc)
    _log(args, f"full model dimension {h_full.shape[0]}")
    if args.no_jumps:
        # conditional dynamics: drop the recycling terms, keep the anti-Hermitian loss
        nh_full = h_full - 0.5j * sum(l.conj().T @ l for l in full_ops)
        nh_eff = h_eff - 0.5j * sum(l.conj().T @ l for l in eff_ops)
        full = dynamics.evolve_density(nh_full, rho_full, cfg, env_dim=p.n_trunc)
        eff = dynamics.evolve_density(nh_eff, psi0, cfg)
    else:
        full = dynamics.evolve_lindblad(h_full, full_ops, rho_full, cfg, env_dim=p.n_trunc)
        eff = dynamics.evolve_lindblad(h_eff, eff_ops, psi0, cfg)
    err = np.abs(full.concurrence - eff.concurrence)
    rows = zip(full.times, full.concurrence, eff.concurrence, err)
    _emit(_csv(["t", "c_full", "c_eff", "abs_err"], rows, args.precision), args.out)
    print(f"sup_abs_err={_fmt(err.max(), args.precision)}", file=sys.stderr)
    return 0


def cmd_nodrive(args) -> int:
    if args.scan:
        lo, hi = args.scan
        if not hi > lo or args.scan_step <= 0:
            raise UsageError("--scan needs LO < HI and a positive --scan-step")
        xs = np.arange(lo, hi + 0.5 * args.scan_step, args.scan_step)
        rows = []
        for x in xs:
            ep, em = entangle.nodrive_eigen_concurrence(x, args.gamma)
            gap = entangle.energy_gap(x, args.gamma)
            rows.append([x, ep, em, gap.real, gap.imag])
        _emit(_csv(["xi", "eps_plus", "eps_minus", "re_gap", "im_gap"], rows, args.precision), args.out)
        return 0
    h = build_passive_h(ModelSpec(gamma=args.gamma, omega=0.0, xi=args.xi))
    traj = dynamics.evolve_density(h, dynamics.initial_state("bb"), _cfg(args))
    rows = zip(traj.times, traj.populations[:, 3], traj.concurrence)
    _emit(_csv(["t", "p_bb", "c"], rows, args.precision), args.out)
    return 0


def cmd_eigenstate_concurrence(args) -> int:
    if args.steps < 2 or not args.omega_max > args.omega_min:
        raise UsageError("need --steps >= 2 and --omega-max > --omega-min")
    sw = spectrum.sweep_spectrum(_spec(args, 0.0), (args.omega_min, args.omega_max), args.steps, _jobs(args))
    conc = entangle.eigenstate_concurrence_sweep(sw)
    header = ["omega"] + [f"c_l{k}" for k in range(1, 5)]
    rows = [[w, *c] for w, c in zip(sw.omegas, conc)]
    _emit(_csv(header, rows, args.precision), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nhep", description="Two coupled lossy qubits near exceptional points.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalue sweep over the drive")
    _add_model(p, omega=False)
    _add_range(p)
    _add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("find-ep", help="locate exceptional points")
    _add_model(p, omega=False)
    p.add_argument("--omega-min", type=float, default=0.01)
    p.add_argument("--omega-max", type=float, default=2.0)
    p.add_argument("--coarse-steps", type=int, default=400)
    _add_common(p)
    p.set_defaults(func=cmd_find_ep)

    p = sub.add_parser("evolve", help="concurrence and population dynamics")
    _add_evolve(p)
    _add_common(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("classify", help="dynamics type I, II or III")
    _add_evolve(p)
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("perturb-compare", help="first-order theory against numerics")
    p.add_argument("--omega", type=float, default=0.3)
    p.add_argument("--xi", type=float, default=0.0006)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--variant", choices=["consistent", "quoted"], default="consistent")
    _add_time(p)
    _add_common(p)
    p.set_defaults(func=cmd_perturb_compare)

    p = sub.add_parser("lindblad-compare", help="spin-phonon model against the effective Ising model")
    p.add_argument("--omega", type=float, default=0.3)
    p.add_argument("--xi", type=float, default=0.0006)
    p.add_argument("--gamma", type=float, default=1.0, help="spin loss rate")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--delta-m", type=float, default=40.0)
    p.add_argument("--g-eff", type=float, default=None, help="default sqrt(xi * delta_m)")
    p.add_argument("--n-trunc", type=int, default=10)
    p.add_argument("--init", choices=["aa", "bb", "ab", "ba", "bell1"], default="aa")
    p.add_argument("--no-jumps", action="store_true", help="compare the no-jump conditional dynamics")
    _add_time(p)
    _add_common(p)
    p.set_defaults(func=cmd_lindblad_compare)

    p = sub.add_parser("nodrive", help="undriven dynamics or eigenstate scans")
    p.add_argument("--xi", type=float, default=-0.5)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--scan", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--scan-step", type=float, default=1e-3)
    _add_time(p)
    _add_common(p)
    p.set_defaults(func=cmd_nodrive)

    p = sub.add_parser("eigenstate-concurrence", help="concurrence of each eigenstate over the drive")
    _add_model(p, omega=False)
    _add_range(p)
    _add_common(p)
    p.set_defaults(func=cmd_eigenstate_concurrence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 6 <= args.precision <= 17:
        parser.error("--precision must be between 6 and 17")
    np.random.seed(args.seed)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (cxla.SolverError, dynamics.EPDegenerateError, dynamics.IntegrationError,
            perturb.EPConstructionError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
