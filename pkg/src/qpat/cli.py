"""Command-line front end.

Subcommands: synthesize (phantom data archive), invert (run one algorithm
against an archive), experiment (one of the five numbered studies over the
noise triple), selftest (fast operator-consistency suite).  Exit codes:
0 success, 1 usage or configuration error, 2 numerical failure, 3 I/O or
format error.

Heavy numeric imports happen inside the command bodies, after --threads
has been translated into the usual BLAS environment variables; importing
this module stays cheap.  All output files are deterministic for a fixed
configuration and seed: no timestamps, no machine identifiers.
"""

import argparse
import os
import sys

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS",
                "VECLIB_MAXIMUM_THREADS")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _common_flags(parser, kappa=True):
    parser.add_argument("--config", metavar="PATH",
                        help="key = value configuration file")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--seed", type=int, metavar="N")
    if kappa:
        parser.add_argument("--kappa", type=float, metavar="X",
                            help="noise level in percent")
    parser.add_argument("--grid", type=int, metavar="N",
                        help="nodes per side, odd")
    parser.add_argument("--threads", type=int, metavar="N",
                        help="thread count hint for the BLAS layer")


def build_parser():
    parser = _Parser(prog="qpat", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="write a phantom data archive")
    _common_flags(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("invert", help="reconstruct from a data archive")
    p.add_argument("archive", help="path to a data archive")
    _common_flags(p)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("experiment", help="run one numbered study")
    p.add_argument("experiment", type=int, help="study number, 1 to 5")
    _common_flags(p, kappa=False)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("selftest",
                       help="fast adjoint/gradient/convergence checks")
    p.add_argument("--threads", type=int, metavar="N")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    threads = getattr(args, "threads", None)
    if threads is not None:
        if threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return 1
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)

    from .archive import ArchiveFormatError
    from .config import ConfigError
    from .linearized import DivergenceError
    try:
        return args.func(args)
    except (_UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ArchiveFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def _load_config(args, **forced):
    """Config from file or defaults, then per-flag overrides."""
    from .config import RunConfig, load_config
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "kappa", None) is not None:
        cfg.kappa = args.kappa
    if getattr(args, "grid", None) is not None:
        cfg.grid_size = args.grid
    if args.out is not None:
        cfg.out_dir = args.out
    for key, value in forced.items():
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


def _truth_fields(cfg, grid):
    from .config import ConfigError
    from .experiments import phantom_disks, phantom_square_inclusion
    if cfg.phantom == "square-inclusion":
        return phantom_square_inclusion().sample(grid)
    if cfg.phantom == "disks":
        return phantom_disks().sample(grid)
    raise ConfigError(f"unknown phantom {cfg.phantom!r}")


def cmd_synthesize(args) -> int:
    cfg = _load_config(args)
    import numpy as np

    from .archive import DatumHeader, write_datum, write_field, \
        write_key_values
    from .config import save_config
    from .experiments import NoiseSpec, add_noise
    from .forward import default_illuminations, stacked_forward
    from .grid import build_grid
    from .wave import build_time_grid

    grid = build_grid(cfg.grid_size)
    truth = _truth_fields(cfg, grid)
    # the archive must stay CFL-safe for any admissible iterate later
    max_speed = max(float(np.max(truth[0])), cfg.c_hi)
    tg = build_time_grid(cfg.final_time, grid.h, max_speed, cfg.cfl)
    illuminations = default_illuminations(grid, cfg.illumination_count)

    clean = stacked_forward(truth[0], truth[1], illuminations, grid, tg)
    data = add_noise(clean, NoiseSpec(cfg.kappa, cfg.seed))

    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    header = DatumHeader(grid.n, grid.h, tg.final_time, tg.n_steps,
                         len(illuminations), grid.n_boundary)
    write_datum(os.path.join(out, "data.qpat1"), data, header)
    write_key_values(os.path.join(out, "data.meta"),
                     {"phantom": cfg.phantom, "kappa": cfg.kappa,
                      "seed": cfg.seed,
                      "illumination_count": cfg.illumination_count,
                      "cfl": cfg.cfl},
                     comment="synthesis metadata for the adjacent archive")
    write_field(os.path.join(out, "truth_speed.field"), truth[0])
    write_field(os.path.join(out, "truth_absorption.field"), truth[1])
    save_config(os.path.join(out, "config.txt"), cfg)
    print(f"wrote {out}/data.qpat1: {len(illuminations)} illuminations, "
          f"{tg.n_steps + 1} levels, {grid.n_boundary} boundary nodes")
    return 0


def _write_field_set(out, name, field):
    from .archive import write_field, write_pgm
    write_field(os.path.join(out, f"{name}.field"), field)
    write_pgm(os.path.join(out, f"{name}.pgm"), field)


def cmd_invert(args) -> int:
    cfg = _load_config(args)
    import numpy as np

    from .archive import read_datum, read_field, write_convergence_log, \
        write_key_values, write_residual_log
    from .config import ConfigError
    from .forward import default_illuminations
    from .grid import build_grid
    from .wave import TimeGrid, check_cfl

    data, header = read_datum(args.archive)
    if header.grid_size != cfg.grid_size:
        raise ConfigError(
            f"archive grid {header.grid_size} does not match configured "
            f"grid {cfg.grid_size}")
    if header.final_time != cfg.final_time:
        raise ConfigError("archive final time does not match configuration")
    if header.n_illuminations != cfg.illumination_count:
        raise ConfigError("archive illumination count does not match "
                          "configuration")
    grid = build_grid(cfg.grid_size)
    tg = TimeGrid(header.final_time, header.n_steps)
    illuminations = default_illuminations(grid, cfg.illumination_count)

    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    report = {"algorithm": cfg.algorithm}

    if cfg.algorithm == "lm":
        from .nonlinear import Bounds, LmConfig, lm_solve
        check_cfl(tg, grid.h, cfg.c_hi, cfg.cfl)
        bounds = Bounds(cfg.c_lo, cfg.c_hi, cfg.sigma_lo, cfg.sigma_hi)
        lm_cfg = LmConfig(
            c_init=cfg.c_init, sigma_init=cfg.sigma_init,
            outer_cap=cfg.outer_cap, cg_tol=cfg.cg_tol, cg_cap=cfg.cg_cap,
            damping=cfg.damping or None, freeze_speed=cfg.freeze_speed,
            freeze_absorption=cfg.freeze_absorption)
        result = lm_solve(data, bounds, lm_cfg, illuminations, grid, tg)
        speed, absorb = result.sound_speed, result.absorption
        write_convergence_log(os.path.join(out, "convergence.log"),
                              result.log)
        report["stop"] = result.stop
        report["damping"] = result.damping
        report["final_objective"] = result.log[-1].objective_value
    else:
        from .linearized import (build_background, estimate_operator_norm,
                                 landweber_solve)
        check_cfl(tg, grid.h, cfg.c_init, cfg.cfl)
        bg = build_background(cfg.c_init, cfg.sigma_init, illuminations,
                              grid, tg)
        if cfg.step_size:
            step = cfg.step_size
        else:
            sigma_hat, _ = estimate_operator_norm(bg)
            step = 0.9 / sigma_hat ** 2
        delta, info = landweber_solve(
            bg, data, step, cfg.landweber_iters,
            target_relative_residual=cfg.target_residual or None)
        speed = cfg.c_init + delta[0]
        absorb = cfg.sigma_init + delta[1]
        write_residual_log(os.path.join(out, "convergence.log"),
                           info["relative_residuals"])
        report["stop"] = info["stop"]
        report["step_size"] = step
        report["final_relative_residual"] = info["relative_residuals"][-1]

    _write_field_set(out, "speed", speed)
    _write_field_set(out, "absorption", absorb)

    archive_dir = os.path.dirname(os.path.abspath(args.archive))
    from .experiments import max_rel_error
    for name, rec in (("speed", speed), ("absorption", absorb)):
        truth_path = os.path.join(archive_dir, f"truth_{name}.field")
        if os.path.exists(truth_path):
            report[f"{name}_error"] = max_rel_error(rec,
                                                    read_field(truth_path))
    write_key_values(os.path.join(out, "report.txt"), report,
                     comment="reconstruction report")
    print(f"wrote reconstruction to {out} (stop: {report['stop']})")
    return 0


def _experiment_overrides(args):
    """Iteration-cap overrides, honored only when listed in the file."""
    if not args.config:
        return {}
    from .archive import read_key_values
    from .config import ConfigError
    raw = read_key_values(args.config)
    overrides = {}
    for key in ("outer_cap", "cg_cap", "landweber_iters"):
        if key in raw:
            try:
                value = int(raw[key])
            except ValueError:
                raise ConfigError(f"{args.config}: {key} expects an "
                                  f"integer") from None
            if value < 1:
                raise ConfigError(f"{args.config}: {key} must be positive")
            overrides[key] = value
    return overrides


def cmd_experiment(args) -> int:
    from .archive import write_field, write_key_values, \
        write_convergence_log, write_residual_log
    from .experiments import DEFAULT_GRID_SIZE, run_experiment

    if args.experiment not in (1, 2, 3, 4, 5):
        raise _UsageError(f"experiment must be 1..5, got {args.experiment}")
    overrides = _experiment_overrides(args)
    grid_size = args.grid or DEFAULT_GRID_SIZE
    seed = args.seed or 0
    out = args.out or f"experiment-{args.experiment}"
    os.makedirs(out, exist_ok=True)

    def progress(kappa, entry):
        print(f"kappa={kappa:g} {entry}", flush=True)

    report = run_experiment(args.experiment, grid_size=grid_size, seed=seed,
                            callback=progress, overrides=overrides)

    write_field(os.path.join(out, "truth_speed.field"), report.truth_speed)
    write_field(os.path.join(out, "truth_absorption.field"),
                report.truth_absorption)
    lines = [f"# study {report.experiment} summary",
             f"grid_size = {report.grid_size}",
             f"seed = {report.seed}",
             f"final_time = {report.final_time:g}"]
    for note in report.notes:
        lines.append(f"# note: {note}")
    lines.append("# kappa speed_error absorption_error stop converged")
    for run in report.runs:
        sub = os.path.join(out, f"kappa-{run.kappa:g}")
        os.makedirs(sub, exist_ok=True)
        _write_field_set(sub, "speed", run.sound_speed)
        _write_field_set(sub, "absorption", run.absorption)
        log_path = os.path.join(sub, "convergence.log")
        if report.experiment == 3:
            write_residual_log(log_path, run.log)
        else:
            write_convergence_log(log_path, run.log)
        se = "-" if run.speed_error is None else repr(run.speed_error)
        ae = "-" if run.absorption_error is None else \
            repr(run.absorption_error)
        flag = "yes" if run.converged else "no"
        lines.append(f"{run.kappa:g} {se} {ae} \"{run.stop}\" {flag}")
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"study {report.experiment} finished; summary in {out}/summary.txt")
    return 0


def cmd_selftest(args) -> int:
    import numpy as np

    failures = []

    def check(label, ok, detail):
        state = "pass" if ok else "FAIL"
        print(f"{state}: {label} ({detail})", flush=True)
        if not ok:
            failures.append(label)

    from .experiments import NoiseSpec, add_noise, perturbation_pair
    from .forward import data_dot, data_norm, default_illuminations, \
        stacked_forward
    from .grid import build_grid
    from .linearized import (apply_adjoint, apply_jacobian,
                             build_background, estimate_operator_norm,
                             landweber_solve, pair_dot, pair_norm)
    from .wave import build_time_grid

    grid = build_grid(17)
    # headroom above the background speed keeps the perturbed solves stable
    tg = build_time_grid(4.0, grid.h, 1.05)
    illuminations = default_illuminations(grid, 4)
    bg = build_background(1.0, 0.1, illuminations, grid, tg)
    rng = np.random.Generator(np.random.Philox(1234))

    delta = rng.standard_normal((2, grid.n, grid.n))
    probe = rng.standard_normal(bg.datum.shape)
    forward_side = data_dot(apply_jacobian(bg, delta), probe, tg, grid.h)
    adjoint_side = pair_dot(delta, apply_adjoint(bg, probe), bg.mass)
    scale = abs(forward_side) + abs(adjoint_side)
    mismatch = abs(forward_side - adjoint_side) / scale
    check("adjoint pairing", mismatch < 1e-12, f"mismatch {mismatch:.2e}")

    direction = perturbation_pair(grid)
    base = bg.datum
    jd = apply_jacobian(bg, direction)
    remainders = []
    for eps in (1e-2, 1e-3):
        bumped = stacked_forward(1.0 + eps * direction[0],
                                 0.1 + eps * direction[1], illuminations,
                                 grid, tg)
        remainders.append(data_norm(bumped - base - eps * jd, tg, grid.h))
    ratio = remainders[0] / remainders[1]
    check("linearization remainder", 50.0 <= ratio <= 200.0,
          f"ratio {ratio:.1f}")

    from .nonlinear import (Bounds, latent_from_physical,
                            latent_jacobian_scaling, objective, to_physical)
    bounds = Bounds(0.8, 1.3, 0.05, 0.2)
    latent = latent_from_physical(np.stack([np.full((grid.n,) * 2, 1.0),
                                            np.full((grid.n,) * 2, 0.1)]),
                                  bounds)
    reference = stacked_forward(1.02, 0.11, illuminations, grid, tg)
    residual = bg.datum - reference
    gradient = latent_jacobian_scaling(latent, bounds) * \
        apply_adjoint(bg, residual)
    dir_latent = rng.standard_normal((2, grid.n, grid.n))
    eps = 1e-4
    values = []
    for sign in (1.0, -1.0):
        pair = to_physical(latent + sign * eps * dir_latent, bounds)
        values.append(objective(pair[0], pair[1], reference, illuminations,
                                grid, tg))
    fd = (values[0] - values[1]) / (2.0 * eps)
    directional = pair_dot(gradient, dir_latent, bg.mass)
    grad_err = abs(fd - directional) / max(abs(fd), abs(directional))
    check("latent gradient", grad_err < 1e-3, f"relative error {grad_err:.2e}")

    target = apply_jacobian(bg, 0.5 * direction)
    sigma_hat, _ = estimate_operator_norm(bg, 10)
    _, info = landweber_solve(bg, target, 0.9 / sigma_hat ** 2, 30)
    res = info["residuals"]
    monotone = all(b <= a * (1 + 1e-12) for a, b in zip(res, res[1:]))
    check("landweber residual monotone", monotone and res[-1] < res[0],
          f"{res[0]:.3e} -> {res[-1]:.3e} over {len(res) - 1} steps")

    draws = add_noise(np.ones(200000), NoiseSpec(1.0, 99))
    u = (draws - 1.0) * 100.0
    mean_ok = abs(u.mean()) < 3.0 / np.sqrt(u.size)
    var_ok = abs(u.var() - 1.0) < 0.02
    check("noise statistics", mean_ok and var_ok,
          f"mean {u.mean():+.2e} var {u.var():.4f}")

    if failures:
        print(f"{len(failures)} check(s) failed", file=sys.stderr)
        return 2
    print("all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
