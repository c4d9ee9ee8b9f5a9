"""Command-line entry point tying the computation routes together.

Commands:

* ``derive``    -- print the symbolic derivation transcript
* ``variances`` -- write the variance CSV (closed-form and ODE columns)
* ``pde``       -- write characteristic-function surfaces and a summary
* ``oracle``    -- run the truncated-Fock oracle and write its CSV
* ``compare``   -- run every route at shared parameters and cross-check

Configuration is a flat ``section.key = value`` text file with CLI-flag
overrides; unknown keys are rejected.  Exit codes: 0 success, 1 tolerance
failure, 2 configuration error, 3 internal error.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
import traceback
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import charfn, fock, gaussian
from .errors import ConfigError
from .ito import derivation_report

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


@dataclass(frozen=True)
class RunConfig:
    """All run parameters, flat; sections map to prefixed keys."""

    alpha: float = 1.0
    t_max: float = 1.0
    grid_step: float = 0.01
    out: str = "."
    solver_dt: float = 1e-4
    pde_t: float = 0.5
    pde_dt: float = 4e-4
    pde_l_max: float = 8.0
    pde_dl: float = 0.02
    pde_k_max: float = 8.0
    pde_dk: float = 0.02
    oracle_dt: float = 1e-3
    oracle_t_max: float = 0.5
    oracle_d_at: int = 30
    oracle_d_anc: int = 3
    oracle_n_traj: int = 400
    oracle_seed: int = 12345
    oracle_phase: str = "x"
    tol_ode_rel: float = 1e-8
    tol_pde_abs: float = 5e-4
    tol_moc_abs: float = 1e-10
    tol_residual: float = 1e-6
    tol_oracle_rel: float = 0.02
    tol_oracle_sigma: float = 5.0

    def validate(self) -> None:
        positive = ("alpha", "t_max", "grid_step", "solver_dt", "pde_t",
                    "pde_dt", "pde_l_max", "pde_dl", "pde_k_max", "pde_dk",
                    "oracle_dt", "oracle_t_max")
        for name in positive:
            if getattr(self, name) < 0 or (name != "alpha"
                                           and getattr(self, name) == 0):
                raise ConfigError(f"parameter {name} must be positive")
        if self.oracle_phase not in ("x", "p"):
            raise ConfigError("oracle.phase must be 'x' or 'p'")

    def scaled_tolerances(self, scale: float) -> "RunConfig":
        updates = {f.name: getattr(self, f.name) * scale
                   for f in fields(self) if f.name.startswith("tol_")}
        return replace(self, **updates)


# config-file key -> (attribute, parser)
_CONFIG_KEYS = {
    "alpha": ("alpha", float),
    "t_max": ("t_max", float),
    "grid_step": ("grid_step", float),
    "out": ("out", str),
    "solver.dt": ("solver_dt", float),
    "pde.t": ("pde_t", float),
    "pde.dt": ("pde_dt", float),
    "pde.l_max": ("pde_l_max", float),
    "pde.dl": ("pde_dl", float),
    "pde.k_max": ("pde_k_max", float),
    "pde.dk": ("pde_dk", float),
    "oracle.dt": ("oracle_dt", float),
    "oracle.t_max": ("oracle_t_max", float),
    "oracle.d_at": ("oracle_d_at", int),
    "oracle.d_anc": ("oracle_d_anc", int),
    "oracle.n_traj": ("oracle_n_traj", int),
    "oracle.seed": ("oracle_seed", int),
    "oracle.phase": ("oracle_phase", str),
    "tolerance.ode_rel": ("tol_ode_rel", float),
    "tolerance.pde_abs": ("tol_pde_abs", float),
    "tolerance.moc_abs": ("tol_moc_abs", float),
    "tolerance.residual": ("tol_residual", float),
    "tolerance.oracle_rel": ("tol_oracle_rel", float),
    "tolerance.oracle_sigma": ("tol_oracle_sigma", float),
}


def parse_config_file(path: str | Path) -> dict[str, object]:
    """Parse a flat ``section.key = value`` file; unknown keys are rejected."""
    updates: dict[str, object] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        attr, cast = _CONFIG_KEYS[key]
        try:
            updates[attr] = cast(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return updates


def load_config(args: argparse.Namespace) -> RunConfig:
    updates: dict[str, object] = {}
    if args.config:
        updates.update(parse_config_file(args.config))
    if args.alpha is not None:
        updates["alpha"] = args.alpha
    if args.t_max is not None:
        updates["t_max"] = args.t_max
    if args.dt is not None:
        updates["solver_dt"] = args.dt
    if args.seed is not None:
        updates["oracle_seed"] = args.seed
    if args.out is not None:
        updates["out"] = args.out
    cfg = RunConfig(**updates)  # type: ignore[arg-type]
    if args.tolerance_scale is not None:
        if args.tolerance_scale <= 0:
            raise ConfigError("--tolerance-scale must be positive")
        cfg = cfg.scaled_tolerances(args.tolerance_scale)
    cfg.validate()
    return cfg


def _fmt(value: float) -> str:
    if value == 0.0:
        value = 0.0  # normalize -0.0
    return f"{value:.12g}"


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_derive(cfg: RunConfig) -> int:
    report = derivation_report()
    out_dir = Path(cfg.out)
    if cfg.out != "-":
        _write_text(out_dir / "derivation.txt", report)
    sys.stdout.write(report)
    return EXIT_OK


def _time_grid(cfg: RunConfig) -> np.ndarray:
    n = round(cfg.t_max / cfg.grid_step)
    if abs(n * cfg.grid_step - cfg.t_max) > 1e-9 * max(1.0, cfg.t_max):
        raise ConfigError("grid_step must divide t_max")
    return np.arange(n + 1) * cfg.grid_step


def variances_csv(cfg: RunConfig) -> str:
    """Shared schema columns from the closed form plus ode_* columns."""
    times = _time_grid(cfg)
    ode = gaussian.build_moment_odes(cfg.alpha)
    traj = gaussian.integrate_covariance(ode, cfg.t_max, cfg.solver_dt)
    stride = round(cfg.grid_step / cfg.solver_dt)
    if abs(stride * cfg.solver_dt - cfg.grid_step) > 1e-9 * cfg.grid_step:
        raise ConfigError("solver.dt must divide grid_step")
    ode_cols = ("var_p_at", "cov_pat_xph", "var_x_ph_norm", "var_x_at",
                "cov_xat_pph", "var_p_ph_norm")
    header = ",".join(gaussian.CSV_COLUMNS + tuple(f"ode_{c}" for c in ode_cols))
    lines = [header]
    for i, t in enumerate(times):
        row = gaussian.csv_row_values(cfg.alpha, float(t))
        snap = traj.snapshot(i * stride)
        tval = float(t)
        norm = tval if tval > 0 else 1.0
        ode_vals = {
            "var_p_at": snap.entry("p_at", "p_at"),
            "cov_pat_xph": snap.entry("p_at", "X_ph"),
            "var_x_ph_norm": snap.entry("X_ph", "X_ph") / norm
            if tval > 0 else 0.5,
            "var_x_at": snap.entry("x_at", "x_at"),
            "cov_xat_pph": snap.entry("x_at", "P_ph"),
            "var_p_ph_norm": snap.entry("P_ph", "P_ph") / norm
            if tval > 0 else 0.5,
        }
        cells = [_fmt(row[c]) for c in gaussian.CSV_COLUMNS]
        cells += [_fmt(ode_vals[c]) for c in ode_cols]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_variances(cfg: RunConfig) -> int:
    _write_text(Path(cfg.out) / "variances.csv", variances_csv(cfg))
    return EXIT_OK


def pde_outputs(cfg: RunConfig) -> tuple[dict[str, str], str, float, float, float]:
    """Surface CSVs plus a deterministic summary; returns worst errors too."""
    grid = charfn.GridSpec(l_max=cfg.pde_l_max, dl=cfg.pde_dl,
                           k_max=cfg.pde_k_max, dk=cfg.pde_dk)
    surfaces: dict[str, str] = {}
    fd_worst = 0.0
    summary = [f"pde summary: alpha={_fmt(cfg.alpha)} t={_fmt(cfg.pde_t)}"]
    for family in (charfn.FAMILY_F, charfn.FAMILY_G):
        surf = charfn.fd_solve(family, cfg.alpha, grid, cfg.pde_t, cfg.pde_dt)
        ref = charfn.closed_form_surface(family, cfg.alpha, cfg.pde_t, grid)
        err = float(np.abs(surf.values - ref.values).max())
        fd_worst = max(fd_worst, err)
        buf = io.StringIO()
        surf.to_csv(buf)
        surfaces[f"surface_{family}.csv"] = buf.getvalue()
        summary.append(f"fd max abs error {family}: {err:.6e}")
    moc_worst = 0.0
    res_worst = 0.0
    probe = [-2.0, -0.5, 0.0, 1.0, 2.5]
    for family in (charfn.FAMILY_F, charfn.FAMILY_G):
        for k in probe:
            for l in probe:
                m = charfn.moc_solve(family, cfg.alpha, cfg.pde_t, k, l)
                c = charfn.closed_form_char(family, cfg.alpha, cfg.pde_t, k, l)
                moc_worst = max(moc_worst, abs(m - c))
                res = charfn.pde_residual(
                    family, cfg.alpha,
                    lambda tt, kk, ll, fam=family: charfn.closed_form_char(
                        fam, cfg.alpha, tt, kk, ll),
                    cfg.pde_t, k, l)
                res_worst = max(res_worst, abs(res))
    summary.append(f"moc max abs error: {moc_worst:.6e}")
    summary.append(f"closed-form residual max: {res_worst:.6e}")
    return surfaces, "\n".join(summary) + "\n", fd_worst, moc_worst, res_worst


def cmd_pde(cfg: RunConfig) -> int:
    surfaces, summary, *_ = pde_outputs(cfg)
    out = Path(cfg.out)
    for name, text in surfaces.items():
        _write_text(out / name, text)
    _write_text(out / "pde_summary.txt", summary)
    sys.stdout.write(summary)
    return EXIT_OK


def _oracle_config(cfg: RunConfig, alpha: float | None = None,
                   phase: float | None = None,
                   seed_offset: int = 0) -> fock.OracleConfig:
    return fock.OracleConfig(
        alpha=cfg.alpha if alpha is None else alpha,
        dt=cfg.oracle_dt,
        t_max=cfg.oracle_t_max,
        d_at=cfg.oracle_d_at,
        d_anc=cfg.oracle_d_anc,
        n_traj=cfg.oracle_n_traj,
        seed=cfg.oracle_seed + seed_offset,
        phase=(fock.PHASE_X if cfg.oracle_phase == "x" else fock.PHASE_P)
        if phase is None else phase,
    )


def oracle_csv(cfg: RunConfig) -> str:
    """Oracle results in the shared schema plus stderr_* and n_traj columns.

    Atomic columns come from the deterministic trace route; the normalized
    field variance for the configured phase comes from the homodyne record
    (Var(y)/2 normalized by t).  Entries the oracle does not measure are nan.
    """
    ocfg = _oracle_config(cfg)
    atoms = fock.simulate_atom_moments(ocfg)
    n_samples = max(1, round(ocfg.t_max / cfg.grid_step))
    stats = fock.homodyne_series(ocfg, n_samples)
    field_col = ("var_x_ph_norm" if cfg.oracle_phase == "x"
                 else "var_p_ph_norm")
    header = list(gaussian.CSV_COLUMNS) + [
        "stderr_var_field_norm", "stderr_mean_record", "n_traj"]
    lines = [",".join(header)]
    for st in stats:
        idx = round(st.time / ocfg.dt)
        var_p = atoms.var_p[idx]
        var_x = atoms.var_x[idx]
        row = {c: math.nan for c in gaussian.CSV_COLUMNS}
        row["t"] = st.time
        row["var_p_at"] = var_p
        row["var_x_at"] = var_x
        row["sq_db_atom"] = 10.0 * math.log10(0.5 / var_p)
        row["unc_prod_atom"] = var_p * var_x
        row[field_col] = st.variance / 2.0 / st.time
        cells = [_fmt(row[c]) for c in gaussian.CSV_COLUMNS]
        cells.append(_fmt(st.stderr_var / 2.0 / st.time))
        cells.append(_fmt(st.stderr_mean))
        cells.append(str(st.n))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_oracle(cfg: RunConfig) -> int:
    _write_text(Path(cfg.out) / "oracle.csv", oracle_csv(cfg))
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def _compare_checks(cfg: RunConfig) -> tuple[list[tuple[str, bool, str]],
                                             dict[str, str]]:
    from .ito import (FAMILY_F, FAMILY_G, char_fn_generator,
                      output_commutator_rate, output_quadrature_relations,
                      series_product, single_pass_systems)
    from .scalars import (Cyclo, FormalScalar, I, INV_SQRT2, SYM_ALPHA,
                          SYM_K, SYM_L)
    from .weyl import OpPoly, mul
    from fractions import Fraction

    checks: list[tuple[str, bool, str]] = []
    artifacts: dict[str, str] = {}

    # 1. series product, exact
    sysd = series_product(*single_pass_systems())
    x, p = OpPoly.x(), OpPoly.p()
    l_expect = (p - x.scale(I)).scale(SYM_ALPHA).scale(INV_SQRT2)
    h_expect = (mul(p, x) + mul(x, p)).scale(SYM_ALPHA * SYM_ALPHA).scale(
        Cyclo(Fraction(1, 4)))
    ok = sysd.L == l_expect and sysd.H == h_expect
    checks.append(("series_product", ok, f"L={sysd.L}; H={sysd.H}"))

    # 2. input/output relations, exact
    io = output_quadrature_relations(sysd)
    a = SYM_ALPHA
    expected_terms = {
        "x_ph_out": {"x_ph_in": FormalScalar.one(), "p_at_out": a},
        "p_ph_out": {"p_ph_in": FormalScalar.one(), "x_at_out": -a},
        "dx_at_out/dt": {"p_ph_in": a},
        "dp_at_out/dt": {"x_ph_in": -a, "p_at_out": -(a * a)},
    }
    ok = all(rel.terms == expected_terms[rel.name] for rel in io.all())
    comm_ok = output_commutator_rate(io) == FormalScalar.const(I)
    checks.append(("io_relations", ok and comm_ok,
                   "; ".join(rel.pretty() for rel in io.all())))

    # 3. transport-equation coefficients, exact
    quarter = Cyclo(Fraction(1, 4))
    al_minus_k = a * SYM_L - SYM_K
    al_plus_k = a * SYM_L + SYM_K
    pde_f = char_fn_generator(sysd, FAMILY_F)
    pde_g = char_fn_generator(sysd, FAMILY_G)
    ok = (pde_f.c0 == -(al_minus_k * al_minus_k).scale(quarter)
          and pde_f.c1 == -(a * al_minus_k)
          and pde_g.c0 == -(al_plus_k * al_plus_k).scale(quarter)
          and pde_g.c1 == -(a * SYM_K))
    checks.append(("char_fn_generator", ok,
                   f"F: c0={pde_f.c0}; c1={pde_f.c1} | "
                   f"G: c0={pde_g.c0}; c1={pde_g.c1}"))

    # 4. ODE route vs closed form
    ode = gaussian.build_moment_odes(cfg.alpha)
    traj = gaussian.integrate_covariance(ode, cfg.t_max, cfg.solver_dt)
    pairs = (("p_at", "p_at"), ("p_at", "X_ph"), ("X_ph", "X_ph"),
             ("x_at", "x_at"), ("x_at", "P_ph"), ("P_ph", "P_ph"))
    worst = 0.0
    stride = max(1, len(traj) // 100)
    for i in range(0, len(traj), stride):
        snap = traj.snapshot(i)
        closed = gaussian.closed_form_covariances(cfg.alpha, snap.time)
        for r, c in pairs:
            ref = closed.entry(r, c)
            diff = abs(snap.entry(r, c) - ref)
            rel = 0.0 if (ref == 0 and diff < 1e-14) else diff / max(
                abs(ref), 1e-300)
            worst = max(worst, rel)
    checks.append(("ode_vs_closed_form", worst < cfg.tol_ode_rel,
                   f"max rel err {worst:.3e} (tol {cfg.tol_ode_rel:.1e})"))
    artifacts["variances.csv"] = variances_csv(cfg)

    # 5-7. PDE routes
    pde_cfg = replace(cfg, pde_k_max=2.0, pde_dk=1.0, pde_l_max=10.0)
    surfaces, summary, fd_worst, moc_worst, res_worst = pde_outputs(pde_cfg)
    artifacts.update(surfaces)
    artifacts["pde_summary.txt"] = summary
    checks.append(("moc_vs_closed_form", moc_worst < cfg.tol_moc_abs,
                   f"max abs err {moc_worst:.3e} (tol {cfg.tol_moc_abs:.1e})"))
    checks.append(("fd_vs_closed_form", fd_worst < cfg.tol_pde_abs,
                   f"max abs err {fd_worst:.3e} (tol {cfg.tol_pde_abs:.1e})"))
    checks.append(("closed_form_residual", res_worst < cfg.tol_residual,
                   f"max residual {res_worst:.3e} (tol {cfg.tol_residual:.1e})"))

    # 8. oracle, atomic moments (deterministic budget)
    ocfg = _oracle_config(cfg)
    atoms = fock.simulate_atom_moments(ocfg)
    closed = gaussian.closed_form_covariances(ocfg.alpha, ocfg.t_max)
    rel_p = abs(atoms.var_p[-1] - closed.entry("p_at", "p_at")) / closed.entry(
        "p_at", "p_at")
    rel_x = abs(atoms.var_x[-1] - closed.entry("x_at", "x_at")) / closed.entry(
        "x_at", "x_at")
    ok = rel_p < cfg.tol_oracle_rel and rel_x < cfg.tol_oracle_rel
    checks.append(("oracle_atom_moments", ok,
                   f"rel err p {rel_p:.3e}, x {rel_x:.3e} "
                   f"(tol {cfg.tol_oracle_rel:.1e})"))

    # 9. oracle, homodyne variance (statistical budget)
    st = fock.homodyne_monte_carlo(ocfg)
    field = ("X_ph" if ocfg.phase == fock.PHASE_X else "P_ph")
    ref = closed.entry(field, field)
    diff = abs(st.variance / 2.0 - ref)
    budget = cfg.tol_oracle_sigma * st.stderr_var / 2.0
    checks.append(("oracle_homodyne", diff < budget,
                   f"|Var(y)/2 - sigma2| = {diff:.4f} "
                   f"(budget {budget:.4f}, n={st.n})"))
    artifacts["oracle.csv"] = oracle_csv(cfg)

    # 10. alpha = 0 homodyne control
    c0 = _oracle_config(cfg, alpha=0.0, seed_offset=1)
    st0 = fock.homodyne_monte_carlo(c0)
    diff0 = abs(st0.variance - c0.t_max)
    budget0 = cfg.tol_oracle_sigma * st0.stderr_var
    checks.append(("oracle_vacuum_control", diff0 < budget0,
                   f"|Var(y) - t| = {diff0:.4f} (budget {budget0:.4f})"))
    return checks, artifacts


def cmd_compare(cfg: RunConfig) -> int:
    checks, artifacts = _compare_checks(cfg)
    artifacts["derivation.txt"] = derivation_report()
    lines = []
    for name, ok, detail in checks:
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    all_ok = all(ok for _, ok, _ in checks)
    lines.append(f"result: {'OK' if all_ok else 'TOLERANCE FAILURE'}")
    report = "\n".join(lines) + "\n"
    out = Path(cfg.out)
    for name, text in artifacts.items():
        _write_text(out / name, text)
    _write_text(out / "compare_report.txt", report)
    sys.stdout.write(report)
    return EXIT_OK if all_ok else EXIT_TOLERANCE


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doublepass",
        description="Double-pass atom-field model: symbolic derivations and "
                    "cross-checked numerical routes.")
    parser.add_argument("command",
                        choices=["derive", "variances", "pde", "oracle",
                                 "compare"])
    parser.add_argument("--alpha", type=float, default=None,
                        help="coupling strength")
    parser.add_argument("--t-max", type=float, default=None,
                        help="final time for the variance routes")
    parser.add_argument("--dt", type=float, default=None,
                        help="moment-ODE integrator step")
    parser.add_argument("--seed", type=int, default=None,
                        help="Monte Carlo base seed")
    parser.add_argument("--out", type=str, default=None,
                        help="output directory")
    parser.add_argument("--config", type=str, default=None,
                        help="flat key = value configuration file")
    parser.add_argument("--tolerance-scale", type=float, default=None,
                        help="multiply all comparison tolerances")
    return parser


_COMMANDS = {
    "derive": cmd_derive,
    "variances": cmd_variances,
    "pde": cmd_pde,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = load_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
