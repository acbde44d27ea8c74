"""Command-line experiment runner.

Subcommands cover the phase tables, the probe-amplitude threshold search,
exact and Monte Carlo purification rounds, PDC branch ledgers, dissipation
sweeps, and homodyne classifier trials.  Every run writes its resolved
configuration to ``manifest.txt`` in the output directory; identical config
and seed reproduce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import zlib
from pathlib import Path

import numpy as np

from . import homodyne, kerr, lindblad, pdc, protocol
from .config import ConfigError, RunConfig

# Rounded nominal phase magnitudes used by the coarse threshold search.
ROUNDED_THETAS = (0.0, 0.6, 1.1, 1.2)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _prepare(cfg: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.txt").write_text(cfg.manifest_text())
    params = cfg.kerr_params()
    for violation in kerr.validate_regime(params, cfg.max_total_occupation):
        print(f"regime warning: {violation}", file=sys.stderr)


def _rng(cfg: RunConfig, stream: str) -> np.random.Generator:
    # documented splitting rule: child streams keyed by subcommand name
    key = zlib.crc32(stream.encode())
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(key,))
    return np.random.default_rng(ss)


def cmd_phase_table(cfg: RunConfig, out_dir: Path) -> int:
    params = cfg.kerr_params()
    table = kerr.build_phase_table(params, cfg.max_total_occupation)
    rows = [(n1, n2, th) for n1, n2, th in table.rows()]
    _write_csv(out_dir / "phase_table.csv", ["n1", "n2", "theta_rad"], rows)
    distinct = sorted({abs(th) for th in table.distinct_thetas()})
    print(f"chi/2pi = {_fmt(table.chi / kerr.TWO_PI)} Hz")
    print("distinct |theta| values:", ", ".join(_fmt(t) for t in distinct))
    return 0


def cmd_alpha_threshold(cfg: RunConfig, out_dir: Path, rounded_mode: bool) -> int:
    params = cfg.kerr_params()
    table = kerr.build_phase_table(params, cfg.max_total_occupation)
    exact_thetas = [abs(t) for t in table.distinct_thetas()]
    alpha_rounded = homodyne.min_alpha(ROUNDED_THETAS, xd_threshold=cfg.xd_threshold)
    alpha_exact = homodyne.min_alpha(exact_thetas, p_target=cfg.p_target)
    rows = [
        ("rounded", alpha_rounded, f"X_d > {cfg.xd_threshold} at rounded nominal phases"),
        ("exact", alpha_exact, f"P_error <= {cfg.p_target} at computed phases"),
    ]
    _write_csv(out_dir / "alpha_threshold.csv", ["mode", "alpha", "criterion"], rows)
    headline = alpha_rounded if rounded_mode else alpha_exact
    print(f"min_alpha = {_fmt(headline)}  ({'rounded' if rounded_mode else 'exact'})")
    print(f"rounded: alpha = {_fmt(alpha_rounded)}")
    print(f"exact:   alpha = {_fmt(alpha_exact)}")
    return 0


def _round_rows(result: protocol.RoundResult, kind: str) -> list[tuple]:
    return [(kind, result.f_in, result.rule_set.value, result.kept_fidelity,
             result.success_probability,
             result.trials if result.trials is not None else "",
             result.fidelity_stderr if result.fidelity_stderr is not None else "")]


def cmd_purify(cfg: RunConfig, out_dir: Path) -> int:
    params = cfg.kerr_params()
    table = kerr.build_phase_table(params, cfg.max_total_occupation)
    rule_set = cfg.rule_set
    exact = protocol.purify_exact(cfg.f, table, rule_set=rule_set)
    summary = _round_rows(exact, "exact")
    print(f"exact: f_out = {_fmt(exact.kept_fidelity)}, "
          f"success = {_fmt(exact.success_probability)}")
    if math.isfinite(cfg.alpha):
        conf = protocol.purify_with_confusion(cfg.f, table, cfg.alpha, rule_set=rule_set)
        summary += _round_rows(conf, "exact_with_confusion")
        print(f"with confusion (alpha={_fmt(cfg.alpha)}): "
              f"f_out = {_fmt(conf.kept_fidelity)}, success = {_fmt(conf.success_probability)}")
    if cfg.trials > 0:
        mc = protocol.monte_carlo_round(cfg.f, table, cfg.trials, _rng(cfg, "purify"),
                                        alpha=cfg.alpha, rule_set=rule_set)
        summary += _round_rows(mc, "monte_carlo")
        print(f"monte carlo ({cfg.trials} trials): f_out = {_fmt(mc.kept_fidelity)}, "
              f"success = {_fmt(mc.success_probability)}")
    _write_csv(out_dir / "purify_summary.csv",
               ["kind", "f_in", "rule_set", "kept_fidelity", "success_probability",
                "trials", "fidelity_stderr"], summary)
    ledger_rows = [(r.component, r.component_weight, r.theta_alice, r.theta_bob,
                    r.probability, r.action,
                    r.final_fidelity if r.final_fidelity is not None else "")
                   for r in exact.branch_ledger]
    _write_csv(out_dir / "purify_branches.csv",
               ["component", "component_weight", "theta_alice", "theta_bob",
                "probability", "action", "final_fidelity"], ledger_rows)
    return 0


def cmd_pdc(cfg: RunConfig, out_dir: Path) -> int:
    params = cfg.kerr_params()
    table = kerr.build_phase_table(params, cfg.max_total_occupation)
    rows = []
    for error in (False, True):
        label = f"single_pair_error{int(error)}"
        for br in pdc.pdc_single_pair_round(table, error=error):
            rows.append((label, br.theta_alice, br.theta_bob, br.weight,
                         br.action, br.output_port or ""))
    for error_count in (0, 1, 2):
        label = f"two_pair_errors{error_count}"
        result = pdc.pdc_two_pair_round(error_count, table)
        for br in result.branches:
            rows.append((label, br.theta_alice, br.theta_bob, br.weight,
                         br.action, br.output_port or ""))
        print(f"{label}: kept weight = {_fmt(result.kept_weight)}")
    _write_csv(out_dir / "pdc_branches.csv",
               ["scenario", "theta_alice", "theta_bob", "weight", "action",
                "output_port"], rows)
    return 0


def cmd_dissipation_sweep(cfg: RunConfig, out_dir: Path) -> int:
    k2_fixed = 1.0 / cfg.kerr_params().kappa2
    k1_fixed = 1.0 / cfg.kerr_params().kappa1
    states = cfg.sweep_initial_states
    header = ["initial_state", "kappa1_inv_s", "kappa2_inv_s", "tau_s", "fidelity"]

    cfg1 = lindblad.DissipationSweepConfig(
        initial_states=states, kappa1_inv=cfg.time_list("kappa1_inv_sweep"),
        kappa2_inv=k2_fixed, tau_factor=cfg.tau_factor)
    rows1 = [(f"{s.initial_state[0]}{s.initial_state[1]}", s.kappa1_inv,
              s.kappa2_inv, s.tau, s.fidelity) for s in lindblad.sweep(cfg1)]
    _write_csv(out_dir / "dissipation_kappa1.csv", header, rows1)

    cfg2 = lindblad.DissipationSweepConfig(
        initial_states=states, kappa1_inv=k1_fixed,
        kappa2_inv=cfg.time_list("kappa2_inv_sweep"), tau_factor=cfg.tau_factor)
    rows2 = [(f"{s.initial_state[0]}{s.initial_state[1]}", s.kappa1_inv,
              s.kappa2_inv, s.tau, s.fidelity) for s in lindblad.sweep(cfg2)]
    _write_csv(out_dir / "dissipation_kappa2.csv", header, rows2)

    print(f"wrote {len(rows1)} storage-decay rows and {len(rows2)} readout-decay rows")
    return 0


def cmd_homodyne_sim(cfg: RunConfig, out_dir: Path) -> int:
    if not math.isfinite(cfg.alpha):
        print("homodyne-sim requires a finite alpha", file=sys.stderr)
        return 2
    trials = cfg.trials or 10000
    params = cfg.kerr_params()
    table = kerr.build_phase_table(params, cfg.max_total_occupation)
    thetas = sorted({abs(t) for t in table.distinct_thetas()})
    bins = homodyne.PhaseBinSet(
        alpha=cfg.alpha,
        bins=tuple((f"theta{i}", th) for i, th in enumerate(thetas)))
    rng = _rng(cfg, "homodyne-sim")
    rows = []
    errors = 0
    for trial in range(trials):
        true_idx = int(rng.integers(len(bins.bins)))
        probe = homodyne.ProbeState(alpha=cfg.alpha, theta=bins.thetas[true_idx])
        x, assigned, correct = homodyne.sample_and_classify(probe, bins, rng)
        errors += not correct
        rows.append((trial, x, bins.labels[true_idx], assigned))
    _write_csv(out_dir / "homodyne_trials.csv",
               ["trial", "X", "true_label", "assigned_label"], rows)
    print(f"empirical error rate: {errors / trials:.6f} over {trials} trials")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kerrpurify",
        description="Cross-Kerr QND entanglement purification simulator")
    parser.add_argument("--config", type=Path, help="config file path")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, help="override RNG seed")
    parser.add_argument("--trials", type=int, help="override Monte Carlo trials")
    parser.add_argument("--f", type=float, help="override input fidelity")
    parser.add_argument("--alpha", help="override probe amplitude (number or 'inf')")
    parser.add_argument("--rule-set", choices=["weak_kerr", "ideal_phase"],
                        help="override decision rule set")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("phase-table", help="emit the occupation/phase table")
    p_alpha = sub.add_parser("alpha-threshold", help="minimal probe amplitude search")
    p_alpha.add_argument("--rounded-mode", action="store_true",
                         help="headline the rounded-threshold value")
    sub.add_parser("purify", help="one ideal-source purification round")
    sub.add_parser("pdc", help="PDC-source branch ledgers")
    sub.add_parser("dissipation-sweep", help="storage-fidelity sweeps")
    sub.add_parser("homodyne-sim", help="homodyne classifier trials")
    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig.defaults()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.trials is not None:
        overrides["trials"] = str(args.trials)
    if args.f is not None:
        overrides["f"] = repr(args.f)
    if args.alpha is not None:
        overrides["alpha"] = str(args.alpha)
    if args.rule_set is not None:
        overrides["rule_set"] = args.rule_set
    return cfg.with_overrides(**overrides) if overrides else cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out
    _prepare(cfg, out_dir)
    if args.command == "phase-table":
        return cmd_phase_table(cfg, out_dir)
    if args.command == "alpha-threshold":
        return cmd_alpha_threshold(cfg, out_dir, args.rounded_mode)
    if args.command == "purify":
        return cmd_purify(cfg, out_dir)
    if args.command == "pdc":
        return cmd_pdc(cfg, out_dir)
    if args.command == "dissipation-sweep":
        return cmd_dissipation_sweep(cfg, out_dir)
    if args.command == "homodyne-sim":
        return cmd_homodyne_sim(cfg, out_dir)
    parser.print_usage(sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
