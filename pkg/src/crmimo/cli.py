"""Command line front end.

Dispatches preset experiments (equal-power sweeps, allocation-policy
comparisons, max-SU searches, distribution validation, single solves)
over a base config assembled from defaults, an optional config file and
--set overrides.  Results land as versioned CSV files plus a one-line
summary per sweep point; emit-plot-data splits any result CSV into
whitespace-delimited .dat series files.  All powers cross the CLI
boundary in dB; everything internal is linear.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from dataclasses import dataclass

import numpy as np

from .beamforming import MEB, ZFB, compute_meb, compute_zfb
from .montecarlo import (
    POLICY_EQUAL_POWER,
    POLICY_EQUAL_POWER_OPT,
    POLICY_LF,
    max_sus_at_confidence,
    empirical_cdf,
    run_trials,
)
from .network import NetworkConfig, _DB_KEYS, db_to_linear, generate_channels, linear_to_db
from .power import equal_power, solve_lf_meb, solve_lf_zfb, verify_allocation
from . import analytics

__all__ = ["ExperimentSpec", "build_spec", "run", "emit_plot_data", "main"]

EXPERIMENTS = (
    "fig2_eq_power_sweep",
    "fig3_meb_compare",
    "fig4_zfb_compare",
    "fig5_max_sus",
    "cdf_validation",
    "single_solve",
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

_DEFAULT_TRIALS = {
    "fig2_eq_power_sweep": 1000,
    "fig3_meb_compare": 1000,
    "fig4_zfb_compare": 1000,
    "fig5_max_sus": 500,
    "cdf_validation": 10_000,
    "single_solve": 1,
}

_DEFAULT_SWEEPS = {
    "fig2_eq_power_sweep": ("p_eq_db", tuple(float(x) for x in range(-20, 1, 2))),
    "fig3_meb_compare": ("sigma2_delta", (0.01, 0.02, 0.05, 0.1, 0.2, 0.5)),
    "fig4_zfb_compare": ("sigma2_delta", (0.01, 0.02, 0.05, 0.1, 0.2, 0.5)),
    "fig5_max_sus": ("r0", (1.0, 2.0, 3.0, 4.0)),
    "cdf_validation": None,
    "single_solve": None,
}

_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(NetworkConfig)}
_INT_FIELDS = {f.name for f in dataclasses.fields(NetworkConfig) if f.type == "int"}


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved description of one CLI run."""

    experiment: str
    config: NetworkConfig
    sweep: tuple[str, tuple[float, ...]] | None
    schemes: tuple[str, ...]
    policies: tuple[str, ...]
    n_trials: int
    seed: int
    out_dir: str
    m_b_list: tuple[int, ...]
    confidence: float = 0.95
    p_eq: float | None = None
    n_workers: int = 1
    dump_samples: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.sweep is not None:
            name, values = self.sweep
            if name not in _CONFIG_FIELDS and name not in _DB_KEYS \
                    and name not in ("p_eq", "p_eq_db"):
                raise ValueError(f"unknown sweep parameter {name!r}")
            if not values:
                raise ValueError("sweep needs at least one value")
            if not np.isfinite(values).all():
                raise ValueError(f"sweep values must be finite, got {values}")
        for scheme in self.schemes:
            if scheme not in (MEB, ZFB):
                raise ValueError(f"unknown scheme {scheme!r}")
        for policy in self.policies:
            if policy not in (POLICY_LF, POLICY_EQUAL_POWER, POLICY_EQUAL_POWER_OPT):
                raise ValueError(f"unknown policy {policy!r}")
        if self.n_trials < 1:
            raise ValueError("trials must be positive")


def _apply_overrides(config: NetworkConfig, items: dict) -> NetworkConfig:
    merged = {name: getattr(config, name) for name in _CONFIG_FIELDS}
    for key, raw in items.items():
        if key in _DB_KEYS:
            merged[_DB_KEYS[key]] = float(db_to_linear(float(raw)))
        elif key in _CONFIG_FIELDS:
            merged[key] = int(raw) if key in _INT_FIELDS else float(raw)
        else:
            raise ValueError(f"unknown config key {key!r}")
    return NetworkConfig(**merged)


def _parse_set_args(pairs) -> dict:
    items = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--set expects KEY=VALUE, got {pair!r}")
        key, _, value = pair.partition("=")
        items[key.strip()] = value.strip()
    return items


def build_spec(args) -> ExperimentSpec:
    """Turn parsed CLI arguments into a validated ExperimentSpec."""
    config = NetworkConfig()
    if args.config:
        config = NetworkConfig.from_file(args.config)
    overrides = _parse_set_args(args.overrides)
    config = _apply_overrides(config, overrides)

    sweep = _DEFAULT_SWEEPS[args.experiment]
    if args.sweep:
        if "=" not in args.sweep:
            raise ValueError(f"--sweep expects FIELD=V1,V2,..., got {args.sweep!r}")
        name, _, tail = args.sweep.partition("=")
        values = tuple(float(tok) for tok in tail.split(",") if tok.strip())
        sweep = (name.strip(), values)

    if args.experiment == "fig2_eq_power_sweep" and sweep is not None \
            and sweep[0] not in ("p_eq", "p_eq_db"):
        raise ValueError("fig2_eq_power_sweep sweeps p_eq_db; "
                         f"cannot sweep {sweep[0]!r} here")

    if "m_b" in overrides or args.config:
        m_b_list = (config.m_b,)
    else:
        m_b_list = (64, 128) + ((512, 1024) if args.large_mb else ())

    if args.schemes:
        schemes = tuple(s.strip().upper() for s in args.schemes.split(","))
    elif args.experiment == "fig3_meb_compare":
        schemes = (MEB,)
    elif args.experiment == "fig4_zfb_compare":
        schemes = (ZFB,)
    else:
        schemes = (MEB, ZFB)

    if args.policies:
        policies = tuple(s.strip().upper() for s in args.policies.split(","))
    elif args.experiment in ("fig3_meb_compare", "fig4_zfb_compare"):
        policies = (POLICY_EQUAL_POWER_OPT, POLICY_LF)
    elif args.experiment == "single_solve":
        policies = (POLICY_LF,)
    elif args.experiment == "fig5_max_sus":
        policies = (POLICY_EQUAL_POWER_OPT,)
    else:
        policies = (POLICY_EQUAL_POWER,)

    p_eq = None
    if args.p_eq_db is not None:
        p_eq = float(db_to_linear(args.p_eq_db))

    return ExperimentSpec(
        experiment=args.experiment,
        config=config,
        sweep=sweep,
        schemes=schemes,
        policies=policies,
        n_trials=args.trials if args.trials else _DEFAULT_TRIALS[args.experiment],
        seed=args.seed,
        out_dir=args.out,
        m_b_list=m_b_list,
        confidence=args.confidence,
        p_eq=p_eq,
        n_workers=args.workers,
        dump_samples=args.dump_samples,
    )


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x):
    if isinstance(x, float):
        return repr(float(x))
    return x


def _fig2(spec: ExperimentSpec):
    name, values = spec.sweep
    rows = []
    for m_b in spec.m_b_list:
        config = spec.config.replace(m_b=m_b)
        for scheme in spec.schemes:
            for value in values:
                p_eq = float(db_to_linear(value)) if name == "p_eq_db" else float(value)
                p_eq_db = float(linear_to_db(p_eq))
                analytic = analytics.q_k(scheme, config, p_eq)
                res = run_trials(config, scheme, POLICY_EQUAL_POWER, spec.n_trials,
                                 spec.seed, p_eq=p_eq, n_workers=spec.n_workers)
                rows.append([m_b, p_eq_db, scheme, _fmt(analytic), _fmt(res.p_served),
                             _fmt(res.stderr), res.n_trials])
                print(f"fig2 m_b={m_b} scheme={scheme} p_eq={p_eq_db:+.1f}dB "
                      f"analytic={analytic:.4f} empirical={res.p_served:.4f}")
    header = ["m_b", "p_eq_db", "scheme", "p_served_analytical",
              "p_served_empirical", "stderr", "n_trials"]
    return "fig2_eq_power_sweep.csv", header, rows


def _fig_compare(spec: ExperimentSpec, scheme: str):
    name, values = spec.sweep
    rows = []
    for value in values:
        config = _apply_overrides(spec.config, {name: value})
        for policy in spec.policies:
            p_eq = spec.p_eq
            analytic = ""
            if policy == POLICY_EQUAL_POWER_OPT:
                opt = analytics.optimize_equal_power(scheme, config)
                analytic = _fmt(opt.q)
            res = run_trials(config, scheme, policy, spec.n_trials, spec.seed,
                             p_eq=p_eq, n_workers=spec.n_workers)
            p_eq_db = "" if res.p_eq is None else _fmt(float(linear_to_db(res.p_eq)))
            rows.append([_fmt(float(value)), scheme, policy, _fmt(res.p_served),
                         _fmt(res.stderr), analytic, p_eq_db, res.n_trials])
            print(f"{spec.experiment} {name}={value} policy={policy} "
                  f"p_served={res.p_served:.4f}")
    header = [name, "scheme", "policy", "p_served", "stderr",
              "q_analytical", "p_eq_db", "n_trials"]
    return f"{spec.experiment}.csv", header, rows


def _fig5(spec: ExperimentSpec):
    name, values = spec.sweep
    rows = []
    for m_b in spec.m_b_list:
        config = spec.config.replace(m_b=m_b)
        for scheme in spec.schemes:
            table = max_sus_at_confidence(
                config, scheme, spec.confidence, name, values,
                n_trials=spec.n_trials, seed=spec.seed,
                policy=spec.policies[0], p_eq=spec.p_eq,
            )
            for value, max_k in table:
                rows.append([m_b, _fmt(float(value)), scheme, max_k,
                             _fmt(spec.confidence), spec.n_trials])
                print(f"fig5 m_b={m_b} scheme={scheme} {name}={value} max_k={max_k}")
    header = ["m_b", name, "scheme", "max_k", "confidence", "n_trials"]
    return "fig5_max_sus.csv", header, rows


def _cdf_validation(spec: ExperimentSpec):
    config = spec.config
    p_eq = spec.p_eq if spec.p_eq is not None else config.p0 / config.k_su
    p_eq_db = float(linear_to_db(p_eq))
    rows = []
    dumps = []
    for scheme in spec.schemes:
        res = run_trials(config, scheme, POLICY_EQUAL_POWER, spec.n_trials,
                         spec.seed, p_eq=p_eq, n_workers=spec.n_workers)
        if scheme == MEB:
            sinr_model = analytics.meb_sinr_params(config, p_eq)
            sinr_cdf = lambda s: analytics.meb_sinr_cdf(sinr_model, max(s, 1e-300))
            int_cdf = lambda x: analytics.meb_interference_cdf(config, p_eq, x)
        else:
            sinr_model = analytics.zfb_sinr_params(config, p_eq)
            sinr_cdf = lambda s: analytics.zfb_sinr_cdf(sinr_model, s)
            int_cdf = lambda x: analytics.zfb_interference_cdf(config, p_eq, x)
        for quantity, samples, cdf in (
            ("sinr", res.sinr_true, sinr_cdf),
            ("interference", res.int_to_pu_true, int_cdf),
        ):
            if samples.size == 0:
                continue
            ks = empirical_cdf(samples).ks_distance(cdf)
            rows.append([scheme, quantity, _fmt(ks), samples.size,
                         res.n_trials, _fmt(p_eq_db)])
            print(f"cdf_validation scheme={scheme} quantity={quantity} ks={ks:.4f}")
            if spec.dump_samples:
                dump = os.path.join(spec.out_dir, f"samples_{scheme}_{quantity}.txt")
                np.savetxt(dump, np.sort(samples))
                dumps.append(dump)
    header = ["scheme", "quantity", "ks_distance", "n_samples", "n_trials", "p_eq_db"]
    return "cdf_validation.csv", header, rows


def _single_solve(spec: ExperimentSpec):
    config = spec.config
    scheme = spec.schemes[0]
    policy = spec.policies[0]
    real = generate_channels(config, spec.seed)
    beams = compute_meb(real) if scheme == MEB else compute_zfb(real)
    if policy == POLICY_LF:
        alloc = (solve_lf_meb if scheme == MEB else solve_lf_zfb)(real, beams, config)
        p, feasible = alloc.p, alloc.feasible
    else:
        p_eq = spec.p_eq
        if p_eq is None and policy == POLICY_EQUAL_POWER_OPT:
            p_eq = analytics.optimize_equal_power(scheme, config).p_eq
        if p_eq is None:
            p_eq = config.p0 / config.k_su
        p = equal_power(config, p_eq)
        feasible = verify_allocation(real, beams, p, config, use_estimates=True).all_met()
    print(f"single_solve scheme={scheme} policy={policy} feasible={feasible}")
    rows = []
    for k, pk in enumerate(p):
        db = float(linear_to_db(pk)) if pk > 0 else float("-inf")
        rows.append([k, _fmt(float(pk)), _fmt(db), scheme, policy, feasible])
        print(f"  P_{k} = {pk:.6e} ({db:+.2f} dB)" if pk > 0
              else f"  P_{k} = {pk:.6e}")
    header = ["su", "p", "p_db", "scheme", "policy", "feasible"]
    return "single_solve.csv", header, rows


def run(spec: ExperimentSpec) -> int:
    """Execute one experiment spec; returns a process exit status."""
    os.makedirs(spec.out_dir, exist_ok=True)
    if spec.experiment == "fig2_eq_power_sweep":
        out = _fig2(spec)
    elif spec.experiment == "fig3_meb_compare":
        out = _fig_compare(spec, spec.schemes[0])
    elif spec.experiment == "fig4_zfb_compare":
        out = _fig_compare(spec, spec.schemes[0])
    elif spec.experiment == "fig5_max_sus":
        out = _fig5(spec)
    elif spec.experiment == "cdf_validation":
        out = _cdf_validation(spec)
    else:
        out = _single_solve(spec)
    filename, header, rows = out
    path = os.path.join(spec.out_dir, filename)
    _write_csv(path, header, rows)
    print(f"wrote {path}")
    return EXIT_OK


def emit_plot_data(csv_path, out_dir=None) -> list:
    """Split a result CSV into whitespace-delimited .dat series files.

    One file per distinct (scheme, policy) pair when those columns
    exist, otherwise a single file.  Values are copied verbatim, so a
    round trip preserves them exactly.  Idempotent.
    """
    with open(csv_path, newline="") as fh:
        lines = [ln for ln in fh if not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    table = list(reader)
    if not table:
        raise ValueError(f"{csv_path} has no header row")
    header, body = table[0], table[1:]

    group_cols = [i for i, name in enumerate(header) if name in ("scheme", "policy")]
    stem = os.path.splitext(os.path.basename(csv_path))[0]
    directory = out_dir if out_dir is not None else (os.path.dirname(csv_path) or ".")
    os.makedirs(directory, exist_ok=True)

    groups: dict[tuple, list] = {}
    for row in body:
        key = tuple(row[i] for i in group_cols)
        groups.setdefault(key, []).append(row)
    if not groups:
        groups[()] = []

    written = []
    for key, rows in sorted(groups.items()):
        suffix = "".join(f"_{part}" for part in key)
        path = os.path.join(directory, f"{stem}{suffix.lower()}.dat")
        with open(path, "w") as fh:
            fh.write("# schema=1\n")
            fh.write("# " + " ".join(header) + "\n")
            for row in rows:
                fh.write(" ".join(row) + "\n")
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crmimo",
        description="Underlay cognitive-radio massive-MIMO downlink experiments",
    )
    parser.add_argument("--experiment", choices=EXPERIMENTS,
                        help="preset experiment to run")
    parser.add_argument("--config", metavar="FILE",
                        help="flat key = value config file")
    parser.add_argument("--set", action="append", default=[], dest="overrides",
                        metavar="KEY=VALUE", help="config override, repeatable")
    parser.add_argument("--sweep", metavar="FIELD=V1,V2,...",
                        help="override the preset sweep axis")
    parser.add_argument("--schemes", help="comma list of MEB,ZFB")
    parser.add_argument("--policies", help="comma list of LF,EQUAL_POWER,EQUAL_POWER_OPT")
    parser.add_argument("--trials", type=int, help="trials per point")
    parser.add_argument("--seed", type=int, default=1, help="master seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--confidence", type=float, default=0.95,
                        help="confidence level for fig5_max_sus")
    parser.add_argument("--p-eq-db", type=float, dest="p_eq_db",
                        help="per-SU power in dB for equal-power policies")
    parser.add_argument("--workers", type=int, default=1, help="trial worker processes")
    parser.add_argument("--large-mb", action="store_true",
                        help="include m_b in {512, 1024} in presets")
    parser.add_argument("--dump-samples", action="store_true",
                        help="write raw sample arrays next to the CSV")
    parser.add_argument("--emit-plot-data", metavar="CSV",
                        help="convert a result CSV into .dat series files and exit")
    args = parser.parse_args(argv)

    if args.emit_plot_data:
        try:
            written = emit_plot_data(args.emit_plot_data, out_dir=None)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for path in written:
            print(f"wrote {path}")
        return EXIT_OK

    if not args.experiment:
        parser.error("--experiment is required (or use --emit-plot-data)")
    try:
        spec = build_spec(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, OSError) else EXIT_CONFIG
    try:
        return run(spec)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
