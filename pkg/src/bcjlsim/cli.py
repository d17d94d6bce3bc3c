"""Command-line driver.

    bcjlsim honest   --context toy42 --seed 1 --trials 1000
    bcjlsim security --context hamming84 --epsilon 0.04
    bcjlsim attack   --context hamming84 --epsilon 0.04 --epsilon-prime 0.04
    bcjlsim verify   --seed 7 --trials 100
    bcjlsim sweep    --spec sweep.json --format csv

Reports go to ``--out`` (default stdout) as JSON or CSV. Exit status is 0 on
success, 1 when a verified property fails, 2 on configuration or input
errors. Honest trial ``i`` for bit ``b`` uses ``default_rng([seed, b, i])``;
verify trial ``i`` uses ``default_rng([seed, i])``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .attack import AttackReport, attack_report, build_attack, reports_to_csv
from .errors import ConfigError, FeasibilityError, ValidationError
from .metrics import SecurityReport, security_report
from .protocol import (
    DEFAULT_POLICY,
    Transcript,
    acceptance_expectations,
    error_fraction,
    honest_rounds,
    honest_density_matrix,
    load_context,
    test_unveil,
)
from .quantum.measurement import GeneralMeasurement
from .quantum.purification import optimal_purifications
from .quantum.states import DensityMatrix, bb84_vectors, root_fidelity
from .randomness import (
    random_density_matrix,
    random_distribution_pair,
    random_effects,
    random_measurement,
    trial_rng,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR = 0, 1, 2


@dataclass
class RunConfig:
    context: str = "toy42"
    seed: int = 0
    epsilon: float = 0.04
    epsilon_prime: float = 0.04
    trials: int = 100
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if not 0.0 < self.epsilon_prime < 0.5:
            raise ConfigError(f"epsilon-prime must lie in (0, 1/2), got {self.epsilon_prime}")
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")


@dataclass
class SweepSpec:
    entries: list[RunConfig] = field(default_factory=list)

    def __post_init__(self):
        if not self.entries:
            raise ConfigError("sweep needs at least one context")

    @classmethod
    def load(cls, path: str, base: RunConfig) -> "SweepSpec":
        doc = json.loads(Path(path).read_text())
        items = doc["contexts"] if isinstance(doc, dict) else doc
        entries = []
        for item in items:
            if isinstance(item, str):
                item = {"context": item}
            merged = {**base.__dict__, **{k.replace("-", "_"): v for k, v in item.items()}}
            entries.append(RunConfig(**merged))
        return cls(entries)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(config: RunConfig, text: str) -> None:
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)


# --- honest -----------------------------------------------------------------

def run_honest(config: RunConfig) -> dict:
    ctx = load_context(config.context)
    results = {}
    for b in (0, 1):
        rounds = honest_rounds(b, ctx, config.seed, config.trials)
        accepted = 0
        matching = 0.0
        errors = 0.0
        for theta, c, theta_hat, c_hat in zip(*rounds):
            t = Transcript(theta, c, theta_hat, c_hat, ctx)
            accepted += test_unveil(b, t, DEFAULT_POLICY)
            matching += np.count_nonzero(theta_hat == theta) / ctx.n
            errors += error_fraction(theta, c, theta_hat, c_hat)
        thetas, cs, probs = ctx.honest_pairs(b)
        exact = float(probs @ acceptance_expectations(b, thetas, cs, bb84_vectors(cs, thetas), ctx))
        exact = min(1.0, max(0.0, exact))
        results[str(b)] = {
            "trials": config.trials,
            "accepted": accepted,
            "acceptance_rate": accepted / config.trials,
            "exact_acceptance": exact,
            "mean_matching_basis_fraction": matching / config.trials,
            "mean_error_fraction": errors / config.trials,
        }
    return {"command": "honest", "context": getattr(ctx, "name", config.context),
            "seed": config.seed, "results": results}


def cmd_honest(config: RunConfig) -> int:
    doc = run_honest(config)
    if config.format == "csv":
        cols = ("context", "b", "trials", "accepted", "acceptance_rate", "exact_acceptance",
                "mean_matching_basis_fraction", "mean_error_fraction")
        rows = [{"context": doc["context"], "b": int(b), **r} for b, r in doc["results"].items()]
        _emit(config, reports_to_csv(rows, cols))
    else:
        _emit(config, _dumps(doc))
    ok = all(r["accepted"] == r["trials"] for r in doc["results"].values())
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# --- security / attack --------------------------------------------------------

def run_security(config: RunConfig) -> SecurityReport:
    ctx = load_context(config.context)
    rho0, rho1 = honest_density_matrix(0, ctx), honest_density_matrix(1, ctx)
    return security_report(rho0, rho1, config.epsilon, context=getattr(ctx, "name", config.context))


def run_attack(config: RunConfig) -> AttackReport:
    ctx = load_context(config.context)
    return attack_report(build_attack(ctx), config.epsilon, config.epsilon_prime)


def _emit_report(config: RunConfig, report) -> None:
    if config.format == "csv":
        _emit(config, reports_to_csv([report.csv_row()], report.CSV_COLUMNS))
    else:
        _emit(config, report.to_json() + "\n")


def cmd_security(config: RunConfig) -> int:
    _emit_report(config, run_security(config))
    return EXIT_OK


def cmd_attack(config: RunConfig) -> int:
    report = run_attack(config)
    _emit_report(config, report)
    return EXIT_OK if report.holds else EXIT_CHECK_FAILED


SWEEP_COLUMNS = SecurityReport.CSV_COLUMNS + AttackReport.CSV_COLUMNS[1:]


def cmd_sweep(spec: SweepSpec, config: RunConfig) -> int:
    docs, rows = [], []
    ok = True
    for entry in spec.entries:
        sec, att = run_security(entry), run_attack(entry)
        ok &= att.holds
        docs.append({"security": sec.to_dict(), "attack": att.to_dict()})
        rows.append({**sec.csv_row(), **att.csv_row()})
    if config.format == "csv":
        _emit(config, reports_to_csv(rows, SWEEP_COLUMNS))
    else:
        _emit(config, _dumps(docs))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# --- verify -------------------------------------------------------------------
# Each check is a pair (generate(rng) -> instance, evaluate(instance) -> (ok, value)).
# Instances are plain JSON so a failure can be written out and replayed.

def _enc(m) -> dict:
    m = np.asarray(m)
    return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}


def _dec(d) -> np.ndarray:
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def _gen_bw_k(rng):
    p0, p1 = random_distribution_pair(int(rng.integers(2, 65)), rng)
    return {"p0": p0.tolist(), "p1": p1.tolist()}


def _eval_bw_k(inst):
    dp = metrics.DistributionPair(inst["p0"], inst["p1"])
    slack = metrics.kolmogorov(dp) / 2 - (1 - metrics.bhattacharyya(dp))
    return slack >= -1e-12, slack


def _gen_states(rng):
    d = int(rng.integers(2, 5))
    return {"rho0": _enc(random_density_matrix(d, rng).matrix),
            "rho1": _enc(random_density_matrix(d, rng).matrix)}


def _gen_coarsen(rng):
    inst = _gen_states(rng)
    d = len(inst["rho0"]["re"])
    m = random_measurement(d, int(rng.integers(2, 7)), rng)
    inst["operators"] = [_enc(op) for op in m.operators]
    return inst


def _eval_coarsen(inst):
    m = GeneralMeasurement(tuple(_dec(op) for op in inst["operators"]))
    _, before, after = metrics.binary_coarsen(m, _dec(inst["rho0"]), _dec(inst["rho1"]))
    gap = abs(metrics.kolmogorov(before) - metrics.kolmogorov(after))
    return gap <= 1e-12, gap


def _gen_binary(rng):
    inst = _gen_states(rng)
    d = len(inst["rho0"]["re"])
    inst["effects"] = [_enc(e) for e in random_effects(d, 2, rng)]
    return inst


def _eval_binary(inst):
    eff = np.stack([_dec(e) for e in inst["effects"]])
    dp = metrics.outcome_distributions(eff, _dec(inst["rho0"]), _dec(inst["rho1"]))
    gap = abs(metrics.kolmogorov(dp) - 4 * abs(metrics.probability_of_error(dp) - 0.5))
    return gap <= 1e-12, gap


def _eval_bw_min(inst):
    r0, r1 = _dec(inst["rho0"]), _dec(inst["rho1"])
    _, bw = metrics.min_bw_measurement(r0, r1)
    gap = abs(bw - root_fidelity(r0, r1))
    return gap <= 1e-6, gap


def _eval_uhlmann(inst):
    r0, r1 = DensityMatrix(_dec(inst["rho0"])), DensityMatrix(_dec(inst["rho1"]))
    phi0, phi1 = optimal_purifications(r0, r1)
    ov = phi0.overlap(phi1)
    gap = abs(ov - root_fidelity(r0, r1))
    return gap <= 1e-8 and phi0.purifies(r0) and phi1.purifies(r1), gap


CHECKS = {
    "bw_vs_kolmogorov": (_gen_bw_k, _eval_bw_k),
    "coarsening_preserves_k": (_gen_coarsen, _eval_coarsen),
    "binary_k_equals_4pe": (_gen_binary, _eval_binary),
    "bw_min_equals_root_fidelity": (_gen_states, _eval_bw_min),
    "uhlmann_overlap": (_gen_states, _eval_uhlmann),
}


def run_verify(config: RunConfig, failure_path: str | None = None) -> tuple[dict, dict | None]:
    """Run every check over ``trials`` instances; stop at the first failure."""
    summary = {}
    for name, (generate, evaluate) in CHECKS.items():
        values = []
        for i in range(config.trials):
            inst = generate(trial_rng(config.seed, i))
            ok, value = evaluate(inst)
            values.append(float(value))
            if not ok:
                failure = {"check": name, "seed": config.seed, "trial": i, "instance": inst,
                           "value": float(value)}
                if failure_path:
                    Path(failure_path).write_text(_dumps(failure))
                return summary, failure
        # bw_vs_kolmogorov reports a slack (>= 0 is good); the others a gap (small is good)
        stat = ("min_slack", min(values)) if name == "bw_vs_kolmogorov" else ("max_gap", max(values))
        summary[name] = {"trials": config.trials, "passed": True, stat[0]: stat[1]}
    return summary, None


def replay(path: str) -> tuple[bool, float, dict]:
    """Re-evaluate a stored failure; returns (ok, value, instance regenerated from seed/trial)."""
    doc = json.loads(Path(path).read_text())
    generate, evaluate = CHECKS[doc["check"]]
    ok, value = evaluate(doc["instance"])
    regenerated = generate(trial_rng(doc["seed"], doc["trial"]))
    return ok, float(value), regenerated


def cmd_verify(config: RunConfig, failure_path: str | None = None) -> int:
    failure_path = failure_path or (str(Path(config.out).with_suffix(".failure.json")) if config.out
                                    else "verify-failure.json")
    summary, failure = run_verify(config, failure_path)
    doc = {"command": "verify", "seed": config.seed, "checks": summary,
           "failure": None if failure is None else {k: failure[k] for k in ("check", "trial", "value")}}
    if config.format == "csv":
        rows = [{"check": k, "trials": v["trials"], "passed": v["passed"]} for k, v in summary.items()]
        if failure:
            rows.append({"check": failure["check"], "trials": failure["trial"] + 1, "passed": False})
        _emit(config, reports_to_csv(rows, ("check", "trials", "passed")))
    else:
        _emit(config, _dumps(doc))
    if failure:
        print(f"check {failure['check']} failed at trial {failure['trial']}; instance written to "
              f"{failure_path}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_replay(path: str) -> int:
    ok, value, _ = replay(path)
    print(json.dumps({"replay": path, "passed": bool(ok), "value": value}))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# --- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--context", default="toy42", help="built-in name or context JSON path")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--epsilon", type=float, default=0.04)
    common.add_argument("--epsilon-prime", type=float, default=0.04)
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="bcjlsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("honest", parents=[common], help="honest commit/unveil rounds")
    sub.add_parser("security", parents=[common], help="security-against-Bob report")
    sub.add_parser("attack", parents=[common], help="exact purification attack report")
    verify = sub.add_parser("verify", parents=[common], help="random property sweep")
    verify.add_argument("--replay", default=None, help="re-run a stored failure instance")
    verify.add_argument("--failure-out", default=None, help="where to write a failing instance")
    sweep = sub.add_parser("sweep", parents=[common], help="security + attack over many contexts")
    sweep.add_argument("--spec", required=True, help="JSON list of contexts with overrides")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(args.context, args.seed, args.epsilon, args.epsilon_prime,
                           args.trials, args.out, args.format)
        if args.command == "honest":
            return cmd_honest(config)
        if args.command == "security":
            return cmd_security(config)
        if args.command == "attack":
            return cmd_attack(config)
        if args.command == "verify":
            if args.replay:
                return cmd_replay(args.replay)
            return cmd_verify(config, args.failure_out)
        if args.command == "sweep":
            return cmd_sweep(SweepSpec.load(args.spec, config), config)
    except (ConfigError, FeasibilityError, ValidationError, ValueError, KeyError, OSError) as exc:
        print(f"bcjlsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
