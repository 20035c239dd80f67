"""
Command-line front end
Subcommands validate, analyze, stability and robustness; reports go to stdout and --out, logs to stderr
"""
import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import yaml
from pydantic import ValidationError

from .config import certification_margin, format_number, get_settings
from .core.contraction import contraction_report, per_step_ratios
from .core.control import BeliefFeedbackPolicy, RobustnessSettings, robustness_gap, solve_policy
from .core.errors import (
    CertificationError,
    ModelParseError,
    ModelValidationError,
    PomdpError,
)
from .core.logger import get_logger, setup_logging
from .core.metrics import stability_trace
from .core.model import PomdpModel, check_absolute_continuity, load_model, read_model_unchecked, validate
from .core.observability import observability_report
from .core.policies import ControlPolicy, make_policy
from .core.simulation import Enumerate, Method, MonteCarlo
from .models.schemas import (
    CostDecomposition,
    EstimationMethod,
    ExperimentConfig,
    PolicyKind,
    RobustnessReport,
    StabilityTrace,
    TraceForm,
)

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2

STABILITY_COLUMNS = ["n", "E_tv", "E_tv_se", "envelope_2alpha_n", "relative_entropy", "pinsker_rhs"]
DECOMPOSITION_COLUMNS = [
    "n", "transient", "transient_se", "strategic", "strategic_se",
    "approximation", "approximation_se", "total", "total_se",
]


class ConfigError(Exception):
    """Experiment configuration could not be read or is invalid"""


# =====================================================
# CONFIGURATION
# =====================================================

def _read_config_file(path: str) -> Dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror or e}") from e
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot parse config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return data


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Settings defaults, then the config file, then explicit flags"""
    settings = get_settings()
    values: Dict[str, Any] = {"samples": settings.default_samples, "seed": settings.default_seed,
                              "decomposition_steps": settings.decomposition_steps}
    if args.config:
        values.update(_read_config_file(args.config))

    flags = {
        "model_path": args.model, "mu": args.mu, "nu": args.nu, "horizon": args.horizon,
        "samples": args.samples, "seed": args.seed, "method": args.method,
        "output_dir": args.out, "criterion": getattr(args, "criterion", None),
    }
    values.update({k: v for k, v in flags.items() if v is not None})

    source = dict(values.get("policy_source") or {})
    if getattr(args, "policy", None):
        source["kind"] = args.policy
    if args.grid is not None:
        source["grid"] = args.grid
    if getattr(args, "action", None) is not None:
        source["action"] = args.action
    if getattr(args, "policy_seed", None) is not None:
        source["seed"] = args.policy_seed
    values["policy_source"] = source

    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "config"
        raise ConfigError(f"{where}: {first['msg']}") from e


def _load_experiment_model(config: ExperimentConfig) -> PomdpModel:
    model = load_model(config.model_path)
    if len(config.mu) != model.num_states:
        raise ConfigError(f"mu has {len(config.mu)} entries, model has {model.num_states} states")
    return model


def _method(config: ExperimentConfig) -> Method:
    settings = get_settings()
    if config.method == EstimationMethod.ENUMERATE:
        return Enumerate(limit=settings.enumeration_limit)
    return MonteCarlo(samples=config.samples, seed=config.seed,
                      partition_size=settings.mc_partition_size, workers=settings.mc_workers)


def _policy(model: PomdpModel, config: ExperimentConfig) -> ControlPolicy:
    source = config.policy_source
    if source.kind == PolicyKind.SOLVE:
        resolution = source.grid or get_settings().grid_resolution
        return BeliefFeedbackPolicy(solve_policy(model, resolution), config.nu)
    return make_policy(source.kind.value, action=source.action, seed=source.seed)


# =====================================================
# OUTPUT
# =====================================================

def _write_csv(path: Path, header: List[str], rows: List[List[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, int) else format_number(v) for v in row])


def _write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def stability_rows(trace: StabilityTrace) -> List[List[Any]]:
    return [[r.n, r.e_tv, r.e_tv_se, r.envelope, r.relative_entropy, r.pinsker_rhs] for r in trace.rows]


def decomposition_rows(series: Sequence[CostDecomposition]) -> List[List[Any]]:
    return [
        [d.n, d.transient.value, d.transient.std_error, d.strategic.value, d.strategic.std_error,
         d.approximation.value, d.approximation.std_error, d.total.value, d.total.std_error]
        for d in series
    ]


# =====================================================
# COMMANDS
# =====================================================

def cmd_validate(args: argparse.Namespace) -> int:
    """Exit 0 iff the model file satisfies every invariant"""
    model = read_model_unchecked(args.model)
    report = validate(model)
    if report.ok:
        print(f"{args.model}: OK ({model.num_states} states, {model.num_obs} observations, "
              f"{model.num_actions} actions)")
        return EXIT_OK
    print(f"{args.model}: {len(report.violations)} violation(s)")
    for line in report.lines():
        print(f"  - {line}")
    return EXIT_FAILURE


def cmd_analyze(args: argparse.Namespace) -> int:
    """Contraction and observability report of a model"""
    model = load_model(args.model)
    contraction = contraction_report(model)
    observability = observability_report(model)
    if args.format == "json":
        payload = {"contraction": contraction.model_dump(mode="json"),
                   "observability": observability.model_dump(mode="json")}
        print(json.dumps(payload, indent=2, sort_keys=True))
        return EXIT_OK

    for u, delta in enumerate(contraction.delta_T_per_action):
        print(f"delta(T_{u})          = {format_number(delta)}")
    print(f"delta_tilde(T)       = {format_number(contraction.delta_T_inf)}")
    print(f"delta(Q)             = {format_number(contraction.delta_Q)}")
    print(f"alpha                = {format_number(contraction.alpha)}")
    print(f"exponentially stable = {'yes' if contraction.exponentially_stable else 'no'}")
    print(f"rank(Q)              = {observability.rank_Q}")
    print(f"one-step observable  = {'yes' if observability.observable else 'no'}")
    print(f"worst residual       = {format_number(observability.worst_residual)}")
    print(f"worst |g|_inf        = {format_number(observability.worst_g_sup_norm)}")
    return EXIT_OK


def cmd_stability(args: argparse.Namespace) -> int:
    """Stability trace with in-run certification against 2 alpha^n"""
    config = build_config(args)
    model = _load_experiment_model(config)
    check_absolute_continuity(config.mu, config.nu)
    form = TraceForm(args.form)
    trace = stability_trace(model, config.mu, config.nu, _policy(model, config), config.horizon,
                            _method(config), form=form)

    out = Path(config.output_dir)
    _write_csv(out / "stability.csv", STABILITY_COLUMNS, stability_rows(trace))
    ratios = per_step_ratios(trace, trace.alpha)
    _write_json(out / "stability.json", {
        "alpha": trace.alpha,
        "form": trace.form.value,
        "method": trace.method.value,
        "samples": trace.samples,
        "seed": trace.seed,
        "rows": [r.model_dump(mode="json") for r in trace.rows],
        "per_step_ratios": [r.model_dump(mode="json") for r in ratios],
        "tolerances": {"e_tv": "e_tv_se per row; certified with 3 standard errors + 1e-10"},
    })
    print(f"wrote {out / 'stability.csv'} ({len(trace.rows)} rows, alpha={format_number(trace.alpha)})")

    if trace.alpha < 1.0:
        failures = [
            (r.n, r.e_tv, r.envelope + certification_margin(r.e_tv_se))
            for r in trace.rows
            if r.e_tv > r.envelope + certification_margin(r.e_tv_se)
        ]
        if failures:
            raise CertificationError("E||pi^mu_n - pi^nu_n||_TV <= 2 alpha^n", failures)
        print("certified: every E_tv lies below 2 alpha^n within its tolerance")
    return EXIT_OK


def cmd_robustness(args: argparse.Namespace) -> int:
    """Robustness report with all bounds and the decomposition series"""
    config = build_config(args)
    model = _load_experiment_model(config)
    check_absolute_continuity(config.mu, config.nu)
    overrides: Dict[str, Any] = {"method": _method(config), "decomposition_steps": config.decomposition_steps}
    if config.policy_source.grid:
        overrides["grid_resolution"] = config.policy_source.grid
    if args.horizon is not None:
        overrides["horizon"] = config.horizon
        overrides["average_horizon"] = max(config.horizon, 2)
    settings = RobustnessSettings.from_settings(**overrides)

    report: RobustnessReport = robustness_gap(model, config.mu, config.nu, config.criterion, settings)

    out = Path(config.output_dir)
    _write_json(out / "robustness.json", report.model_dump(mode="json"))
    if report.decomposition_series:
        _write_csv(out / "decomposition.csv", DECOMPOSITION_COLUMNS,
                   decomposition_rows(report.decomposition_series))

    gap = report.measured_gap
    print(f"measured gap          = {format_number(gap.value)} +/- {format_number(gap.std_error)}")
    print(f"continuity bound      = {format_number(report.continuity_bound)}")
    if report.prior_independent is not None:
        print(f"prior-independent     = {format_number(report.prior_independent.bound)}")
    print(f"span estimate         = {format_number(report.span_estimate)}")
    print(f"grid slack            = {format_number(report.grid_slack)}")
    return EXIT_OK


# =====================================================
# PARSER
# =====================================================

def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON or YAML file mirroring ExperimentConfig")
    parser.add_argument("--model", help="Model file (JSON)")
    parser.add_argument("--mu", help="True prior, comma-separated")
    parser.add_argument("--nu", help="Design prior, comma-separated")
    parser.add_argument("--grid", type=int, help="Belief grid resolution for solved policies")
    parser.add_argument("--horizon", type=int, help="Last time step / evaluation horizon")
    parser.add_argument("--samples", type=int, help="Monte Carlo paths")
    parser.add_argument("--seed", type=int, help="Monte Carlo seed")
    parser.add_argument("--method", choices=[m.value for m in EstimationMethod])
    parser.add_argument("--out", help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pomdp-robustness",
        description="Filter stability and prior-robustness experiments on finite POMDPs",
    )
    parser.add_argument("--log-level", help="Override LOG_LEVEL")
    parser.add_argument("--log-format", choices=["json", "text"], help="Override LOG_FORMAT")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="Check a model file")
    p.add_argument("--model", required=True)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("analyze", help="Contraction and observability report")
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("stability", help="Expected filter merging against 2 alpha^n")
    _experiment_flags(p)
    p.add_argument("--policy", choices=[k.value for k in PolicyKind])
    p.add_argument("--action", type=int, help="Action for --policy fixed_action")
    p.add_argument("--policy-seed", type=int, help="Seed for --policy uniform_random")
    p.add_argument("--form", choices=[f.value for f in TraceForm], default=TraceForm.FILTER.value)
    p.set_defaults(handler=cmd_stability)

    p = sub.add_parser("robustness", help="Cost of a mis-specified prior and its bounds")
    _experiment_flags(p)
    p.add_argument("--criterion", choices=["discounted", "average"])
    p.set_defaults(handler=cmd_robustness)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    setup_logging(args.log_level or settings.log_level, args.log_format or settings.log_format)

    try:
        return args.handler(args)
    except (ModelParseError, ConfigError, OSError) as e:
        logger.error("input_error", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ModelValidationError as e:
        for line in e.report.lines():
            print(f"  - {line}", file=sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except PomdpError as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
