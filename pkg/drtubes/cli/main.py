import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from drtubes import config, formatters, funcs
from drtubes.contrasts import DEFAULT_REPS
from drtubes.exceptions import (
    ConfigError,
    DegenerateShapeError,
    DomainError,
    InvalidDesignError,
    NumericalError,
)

logger = logging.getLogger("drtubes")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _common_options() -> argparse.ArgumentParser:
    defaults = config.RunConfig()
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=defaults.seed, help="master seed (64-bit unsigned)")
    parent.add_argument("--kappa", type=int, default=defaults.kappa, help="Monte Carlo sample size")
    parent.add_argument("--alpha", type=float, default=defaults.alpha, help="one-sided level")
    parent.add_argument("--tol", type=float, default=defaults.tol, help="critical value bracket width")
    parent.add_argument("--se-target", type=float, default=defaults.se_target, help="Monte Carlo standard error target")
    parent.add_argument("--max-kappa", type=int, default=defaults.max_kappa, help="largest Monte Carlo sample size")
    parent.add_argument("--threads", type=int, default=defaults.threads, help="worker threads")
    parent.add_argument("--anchor-kappa", type=int, default=defaults.anchor_kappa, help="anchors compared per cap sample")
    parent.add_argument("--grid-size", type=int, default=defaults.grid_size, help="grid points per model")
    parent.add_argument(
        "--anchor-sampling", type=str, default=defaults.anchor_sampling, help="uniform or arclength"
    )
    parent.add_argument(
        "-o",
        "--out",
        type=argparse.FileType("w"),
        default=None,
        help="output file. default is stdout",
    )
    parent.add_argument(
        "--no-runtime", action="store_true", help="leave the runtime out of JSON outputs"
    )
    parent.add_argument("-v", "--verbose", action="count", default=0, help="log to stderr (-vv for debug)")
    return parent


def _build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="drtubes")
    subparsers = parser.add_subparsers(required=True)

    parser_t = subparsers.add_parser("test", parents=[common], help="run the LR trend test on data")
    parser_t.add_argument("data", type=str, help="dose,response CSV file")
    parser_t.add_argument("candidates", type=str, help="candidate models JSON file")
    parser_t.add_argument("--contrasts", type=str, default=None, help="fixed shapes JSON for a contrast test")
    parser_t.add_argument("--contrast-reps", type=int, default=DEFAULT_REPS, help="contrast null simulations")
    parser_t.add_argument("--format", type=str, default="json", choices=["json", "text"], help="output format")
    parser_t.set_defaults(func=test)

    parser_r = subparsers.add_parser("rerun", parents=[common], help="re-run a test report from its inputs")
    parser_r.add_argument("report", type=str, help="report JSON written by 'drtubes test'")
    parser_r.set_defaults(func=rerun)

    parser_c = subparsers.add_parser("critical-value", parents=[common], help="critical value of the LR test")
    parser_c.add_argument("study", type=str, help="study JSON with design and candidates")
    parser_c.set_defaults(func=critical_value)

    parser_p = subparsers.add_parser("power", parents=[common], help="power under a simple alternative")
    parser_p.add_argument("study", type=str, help="study JSON with design, candidates and alternative")
    parser_p.set_defaults(func=power)

    parser_s = subparsers.add_parser("sample-size", parents=[common], help="sample size for a target power")
    parser_s.add_argument("study", type=str, help="study JSON with doses, candidates, truth and effect_size")
    parser_s.set_defaults(func=sample_size)

    parser_b = subparsers.add_parser("benchmark", parents=[common], help="power table of several tests")
    parser_b.add_argument("study", type=str, nargs="?", default=None, help="benchmark JSON; default five scenarios")
    parser_b.add_argument("--builtin", action="store_true", help="use the built-in five-scenario benchmark")
    parser_b.add_argument("--reps", type=int, default=DEFAULT_REPS, help="simulated data sets per contrast test")
    parser_b.set_defaults(func=benchmark)

    parser_v = subparsers.add_parser("curves", parents=[common], help="shape or power curves as CSV")
    parser_v.add_argument("study", type=str, help="study JSON")
    parser_v.add_argument("--kind", type=str, default="shapes", help="shapes or power")
    parser_v.set_defaults(func=curves)
    return parser


def _run_config(args: argparse.Namespace) -> config.RunConfig:
    return config.RunConfig(
        seed=args.seed,
        kappa=args.kappa,
        alpha=args.alpha,
        tol=args.tol,
        max_kappa=max(args.max_kappa, args.kappa),
        se_target=args.se_target,
        threads=args.threads,
        anchor_kappa=args.anchor_kappa,
        grid_size=args.grid_size,
        anchor_sampling=args.anchor_sampling,
    )


def _emit(args: argparse.Namespace, out: Dict[str, Any]) -> None:
    if args.no_runtime:
        out.pop("runtime_seconds", None)
    funcs.write_json(out, args.stream)


def _text_lines(out: Dict[str, Any]) -> List[str]:
    report = out["report"]
    lines = [f"{'model':<40} {'r':>8} {'p adjusted':>22} {'p unadjusted':>22}  gamma"]
    for m in report["models"]:
        lines.append(
            f"{m['model']:<40} {m['r']:8.4f} "
            f"{formatters.pvalue(m['p_adjusted'], m['mc_se']['p_adjusted']):>22} "
            f"{formatters.pvalue(m['p_unadjusted'], m['mc_se']['p_unadjusted']):>22}  "
            f"{formatters.gamma(m['fit']['gamma_hat'])}"
        )
    lines.append(f"R = {report['r']:.4f}, S(R) = {report['lr_statistic']:.6g}, p = {formatters.pvalue(report['p'], report['mc_se'])}")
    if report["r_crit"] is not None:
        lines.append(f"critical value at alpha={report['alpha']}: {report['r_crit']['r']:.4f}")
    if "contrast_test" in out:
        lines.append("")
        for row in out["contrast_test"]["contrasts"]:
            lines.append(f"{row['contrast']:<40} t = {row['t']:8.3f}  p = {formatters.pvalue(row['p_adjusted'])}")
    return lines


def test(args: argparse.Namespace) -> None:
    out = funcs.lr_test_file(args.data, args.candidates, _run_config(args), args.contrasts, args.contrast_reps)
    if args.format == "text":
        args.stream.write("\n".join(_text_lines(out)) + "\n")
    else:
        _emit(args, out)


def rerun(args: argparse.Namespace) -> None:
    _emit(args, funcs.rerun_report(config.read_json(args.report)))


def critical_value(args: argparse.Namespace) -> None:
    _emit(args, funcs.critical_value(config.read_json(args.study), _run_config(args)))


def power(args: argparse.Namespace) -> None:
    _emit(args, funcs.power(config.read_json(args.study), _run_config(args)))


def sample_size(args: argparse.Namespace) -> None:
    _emit(args, funcs.sample_size(config.read_json(args.study), _run_config(args)))


def benchmark(args: argparse.Namespace) -> None:
    if args.study is not None and args.builtin:
        msg = "give either a benchmark file or --builtin, not both"
        raise ConfigError(msg)
    study = {} if args.study is None else config.read_json(args.study)
    funcs.benchmark_table(study, _run_config(args), args.stream, args.reps)


def curves(args: argparse.Namespace) -> None:
    funcs.curves(config.read_json(args.study), args.kind, _run_config(args), args.stream)


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    args.stream = args.out if args.out else sys.stdout

    try:
        args.func(args)  # Call the function for the selected subparser
    except (ConfigError, DomainError, OSError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except (DegenerateShapeError, InvalidDesignError) as e:
        logger.error("%s", e)
        return EXIT_DATA
    except NumericalError as e:
        logger.error("%s", e)
        return EXIT_NUMERICAL
    finally:
        if args.out:
            args.out.close()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
