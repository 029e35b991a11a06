"""
The quarticlab command line.

    quarticlab freud --t -1 --g 1 --N 400 --n-max 200
    quarticlab hm --ymin -10 --ymax 8 --mesh 2000
    quarticlab kernel --regime bulk --t-shift-y 0 --N 200 --center 0.707
    quarticlab selftest
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections.abc import Sequence
from typing import Any, NoReturn

from quarticlab.application import usecases
from quarticlab.application.config import settings
from quarticlab.exceptions import QuarticLabException

logger = logging.getLogger(__name__)

THREADS_ENVIRONMENT_VARIABLE = "QUARTICLAB_THREADS"

_VERBOSITY = (logging.WARNING, logging.INFO, logging.DEBUG)

ERROR_STATUS = 2


def diagnostic(error: str, message: str) -> str:
    """
    The one-line machine-readable error report written to standard error.
    """
    return json.dumps({"error": error, "message": message})


class ArgumentParser(argparse.ArgumentParser):
    """
    Reports usage errors as a JSON diagnostic instead of argparse's plain usage text.

    Subcommand parsers are built from the same class, so their errors are reported alike.
    """

    def error(self, message: str) -> NoReturn:
        self.exit(ERROR_STATUS, diagnostic("UsageError", message) + "\n")


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file of option names to values.")
    common.add_argument("--output", default=None, help="Directory for the artifacts.")
    common.add_argument("--format", default=None, choices=["csv", "json"])
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log at INFO (-v) or DEBUG (-vv).",
    )

    model = ArgumentParser(add_help=False)
    model.add_argument("--t", type=float, default=None)
    model.add_argument("--g", type=float, default=None)
    model.add_argument("--N", type=int, default=None)

    ap = ArgumentParser(
        prog="quarticlab",
        description="Experiments on the quartic unitary matrix model near its critical point.",
    )
    subparsers = ap.add_subparsers(dest="command", required=True)

    freud = subparsers.add_parser(
        "freud", parents=[common, model], help="Recurrence coefficients R_n."
    )
    freud.add_argument("--n-max", dest="n_max", type=int, default=None)
    freud.add_argument(
        "--method", default=None, choices=["forward", "variational", "quadrature-oracle"]
    )
    freud.add_argument("--tol", type=float, default=None)

    hm = subparsers.add_parser(
        "hm", parents=[common], help="The Hastings-McLeod solution and its derived tables."
    )
    hm.add_argument("--ymin", "--y-min", dest="y_min", type=float, default=None)
    hm.add_argument("--ymax", "--y-max", dest="y_max", type=float, default=None)
    hm.add_argument("--mesh", type=int, default=None)
    hm.add_argument("--tol", type=float, default=None)

    phi = subparsers.add_parser(
        "phi", parents=[common], help="The real-axis solution of the critical Psi system."
    )
    phi.add_argument("--y", type=float, default=None)
    phi.add_argument("--n-parity", dest="n_parity", type=int, default=None)
    phi.add_argument("--Z-far", dest="Z_far", type=float, default=None)

    kernel = subparsers.add_parser(
        "kernel", parents=[common], help="Finite-N kernel against its scaling limit."
    )
    kernel.add_argument("--regime", default=None, choices=["bulk", "edge", "critical"])
    kernel.add_argument("--t-shift-y", "--y", dest="y", type=float, default=None)
    kernel.add_argument("--g", type=float, default=None)
    kernel.add_argument("--N", type=int, default=None)
    kernel.add_argument("--center", type=float, default=None)

    compare = subparsers.add_parser(
        "compare", parents=[common], help="Semiclassical approximants against exact psi."
    )
    compare.add_argument("--t", type=float, default=None)
    compare.add_argument("--g", type=float, default=None)
    compare.add_argument("--N-list", dest="N_list", type=int, nargs="+", default=None)
    compare.add_argument("--k-range", dest="k_range", type=int, nargs="+", default=None)
    compare.add_argument("--points", type=int, default=None)
    compare.add_argument("--d1", type=float, default=None)
    compare.add_argument("--d2", type=float, default=None)

    density = subparsers.add_parser(
        "density", parents=[common, model], help="Kernel diagonal against the limiting density."
    )
    density.add_argument("--points", type=int, default=None)

    selftest = subparsers.add_parser(
        "selftest", parents=[common], help="Run the fast invariant suite."
    )
    selftest.add_argument(
        "--perturb-R",
        dest="perturb_R",
        type=float,
        default=None,
        help="Shift every R_n by this amount before the Lax check.",
    )
    selftest.add_argument(
        "--reduced-nodes",
        dest="reduced_nodes",
        action="store_true",
        default=None,
        help="Compute the recurrence on a deliberately coarse quadrature rule.",
    )
    return ap


def load_config(
    args: argparse.Namespace, environ: dict[str, str] | None = None
) -> usecases.ExperimentConfig:
    """
    Merge the option sources. Flags win over the thread variable, which wins over the file.

    Raises:
        ConfigValidationError, if any source holds an unknown option or a bad value.
    """
    environ = dict(os.environ) if environ is None else environ
    values: dict[str, Any] = {}
    if args.config:
        values.update(settings.CONFIG_FILE_READER.read(args.config))
    if THREADS_ENVIRONMENT_VARIABLE in environ:
        values["threads"] = environ[THREADS_ENVIRONMENT_VARIABLE]
    flags = {
        name: value
        for name, value in vars(args).items()
        if name not in ("command", "config", "verbose") and value is not None
    }
    values.update(flags)
    return usecases.ExperimentConfig.from_mapping(args.command, values)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=_VERBOSITY[min(args.verbose, len(_VERBOSITY) - 1)],
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args)
        logger.debug(f"Resolved config: {config}")
        summary = usecases.run(config)
    except QuarticLabException as error:
        print(diagnostic(type(error).__name__, str(error)), file=sys.stderr)
        return ERROR_STATUS

    for check in summary.checks:
        print(check)
    for path in summary.paths:
        print(path)
    return 0 if summary.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
