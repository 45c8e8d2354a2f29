import argparse
import functools
import os
import sys

from prompt_toolkit import HTML, print_formatted_text

from .argparse_validators import (
    check_existing_directory,
    check_existing_file,
    check_non_negative_integer,
)
from .exceptions import (
    ConfigException,
    DatasetIOException,
    HeaderMismatchException,
    ModelBundleException,
    OranFaultException,
    PipelineStageException,
    StratificationException,
    TickOutOfRangeException,
)
from .operators.pipeline_operator import DATASET_FILE, PipelineOperator
from .run_config import load_config
from .version import version

EXIT_SUCCESS = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


def _error(message: str):
    print_formatted_text(HTML("<ansired>{}</ansired>").format(message), file=sys.stderr)


def fault_exception(function):
    """
    Render library exceptions as one red line and turn them into exit codes,
    0 on success, 1 for usage or configuration errors and 2 for failures
    """

    @functools.wraps(function)
    def wrapper(*args, **kwargs) -> int:
        try:
            function(*args, **kwargs)
            return EXIT_SUCCESS
        except ConfigException as e:
            _error(f"Invalid configuration {e.field_path}: {e.message}")
            return EXIT_USAGE
        except TickOutOfRangeException as e:
            _error(str(e))
            return EXIT_USAGE
        except StratificationException as e:
            _error(f"Cannot stratify the windows. {e}")
        except HeaderMismatchException as e:
            _error(f"Dataset does not match the schema. {e}")
        except DatasetIOException as e:
            _error(str(e))
        except ModelBundleException as e:
            _error(f"Invalid model bundle: {e}")
        except PipelineStageException as e:
            _error(f"Pipeline failed: {e}")
        except OranFaultException as e:
            _error(str(e))
        return EXIT_FAILURE

    return wrapper


class CommandParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_operator(args: argparse.Namespace) -> PipelineOperator:
    """
    :raises: ConfigException
    """
    config = load_config(args.config).with_overrides(seed=args.seed, workdir=args.out)
    return PipelineOperator(config)


def _dataset(args: argparse.Namespace, operator: PipelineOperator) -> str:
    return args.dataset or os.path.join(operator.workdir, DATASET_FILE)


def build_command_parser() -> argparse.ArgumentParser:
    """
    Returns an ArgParse capable of decoding and executing the pipeline commands
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", type=check_existing_file, help="INI configuration file"
    )
    common.add_argument(
        "--seed", type=check_non_negative_integer, help="Overrides run.seed"
    )
    common.add_argument("--out", help="Work directory, overrides paths.workdir")
    common.add_argument(
        "--verbose", "-v", action="store_true", default=False, help="Debug logging"
    )

    command_parser = CommandParser(
        prog="oran-fault-cli",
        description="Simulate O-RAN telemetry and predict faults ahead of time",
    )
    command_parser.add_argument(
        "--version", action="version", version=f"%(prog)s {version}"
    )
    subparsers = command_parser.add_subparsers(dest="command", required=True)

    @fault_exception
    def simulate(args):
        build_operator(args).simulate()

    @fault_exception
    def train(args):
        operator = build_operator(args)
        operator.train(_dataset(args, operator))

    @fault_exception
    def evaluate(args):
        operator = build_operator(args)
        operator.evaluate(_dataset(args, operator))

    @fault_exception
    def predict(args):
        operator = build_operator(args)
        operator.predict(
            _dataset(args, operator), args.model or operator.model_directory, args.tick
        )

    parser_simulate = subparsers.add_parser(
        "simulate", parents=[common], help="Simulate telemetry under injected faults"
    )
    parser_simulate.set_defaults(func=simulate)

    for name, function, help_text in (
        ("train", train, "Train the pipeline on a whole dataset"),
        ("evaluate", evaluate, "Stratified cross validation of the pipeline"),
        ("predict", predict, "Predict the fault m seconds after a tick"),
    ):
        subparser = subparsers.add_parser(name, parents=[common], help=help_text)
        subparser.add_argument(
            "--dataset",
            type=check_existing_file,
            help=f"Dataset CSV, <workdir>/{DATASET_FILE} by default",
        )
        subparser.set_defaults(func=function)
        if name == "predict":
            subparser.add_argument(
                "--model",
                type=check_existing_directory,
                help="Model bundle directory, <workdir>/model by default",
            )
            subparser.add_argument(
                "--tick", type=check_non_negative_integer, required=True
            )

    return command_parser
