import argparse
from pathlib import Path

from craftforecast.util.terminal import bold, status_box

SPLITS = ["train", "val", "test"]


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """
    Defines the CLI input, writes any requested help text and parses the input.
    Exits if --help was invoked.
    """
    parser = argparse.ArgumentParser(
        prog="craft",
        description=f"""{bold("*")} Generate a synthetic hotel booking world, train the CRAFT forecaster
        on it and evaluate, ablate or compare it with a label-only baseline.

        {bold("*")} Config files are YAML with keys matching the world or training config fields,
        unknown keys are rejected. Exit codes: 0 success, 2 config error, 3 data error,
        4 numeric failure.""",
    )

    subparsers = parser.add_subparsers(dest="command", required=True, metavar="")
    subparsers.metavar = "COMMAND"

    def add_output_params(p: argparse.ArgumentParser):
        p.add_argument(
            "--json-output",
            help="Write output as one line of json per logging event.",
            action="store_true",
            default=False,
        )
        p.add_argument(
            "--log-level",
            default="INFO",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            type=str.upper,
            help="Use DEBUG,INFO,WARNING or ERROR (default: INFO)",
        )

    def add_train_params(p: argparse.ArgumentParser):
        p.add_argument("--config", type=Path, help="training config (default: built-in defaults)")
        p.add_argument("--data", type=Path, help="dataset directory written by generate (default: data_dir of the config)")
        p.add_argument("--seed", type=int, help="override the seed of the training config")

    p_generate = subparsers.add_parser("generate", help="generate a synthetic world and its dataset")
    p_generate.add_argument("--config", type=Path, help="world config (default: the default world)")
    p_generate.add_argument("--seed", type=int, required=True, help="unsigned 64-bit seed")
    p_generate.add_argument("--out", type=Path, required=True, help="dataset directory")
    add_output_params(p_generate)

    p_train = subparsers.add_parser("train", help="train a model, writes model.ckpt and history.txt")
    add_train_params(p_train)
    p_train.add_argument("--out", type=Path, help="run directory (default: out_dir of the config)")
    add_output_params(p_train)

    p_eval = subparsers.add_parser("eval", help="score a checkpoint on one split")
    p_eval.add_argument("--checkpoint", type=Path, required=True)
    p_eval.add_argument("--data", type=Path, required=True)
    p_eval.add_argument("--split", choices=SPLITS, default="test")
    p_eval.add_argument("--report", type=Path, required=True)
    add_output_params(p_eval)

    p_predict = subparsers.add_parser("predict", help="write per-hotel forecasts, including the stage forecasts")
    p_predict.add_argument("--checkpoint", type=Path, required=True)
    p_predict.add_argument("--data", type=Path, required=True)
    p_predict.add_argument("--split", choices=SPLITS, default="test")
    p_predict.add_argument("--out", type=Path, required=True)
    add_output_params(p_predict)

    p_ablate = subparsers.add_parser("ablate", help="train and test the four model variants over several seeds")
    add_train_params(p_ablate)
    p_ablate.add_argument("--seeds", type=int, default=5, help="number of seeds (default: 5)")
    p_ablate.add_argument("--out", type=Path, required=True, help="table file")
    add_output_params(p_ablate)

    p_baseline = subparsers.add_parser("baseline", help="train and test the label-only DLinear baseline")
    add_train_params(p_baseline)
    p_baseline.add_argument("--report", type=Path, required=True)
    add_output_params(p_baseline)

    p_diagnose = subparsers.add_parser("diagnose", help="data diagnostics")
    diagnose_sub = p_diagnose.add_subparsers(dest="diagnostic", required=True, metavar="DIAGNOSTIC")
    p_pearson = diagnose_sub.add_parser("pearson", help="label/booking correlation per forecast prefix")
    p_pearson.add_argument("--data", type=Path, required=True)
    p_pearson.add_argument("--pmax", type=int, required=True)
    p_pearson.add_argument("--out", type=Path, required=True)
    add_output_params(p_pearson)

    return parser.parse_args(argv)


def cli(argv: list[str] | None = None) -> int:
    args = parse_args(argv)

    # If help was invoked, parse_args will exit. Imports go after parse_args so that help is generated as fast as possible
    import logging
    import craftforecast.logging as craft_logging
    from craftforecast.common import CraftException

    run_dir = args.out if args.command == "train" else None
    craft_logging.setup_logging(run_dir, args.log_level, json_output=args.json_output)
    logger = logging.getLogger("craftforecast.cli")

    try:
        run_dir = run(args) or run_dir
    except CraftException as e:
        logger.error(f"{args.command} failed: {e.args[0]}")
        if run_dir is not None:
            print(f"{status_box(False)} {run_dir}\t fail: {e.args[0]}")
        return e.exit_code
    except Exception:
        logger.error(f"{args.command} failed", exc_info=True)
        return 1
    if run_dir is not None:
        print(f"{status_box(True)} {run_dir}\t success")
    return 0


def run(args: argparse.Namespace) -> Path | None:
    """
    Runs the command, returns the run directory of a training run.
    """
    from craftforecast.config import config_path, load_train_config, load_world_config
    from craftforecast.data.dataset import build_dataset, load_dataset_dir, save_dataset_dir
    import craftforecast.logging as craft_logging
    from craftforecast.util import json

    def write(path: Path, obj: object) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(json.dumpb(obj, pretty=True))

    if args.command == "generate":
        world_config = load_world_config(args.config)
        save_dataset_dir(build_dataset(world_config, args.seed), args.out)

    elif args.command == "train":
        from craftforecast.execution.train import train

        config = load_train_config(args.config, seed=args.seed, data_dir=args.data, out_dir=args.out)
        out_dir = config_path(config, "out_dir", "--out")
        if args.out is None:
            craft_logging.setup_logging(out_dir, args.log_level, json_output=args.json_output)
        train(config, load_dataset_dir(config_path(config, "data_dir", "--data")), out_dir=out_dir)
        return out_dir

    elif args.command in ("eval", "predict"):
        from craftforecast.execution.checkpoint import load_checkpoint
        from craftforecast.execution.evaluate import evaluate
        from craftforecast.execution.predict import write_predictions

        checkpoint = load_checkpoint(args.checkpoint)
        dataset = load_dataset_dir(args.data)
        report, predictions = evaluate(checkpoint.params(), checkpoint.config, dataset.split(args.split), checkpoint.scale)
        if args.command == "eval":
            write(args.report, report)
        else:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            write_predictions(predictions, args.out)

    elif args.command == "ablate":
        from craftforecast.execution.ablation import run_ablation
        from craftforecast.util.terminal import format_table

        config = load_train_config(args.config, seed=args.seed, data_dir=args.data)
        seeds = [config.seed + i for i in range(args.seeds)]
        table = run_ablation(config, load_dataset_dir(config_path(config, "data_dir", "--data")), seeds)
        write(args.out, table)
        print(
            format_table(
                ["variant", "wMAPE", "MAE", "RMSE", "IWR", "PHDI"],
                [[r.variant.value, r.report.wmape, r.report.mae, r.report.rmse, r.report.iwr, r.report.phdi] for r in table.rows],
            )
        )

    elif args.command == "baseline":
        from craftforecast.execution.baseline import baseline_dlinear

        config = load_train_config(args.config, seed=args.seed, data_dir=args.data)
        _, report = baseline_dlinear(config, load_dataset_dir(config_path(config, "data_dir", "--data")))
        write(args.report, report)

    elif args.command == "diagnose":
        from craftforecast.execution.diagnose import pearson_curve

        write(args.out, pearson_curve(load_dataset_dir(args.data), args.pmax))

    return None
