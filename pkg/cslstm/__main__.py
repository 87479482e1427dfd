import logging
import sys

from cslstm.error import CSLSTMError, ConfigError
from cslstm.log import get_logger

ABLATIONS = {
    "disable_seasonal": ("model.seasonal", "false"),
    "disable_contextual": ("model.contextual", "false"),
    "disable_covariate": ("model.covariate", "false"),
    "disable_denoise": ("train.denoise", "false"),
    "disable_mask": ("train.mask", "false"),
}


def parse_overrides(pairs):
    """ ``key=value`` strings from --set into a mapping """
    overrides = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError("--set expects key=value, got {!r}".format(pair))
        overrides[key.strip()] = value.strip()
    return overrides


def build_parser():
    import argparse

    parser = argparse.ArgumentParser(prog="cslstm", description="Univariate time-series anomaly detection.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
    commands = parser.add_subparsers(dest="command", required=True)

    denoise = commands.add_parser("denoise", help="Wavelet-denoise a series")
    denoise.add_argument("--in", dest="in_path", required=True, help="Input CSV")
    denoise.add_argument("--out", dest="out_path", required=True, help="Output CSV")
    denoise.add_argument("--config", help="Configuration file")

    train = commands.add_parser("train", help="Train a model and write a checkpoint")
    train.add_argument("--config", help="Configuration file")
    train.add_argument("--in", dest="in_path", help="Training CSV (default: paths.train_csv)")
    train.add_argument("--out-ckpt", dest="checkpoint", help="Checkpoint to write (default: paths.checkpoint)")
    train.add_argument("--log", dest="log_path", help="Training log (default: paths.train_log)")
    for flag in ABLATIONS:
        train.add_argument("--" + flag.replace("_", "-"), dest=flag, action="store_true")
    train.add_argument("--set", nargs="+", metavar="KEY=VALUE", help="Override configuration values")

    score = commands.add_parser("score", help="Score a series with a trained checkpoint")
    score.add_argument("--ckpt", required=True, help="Checkpoint")
    score.add_argument("--in", dest="in_path", required=True, help="Input CSV")
    score.add_argument("--out", dest="out_path", required=True, help="Score CSV to write")
    score.add_argument("--config", help="Configuration the checkpoint must match")
    score.add_argument("--set", nargs="+", metavar="KEY=VALUE", help="Override configuration values")

    evaluate = commands.add_parser("eval", help="Best-F1 and Delay-F1 of labeled score files")
    evaluate.add_argument("--in", dest="in_paths", required=True, nargs="+", help="Score CSV(s)")
    evaluate.add_argument("--k", type=int, help="Delay budget (overrides the configuration)")
    evaluate.add_argument("--dataset", help="Delay budget preset: yahoo, kpi, wsd or nab")
    evaluate.add_argument("--out", dest="out_path", help="Write the reports as CSV")
    evaluate.add_argument("--config", help="Configuration file")

    synth = commands.add_parser("synth", help="Generate a labeled synthetic series")
    synth.add_argument("--kind", default="mixed", choices=("point", "slow_rise", "mixed"))
    synth.add_argument("--len", dest="length", type=int, default=20000)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", dest="out_path", required=True)
    synth.add_argument("--config", help="Configuration file (model.seasonal_window sets the period)")
    return parser


def run(args):
    from cslstm import commands
    from cslstm.config import load_config

    overrides = parse_overrides(getattr(args, "set", None))
    for flag, (key, value) in ABLATIONS.items():
        if getattr(args, flag, False):
            overrides[key] = value
    config_path = getattr(args, "config", None)

    if args.command == "denoise":
        commands.cmd_denoise(args.in_path, args.out_path, load_config(config_path, overrides))
    elif args.command == "train":
        result = commands.cmd_train(load_config(config_path, overrides), args.in_path, args.checkpoint, args.log_path)
        print("best epoch {} with validation loss {:.6f}".format(result.best_epoch, result.best_val_loss))
    elif args.command == "score":
        config = load_config(config_path, overrides) if config_path or overrides else None
        commands.cmd_score(args.ckpt, args.in_path, args.out_path, config)
    elif args.command == "eval":
        reports = commands.cmd_eval(args.in_paths, load_config(config_path), args.k, args.dataset, args.out_path)
        for report in reports:
            print(report)
    elif args.command == "synth":
        commands.cmd_synth(args.kind, args.length, args.seed, args.out_path, load_config(config_path))


def main(argv=None):
    """ This is the function that is run from commandline with `cslstm` """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # usage errors share the configuration exit code
        return 1 if e.code else 0
    log = get_logger(logging.DEBUG if args.verbose else logging.INFO)
    try:
        run(args)
    except CSLSTMError as e:
        log.error("%s", e)
        return e.exit_code
    except FileNotFoundError as e:
        log.error("%s", e)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
