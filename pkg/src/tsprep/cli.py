"""Command-line front end.

Subcommands: ``fetch`` (download raw sources), ``prepare`` (run the
pipeline and write a prepared directory), ``export`` (convert a prepared
directory, default f32), ``info`` (shapes, channels, missingness) and
``validate`` (re-check SHA256 of a cache or export directory).

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
The cache root defaults to ``--path``, then ``TSPREP_CACHE``, then the
working directory.
"""

import argparse
import os
import sys
from pathlib import Path

import tsprep
from tsprep import cache_store, export, fetch
from tsprep.pipeline import BuildError, ConfigError, PipelineConfig, build

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _default_path() -> str:
    return os.environ.get("TSPREP_CACHE", ".")


def _parse_missing(text: str):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"--missing expects a number or comma list, got {text!r}") from None
    if not values:
        raise ConfigError("--missing expects at least one value")
    return values[0] if len(values) == 1 and "," not in text else values


def _parse_int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(p.strip()) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated integers, got {text!r}") from None


def _parse_channel_means(text: str) -> dict[int, float]:
    means: dict[int, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            key, value = item.split("=")
            means[int(key.strip())] = float(value.strip())
        except ValueError:
            raise ConfigError(
                f"--channel-means expects entries like 1=4.5, got {item!r}"
            ) from None
    return means


def _add_prepare_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("dataset", help="UEA problem name or physionet2012/2019/2019binary")
    p.add_argument("--split", default="train", choices=["train", "val", "test"])
    p.add_argument("--train-prop", type=float, required=True)
    p.add_argument("--val-prop", type=float, default=None)
    p.add_argument("--missing", default="0", help="proportion to drop, or one per channel")
    p.add_argument("--impute", default="none", choices=["none", "zero", "mean", "forward"])
    p.add_argument("--categorical", default="", help="comma list of channel indices")
    p.add_argument("--channel-means", default="", help="overrides like 1=4.5,3=7.2")
    p.add_argument("--time", action=argparse.BooleanOptionalAction, default=True,
                   help="append the time stamp as channel 0")
    p.add_argument("--mask", action="store_true", help="append observational masks")
    p.add_argument("--delta", action="store_true", help="append time deltas")
    p.add_argument("--standardise", action="store_true")
    p.add_argument("--overwrite-cache", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--path", default=None, help="cache root (or TSPREP_CACHE)")
    p.add_argument("--workers", type=int, default=1, help="parser threads")
    p.add_argument("--out", default=None, help="prepared-directory location")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsprep",
        description="Prepare irregular time series benchmarks as framework-neutral tensors.",
    )
    parser.add_argument("--version", action="version", version=f"tsprep {tsprep.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fetch = sub.add_parser("fetch", help="download raw source archives")
    p_fetch.add_argument("dataset")
    p_fetch.add_argument("--path", default=None)

    p_prepare = sub.add_parser("prepare", help="run the pipeline and write tensors")
    _add_prepare_args(p_prepare)

    p_export = sub.add_parser("export", help="convert a prepared directory")
    p_export.add_argument("entry", help="prepared directory")
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--dtype", default="f32", choices=["f32", "f64"])
    p_export.add_argument("--format", default="tsprep", dest="fmt")

    p_info = sub.add_parser("info", help="describe a prepared directory")
    p_info.add_argument("entry")

    p_validate = sub.add_parser("validate", help="re-check SHA256 checksums")
    p_validate.add_argument("entry")
    return parser


def cmd_fetch(args) -> int:
    root = Path(args.path or _default_path())
    try:
        dest = fetch.fetch_dataset(root, args.dataset)
    except KeyError as err:
        print(f"error: {err.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (fetch.FetchError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"raw sources ready under {dest}")
    return EXIT_OK


def cmd_prepare(args) -> int:
    path = args.path or _default_path()
    config = PipelineConfig(
        dataset=args.dataset,
        split=args.split,
        train_prop=args.train_prop,
        val_prop=args.val_prop,
        missing=_parse_missing(args.missing),
        impute=args.impute,
        categorical=_parse_int_list(args.categorical, "--categorical"),
        channel_means=_parse_channel_means(args.channel_means),
        time=args.time,
        mask=args.mask,
        delta=args.delta,
        standardise=args.standardise,
        overwrite_cache=args.overwrite_cache,
        path=path,
        seed=args.seed,
    )
    dataset = build(config, workers=args.workers)
    out_dir = Path(args.out) if args.out else Path(path) / ".torchtime" / "prepared" / config.key
    manifest_path = export.write_prepared(dataset, config, out_dir)
    sizes = ", ".join(f"{s}={dataset.split_size(s)}" for s in dataset.splits)
    print(f"prepared {dataset.name}: {sizes}; channels={dataset.layout.n_channels}")
    print(f"manifest: {manifest_path}")
    return EXIT_OK


def cmd_export(args) -> int:
    manifest_path = export.export_prepared(args.entry, args.out, dtype=args.dtype, fmt=args.fmt)
    print(f"exported to {Path(args.out)} ({args.dtype}); manifest: {manifest_path}")
    return EXIT_OK


def cmd_info(args) -> int:
    manifest = export.read_manifest(args.entry)
    print(f"dataset: {manifest['dataset']}")
    print(f"tool: {manifest['tool']} {manifest['tool_version']}")
    print(f"seed: {manifest['seed']}")
    print(f"split sizes: {manifest['split_sizes']}")
    print(f"dropped records: {manifest.get('dropped_records', 0)}")
    print("channels:")
    for name, kind in zip(manifest["channels"], manifest["channel_kinds"]):
        print(f"  {name} [{kind}]")
    print("files:")
    for name, entry in sorted(manifest["files"].items()):
        print(f"  {name}: shape={tuple(entry['shape'])} dtype={entry['dtype']}")
    rates = export.missingness_rates(Path(args.entry))
    for split, per_channel in rates.items():
        print(f"missingness ({split}):")
        for name, rate in per_channel.items():
            print(f"  {name}: {rate:.4f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    entry = Path(args.entry)
    if (entry / "checksums.txt").exists():
        bad = cache_store.verify(entry)
    else:
        bad = export.verify_manifest_files(entry)
    if bad:
        for name in bad:
            print(f"corrupt: {entry / name}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{entry}: all checksums match")
    return EXIT_OK


_COMMANDS = {
    "fetch": cmd_fetch,
    "prepare": cmd_prepare,
    "export": cmd_export,
    "info": cmd_info,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (BuildError, export.ManifestError, cache_store.CacheMiss, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
