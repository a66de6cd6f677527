"""Command-line entry points: kernel micro-benchmarks and synthetic training.

    sumreg bench --kernel rsum-cross --variant naive,fft --n 256 --d 4096,8192 --out times.csv
    sumreg train --loss bt-proposed --d 64 --permute on --epochs 30 --out runs/

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import ConfigError, SumregError


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _b_list(text: str) -> list:
    out = []
    for tok in text.split(","):
        if not tok:
            continue
        if tok == "d":
            out.append("d")
        else:
            try:
                out.append(int(tok))
            except ValueError:
                raise argparse.ArgumentTypeError(f"expected integers or 'd', got {tok!r}")
    return out


def _str_list(choices):
    def parse(text: str) -> list[str]:
        items = [tok for tok in text.split(",") if tok]
        for item in items:
            if item not in choices:
                raise argparse.ArgumentTypeError(f"{item!r} not in {sorted(choices)}")
        return items

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sumreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    from .bench import KERNELS, VARIANTS

    bench = sub.add_parser("bench", help="micro-benchmark the regularizer kernels")
    bench.add_argument("--kernel", type=_str_list(KERNELS), default=["rsum-cross"],
                       help="comma list of kernels: " + ",".join(KERNELS))
    bench.add_argument("--variant", type=_str_list(VARIANTS), default=["naive", "fft"],
                       help="comma list of variants: naive,fft")
    bench.add_argument("--n", type=_int_list, default=[128, 256])
    bench.add_argument("--d", type=_int_list, default=[2048, 4096, 8192, 16384])
    bench.add_argument("--b", type=_b_list, default=["d"],
                       help="comma list of block sizes; 'd' means ungrouped")
    bench.add_argument("--q", type=_int_list, default=[2])
    bench.add_argument("--grad", choices=["on", "off"], default="off")
    bench.add_argument("--repeats", type=int, default=5)
    bench.add_argument("--warmup", type=int, default=1)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", required=True, help="CSV output path")
    bench.add_argument("--append", action="store_true",
                       help="append rows to an existing CSV (manifest-guarded)")

    from .trainer import LOSS_VARIANTS

    train = sub.add_parser("train", help="run the desk-scale synthetic trainer")
    train.add_argument("--loss", choices=LOSS_VARIANTS, default="bt-proposed")
    train.add_argument("--d", type=int, default=64, help="embedding dimension")
    train.add_argument("--b", type=int, default=None, help="block size (default: ungrouped)")
    train.add_argument("--q", type=int, choices=[1, 2], default=2)
    train.add_argument("--permute", choices=["on", "off"], default="on")
    train.add_argument("--epochs", type=int, default=30)
    train.add_argument("--lr", type=float, default=0.05)
    train.add_argument("--batch-size", type=int, default=128)
    train.add_argument("--seed", type=_int_list, default=[0],
                       help="comma list of run seeds")
    train.add_argument("--classes", type=int, default=8)
    train.add_argument("--latent-dim", type=int, default=8)
    train.add_argument("--input-dim", type=int, default=32)
    train.add_argument("--samples-per-class", type=int, default=256)
    train.add_argument("--noise-sigma", type=float, default=0.3)
    train.add_argument("--aug-noise", type=float, default=0.5)
    train.add_argument("--aug-mask", type=float, default=0.2)
    train.add_argument("--backbone-out", type=int, default=32)
    train.add_argument("--out", required=True, help="output directory")
    train.add_argument("--jobs", type=int, default=1,
                       help="parallel lanes for independent seeds")
    return parser


def _bench_cells(args) -> list[dict]:
    cells = []
    for kernel in args.kernel:
        groupable = kernel.startswith("rsum")
        b_values = args.b if groupable else ["d"]
        for variant in args.variant:
            if kernel.startswith("roff") and variant == "fft":
                continue  # baseline kernels have no fft lane
            for n in args.n:
                for d in args.d:
                    for b in b_values:
                        for q in args.q:
                            cells.append(
                                dict(
                                    kernel=kernel,
                                    variant=variant,
                                    n=n,
                                    d=d,
                                    b=d if b == "d" else b,
                                    q=q,
                                    grad=args.grad == "on",
                                    repeats=args.repeats,
                                    warmup=args.warmup,
                                    seed=args.seed,
                                )
                            )
    return cells


def _run_bench(args) -> int:
    from .bench import bench_sweep

    cells = _bench_cells(args)
    if not cells:
        print("error: empty benchmark grid", file=sys.stderr)
        return 2
    records = bench_sweep(cells, args.out, append=args.append)
    ok = sum(1 for r in records if r.status == "ok")
    print(f"wrote {len(records)} rows ({ok} ok) to {args.out}")
    return 0


def _train_one(params: dict) -> dict:
    from .regularizers import RegConfig
    from .mlp import MlpSpec
    from .trainer import SyntheticTaskSpec, run_manifest, train, write_manifest

    seed = params["seed"]
    task = SyntheticTaskSpec(
        classes=params["classes"],
        latent_dim=params["latent_dim"],
        input_dim=params["input_dim"],
        noise_sigma=params["noise_sigma"],
        samples_per_class=params["samples_per_class"],
        aug_noise_sigma=params["aug_noise"],
        aug_mask_prob=params["aug_mask"],
        seed=seed,
    )
    net = MlpSpec(
        backbone=(params["input_dim"], 256, 256, params["backbone_out"]),
        projector=(params["backbone_out"], params["d"]),
        seed=seed + 1,
    )
    cfg = RegConfig(
        q=params["q"],
        block=params["b"],
        permute=params["permute"],
        seed=seed + 2,
    )
    log = train(
        task,
        net,
        cfg,
        loss_variant=params["loss"],
        epochs=params["epochs"],
        lr=params["lr"],
        batch_size=params["batch_size"],
    )
    out_dir = Path(params["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    log.to_csv(out_dir / f"trainlog_seed{seed}.csv")
    manifest = run_manifest(
        task, net, cfg, params["loss"], params["epochs"], params["lr"], params["batch_size"]
    )
    write_manifest(out_dir / f"manifest_seed{seed}.json", manifest)
    final = log.final()
    return {
        "seed": seed,
        "probe_accuracy": final.probe_accuracy,
        "bt_metric": final.bt_metric,
        "vic_metric": final.vic_metric,
        "mean_feature_std": final.mean_feature_std,
    }


def _run_train(args) -> int:
    base = dict(
        loss=args.loss,
        d=args.d,
        b=args.b,
        q=args.q,
        permute=args.permute == "on",
        epochs=args.epochs,
        lr=args.lr,
        batch_size=args.batch_size,
        classes=args.classes,
        latent_dim=args.latent_dim,
        input_dim=args.input_dim,
        samples_per_class=args.samples_per_class,
        noise_sigma=args.noise_sigma,
        aug_noise=args.aug_noise,
        aug_mask=args.aug_mask,
        backbone_out=args.backbone_out,
        out=args.out,
    )
    runs = [dict(base, seed=s) for s in args.seed]
    if args.jobs > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_train_one, runs))
    else:
        results = [_train_one(r) for r in runs]
    for res in results:
        print(json.dumps(res, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bench":
            return _run_bench(args)
        return _run_train(args)
    except ConfigError as exc:
        # bad grids, block sizes, append-manifest mismatches: usage errors
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SumregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
