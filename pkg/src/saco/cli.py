"""Command-line interface.

Subcommands: gen, select, code, train, predict, pipeline, bench-greedy,
plot-layout.  Configuration comes from an optional flat key-value file
plus repeated ``--set key=value`` overrides; the seed falls back to the
``SACO_SEED`` environment variable when not given explicitly.  Every
artifact header echoes the resolved configuration, and identical seeds
produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import align as al
from . import synth
from .classify import (
    LinearSvmModel,
    run_pipeline,
    svm_predict,
    svm_train,
)
from .coding import Coder, SpatialWeightConfig, saco1, saco2, solve_weighted_l2_l1, spatial_weights
from .config import PipelineConfig, apply_overrides, read_config_file
from .data import (
    load_image_pools,
    load_patches,
    save_patches,
    sample_candidates,
)
from .errors import InvalidConfigError, InvalidInputError
from .graphs import build_feature_affinity, build_spatial_affinity
from .plotting import write_svg_scatter
from .selection import ObjectiveWeights, lazy_greedy, naive_greedy
from .tensorio import read_tensor, write_tensor


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("SACO_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InvalidConfigError(f"SACO_SEED must be an integer, got '{env}'") from exc
    return 0


def _resolve_config(args) -> PipelineConfig:
    mapping = read_config_file(args.config) if getattr(args, "config", None) else {}
    mapping = apply_overrides(mapping, getattr(args, "set", None))
    if "seed" not in mapping:
        mapping["seed"] = str(_resolve_seed(args))
    return PipelineConfig.from_mapping(mapping)


def _require_files(*paths):
    for p in paths:
        if p is not None and not Path(p).exists():
            raise InvalidInputError(f"missing input file: {p}")


# -- gen -----------------------------------------------------------------------


def _write_pool_files(out: Path, prefix: str, pools, comments):
    rows = []
    feats = []
    next_id = 0
    from .data import Patch

    for pool in pools:
        for i in range(len(pool.features)):
            rows.append(
                Patch(
                    id=next_id,
                    features=pool.features[i],
                    coord=(float(pool.coords[i][0]), float(pool.coords[i][1])),
                    label=pool.label,
                    image_id=pool.image_id,
                )
            )
            feats.append(pool.features[i])
            next_id += 1
    save_patches(out / f"{prefix}_patches.csv", out / f"{prefix}_features.skt", rows, comments)


def cmd_gen(args) -> int:
    seed = _resolve_seed(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    comments = [f"generator = {args.kind}", f"seed = {seed}"]
    if args.kind == "blobs2d":
        pools = synth.make_blobs2d(args.classes, args.points_per_class, seed=seed)
        _write_pool_files(out, "candidates", pools, comments)
    elif args.kind == "spatial-texture":
        train, test, _ = synth.make_spatial_texture(
            n_classes=args.classes,
            train_per_class=args.train_per_class,
            test_per_class=args.test_per_class,
            pool_size=args.pool_size,
            feature_dim=args.feature_dim,
            seed=seed,
        )
        _write_pool_files(out, "train", train, comments)
        _write_pool_files(out, "test", test, comments)
    elif args.kind == "viewpoints":
        images, labels, rotations = synth.make_viewpoints(args.per_view, seed=seed)
        with open(out / "images.csv", "w", encoding="utf-8") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            fh.write("image_id,view,rotation_deg,file\n")
            for img, lab, rot in zip(images, labels, rotations):
                name = f"img_{img.image_id:03d}.pgm"
                al.write_pgm(out / name, img.pixels)
                fh.write(f"{img.image_id},{lab},{rot!r},{name}\n")
    else:  # pragma: no cover - argparse restricts choices
        raise InvalidConfigError(f"unknown generator '{args.kind}'")
    with open(out / "manifest.txt", "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write(line + "\n")
    print(f"wrote {args.kind} dataset to {out}")
    return 0


# -- select ----------------------------------------------------------------------


def cmd_select(args) -> int:
    cfg = _resolve_config(args)
    _require_files(args.features, args.patches)
    patches = load_patches(args.patches, args.features)
    S = build_feature_affinity(patches, k_nn=cfg.k_nn)
    L = build_spatial_affinity(patches, k_nn=cfg.k_nn, sigma=cfg.spatial_sigma)
    weights = ObjectiveWeights(cfg.lambda_s, cfg.lambda_d, cfg.lambda_b, cfg.lambda_c)
    runner = naive_greedy if args.algorithm == "naive" else lazy_greedy
    result = runner(patches, S, L, weights, args.k)
    result.write_csv(args.out, header_comments=[f"algorithm = {args.algorithm}"] + cfg.echo_lines())
    print(f"selected {len(result.ids)} exemplars -> {args.out}")
    return 0


# -- code ------------------------------------------------------------------------


def cmd_code(args) -> int:
    cfg = _resolve_config(args)
    _require_files(args.dict_features, args.dict_patches, args.query_features, args.query_patches)
    from .data import Dictionary

    atoms = load_patches(args.dict_patches, args.dict_features)
    if args.selection:
        _require_files(args.selection)
        keep = []
        with open(args.selection, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or line.startswith("step,"):
                    continue
                keep.append(int(line.split(",")[1]))
        atoms = [atoms[i] for i in keep]
    dictionary = Dictionary(atoms)
    queries = load_patches(args.query_patches, args.query_features)
    weight_cfg = SpatialWeightConfig(cfg.weight_kernel, cfg.weight_epsilon, cfg.weight_scale)
    coder = Coder.build(dictionary, cfg.lambda1, cfg.lambda2) if cfg.coder == "saco1" else None
    codes = np.empty((len(queries), dictionary.n_atoms), dtype=np.float64)
    for i, q in enumerate(queries):
        w = (
            spatial_weights(q.coord, dictionary, weight_cfg)
            if cfg.spatial_weighting
            else np.ones(dictionary.n_atoms)
        )
        if cfg.coder == "saco1":
            codes[i] = saco1(q.features, coder, w)
        elif cfg.coder == "saco2":
            codes[i] = saco2(q.features, dictionary, w, cfg.lambda1, cfg.lambda2)
        else:
            codes[i] = solve_weighted_l2_l1(q.features, dictionary, w, cfg.lambda1, cfg.lambda2).coeffs
    write_tensor(args.out, codes)
    with open(str(args.out) + ".config.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(cfg.echo_lines()) + "\n")
    print(f"coded {len(queries)} patches over {dictionary.n_atoms} atoms -> {args.out}")
    return 0


# -- train / predict ---------------------------------------------------------------


def _read_image_labels(path) -> list[tuple[int, int]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = None
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                if line != "image_id,label":
                    raise InvalidInputError(f"{path}: expected header 'image_id,label'")
                header = line
                continue
            a, b = line.split(",")
            rows.append((int(a), int(b)))
    if header is None:
        raise InvalidInputError(f"{path}: empty file, header required")
    return rows


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    _require_files(args.features, args.images)
    feats = read_tensor(args.features).astype(np.float64)
    labels = [lab for _, lab in _read_image_labels(args.images)]
    if len(feats) != len(labels):
        raise InvalidInputError(f"{len(feats)} feature rows vs {len(labels)} labels")
    model = svm_train(feats, labels, reg=cfg.svm_reg, epochs=cfg.svm_epochs, seed=cfg.seed)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_tensor(str(prefix) + ".w.skt", model.weights)
    write_tensor(str(prefix) + ".b.skt", model.biases)
    with open(str(prefix) + ".meta.txt", "w", encoding="utf-8") as fh:
        fh.write(f"n_classes = {model.n_classes}\n")
        fh.write(f"dim = {model.weights.shape[1]}\n")
        for line in cfg.echo_lines():
            fh.write(line + "\n")
    print(f"trained {model.n_classes}-class model -> {prefix}.*")
    return 0


def _load_model(prefix) -> LinearSvmModel:
    _require_files(str(prefix) + ".w.skt", str(prefix) + ".b.skt")
    W = read_tensor(str(prefix) + ".w.skt").astype(np.float64)
    b = read_tensor(str(prefix) + ".b.skt").astype(np.float64)
    return LinearSvmModel(W, b, reg=0.0, epochs=0, seed=0)


def cmd_predict(args) -> int:
    cfg = _resolve_config(args)
    _require_files(args.features, args.images)
    model = _load_model(args.model)
    feats = read_tensor(args.features).astype(np.float64)
    pairs = _read_image_labels(args.images)
    if len(feats) != len(pairs):
        raise InvalidInputError(f"{len(feats)} feature rows vs {len(pairs)} labeled images")
    n_hit = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for line in cfg.echo_lines():
            fh.write(f"# {line}\n")
        fh.write(
            "image_id,true_label,pred_label,"
            + ",".join(f"score_{c}" for c in range(model.n_classes))
            + "\n"
        )
        for (image_id, true_label), f in zip(pairs, feats):
            pred, scores = svm_predict(model, f)
            n_hit += int(pred == true_label)
            fh.write(
                f"{image_id},{true_label},{pred},"
                + ",".join(repr(float(s)) for s in scores)
                + "\n"
            )
    print(f"accuracy {n_hit / len(pairs):.4f} on {len(pairs)} images -> {args.out}")
    return 0


# -- pipeline ------------------------------------------------------------------------


def cmd_pipeline(args) -> int:
    cfg = _resolve_config(args)
    train_dir, test_dir = Path(args.train_dir), Path(args.test_dir)
    _require_files(
        train_dir / "train_patches.csv",
        train_dir / "train_features.skt",
        test_dir / "test_patches.csv",
        test_dir / "test_features.skt",
    )
    train = load_image_pools(train_dir / "train_patches.csv", train_dir / "train_features.skt")
    test = load_image_pools(test_dir / "test_patches.csv", test_dir / "test_features.skt")
    result = run_pipeline(train, test, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if result.selection is not None:
        result.selection.write_csv(out / "selection.csv", header_comments=cfg.echo_lines())
    save_patches(
        out / "dictionary_patches.csv",
        out / "dictionary_features.skt",
        result.dictionary.atoms,
        header_comments=cfg.echo_lines(),
    )
    with open(out / "predictions.csv", "w", encoding="utf-8") as fh:
        for line in cfg.echo_lines():
            fh.write(f"# {line}\n")
        fh.write("\n".join(result.predictions_csv_lines()) + "\n")
    with open(out / "report.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(result.report_lines()) + "\n")
    print(f"pipeline accuracy {result.accuracy:.4f} -> {out}")
    return 0


# -- bench-greedy ----------------------------------------------------------------------


def _bench_instance(m: int, seed: int):
    """Synthetic labeled candidates for selection benchmarks."""
    rng = np.random.default_rng(seed)
    n_classes = 3
    centers = rng.normal(0.0, 1.0, size=(n_classes * 3, 8))
    labels = rng.integers(0, n_classes, size=m)
    which = rng.integers(0, 3, size=m)
    feats = centers[labels * 3 + which] + 0.35 * rng.normal(size=(m, 8))
    coords = rng.uniform(0.0, 1.0, size=(m, 2))
    from .data import Patch

    return [
        Patch(i, feats[i], (float(coords[i, 0]), float(coords[i, 1])), int(labels[i]), 0)
        for i in range(m)
    ]


def cmd_bench_greedy(args) -> int:
    seed = _resolve_seed(args)
    patches = _bench_instance(args.m, seed)
    S = build_feature_affinity(patches, k_nn=args.k_nn)
    L = build_spatial_affinity(patches, k_nn=args.k_nn)
    weights = ObjectiveWeights()
    t0 = time.perf_counter()
    lazy = lazy_greedy(patches, S, L, weights, args.k)
    lazy_s = time.perf_counter() - t0
    print(f"instance: M={args.m} K={args.k} seed={seed} k_nn={args.k_nn}")
    print("algorithm  selected  gain_evals   wall_s")
    print(f"lazy       {len(lazy.ids):8d}  {lazy.n_evaluations:10d}  {lazy_s:8.2f}")
    if not args.lazy_only:
        t0 = time.perf_counter()
        naive = naive_greedy(patches, S, L, weights, args.k)
        naive_s = time.perf_counter() - t0
        print(f"naive      {len(naive.ids):8d}  {naive.n_evaluations:10d}  {naive_s:8.2f}")
        if naive.ids != lazy.ids:
            raise AssertionError("lazy and naive selections diverged")
        print(f"identical selections; lazy evals are "
              f"{100.0 * lazy.n_evaluations / naive.n_evaluations:.1f}% of naive")
    return 0


# -- plot-layout -------------------------------------------------------------------------


def cmd_plot_layout(args) -> int:
    _require_files(args.features, args.patches)
    patches = load_patches(args.patches, args.features)
    selected = []
    if args.selection:
        _require_files(args.selection)
        with open(args.selection, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or line.startswith("step,"):
                    continue
                selected.append(int(line.split(",")[1]))
    write_svg_scatter(args.out, patches, selected, title=args.title)
    print(f"wrote {args.out}")
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saco",
        description="Exemplar selection, spatially aware sparse coding, and classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (falls back to SACO_SEED, then 0)")
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--kind", required=True, choices=["blobs2d", "spatial-texture", "viewpoints"])
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--points-per-class", type=int, default=100)
    p.add_argument("--train-per-class", type=int, default=20)
    p.add_argument("--test-per-class", type=int, default=20)
    p.add_argument("--pool-size", type=int, default=120)
    p.add_argument("--feature-dim", type=int, default=64)
    p.add_argument("--per-view", type=int, default=30)
    common(p)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("select", help="greedy exemplar selection")
    p.add_argument("--features", required=True)
    p.add_argument("--patches", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--algorithm", choices=["lazy", "naive"], default="lazy")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_select)

    p = sub.add_parser("code", help="code query patches over a dictionary")
    p.add_argument("--dict-features", required=True)
    p.add_argument("--dict-patches", required=True)
    p.add_argument("--selection", default=None,
                   help="selection CSV restricting the dictionary to chosen ids")
    p.add_argument("--query-features", required=True)
    p.add_argument("--query-patches", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_code)

    p = sub.add_parser("train", help="train the linear classifier on pooled features")
    p.add_argument("--features", required=True, help="pooled feature tensor, one row per image")
    p.add_argument("--images", required=True, help="CSV with header image_id,label")
    p.add_argument("--out", required=True, help="model file prefix")
    common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="score pooled features with a trained model")
    p.add_argument("--model", required=True, help="model file prefix from train")
    p.add_argument("--features", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("pipeline", help="full select/code/train/predict run")
    p.add_argument("--train-dir", required=True)
    p.add_argument("--test-dir", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("bench-greedy", help="time greedy selection on a synthetic instance")
    p.add_argument("--m", type=int, default=10000)
    p.add_argument("--k", type=int, default=600)
    p.add_argument("--k-nn", type=int, default=50)
    p.add_argument("--lazy-only", action="store_true")
    common(p)
    p.set_defaults(fn=cmd_bench_greedy)

    p = sub.add_parser("plot-layout", help="SVG scatter of patches and selected exemplars")
    p.add_argument("--features", required=True)
    p.add_argument("--patches", required=True)
    p.add_argument("--selection", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--title", default="patch layout")
    common(p)
    p.set_defaults(fn=cmd_plot_layout)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
