"""Batch command line surface.

Every command takes an optional JSON config file (--config) plus repeated
--set key=value overrides, and writes its resolved configuration next to its
primary output, so identical configs reproduce identical artifacts.  Exit
codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import dataio, metrics, pipeline, render
from .dsm import NumericDipoleSource, index_field_classic
from .grid import CartesianGrid, IndexField, ShapeSamplingError
from .nn import checks
from .nn import cnn as cnn_mod
from .nn import fnn as fnn_mod
from .nn.engine import NumericalError
from .solver import SolverConfig, SolverError, background_operator

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class ConfigError(RuntimeError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def _apply_overrides(cfg: dict, pairs) -> dict:
    out = dict(cfg)
    for raw in pairs or []:
        if "=" not in raw:
            raise ConfigError(f"--set expects key=value, got {raw!r}")
        key, text = raw.split("=", 1)
        try:
            out[key] = json.loads(text)
        except json.JSONDecodeError:
            out[key] = text
    return out


def _resolve(defaults: dict, args) -> dict:
    cfg = dict(defaults)
    file_cfg = _apply_overrides(_load_config(args.config), args.set)
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg.update(file_cfg)
    return cfg


def _write_resolved(cfg: dict, anchor_path: str) -> str:
    path = anchor_path + ".config.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def _grid_from_cfg(cfg) -> CartesianGrid:
    return CartesianGrid(int(cfg["n1"]), int(cfg["n2"]))


def _solver_cfg(cfg) -> SolverConfig:
    return SolverConfig(tolerance=float(cfg.get("tolerance", 1e-10)))


def _noise_from_cfg(cfg) -> pipeline.NoiseSpec | None:
    delta = float(cfg.get("noise_delta", 0.0))
    if delta == 0.0:
        return None
    return pipeline.NoiseSpec(delta=delta, seed=int(cfg.get("noise_seed", 0)),
                              per_node=bool(cfg.get("noise_per_node", True)))


def _field_from_file(path: str) -> IndexField:
    arr = np.load(path)
    if arr.ndim != 2:
        raise ConfigError(f"{path}: expected a 2-d field array, got {arr.shape}")
    return IndexField(CartesianGrid(arr.shape[1], arr.shape[0]), arr)


def _save_field(field: IndexField, out: str, png: str | None):
    np.save(out, field.values)
    if png:
        render.render_heatmap(field, png)


# ----------------------------------------------------------------- commands

GEN_DEFAULTS = {
    "scenario": 1, "samples": 8, "pairs": 10, "n1": 64, "n2": 64,
    "seed": 1001, "noise_delta": 0.0, "noise_seed": 0, "noise_per_node": True,
    "tolerance": 1e-10,
}


def cmd_gen_data(args) -> int:
    cfg = _resolve(GEN_DEFAULTS, args)
    manifest = pipeline.generate_dataset(
        scenario=int(cfg["scenario"]), samples=int(cfg["samples"]),
        n_pairs=int(cfg["pairs"]), grid=_grid_from_cfg(cfg),
        master_seed=int(cfg["seed"]), out_path=args.out,
        noise=_noise_from_cfg(cfg), config=_solver_cfg(cfg),
        progress=(lambda done, total: print(f"  record {done}/{total}",
                                            file=sys.stderr))
        if args.verbose else None,
    )
    _write_resolved(cfg, args.out)
    print(f"wrote {args.out} ({manifest['samples']} records, "
          f"N={manifest['pairs']}, sha256 {manifest['blob_sha256'][:16]})")
    return EXIT_OK


TRAIN_FNN_DEFAULTS = {
    "n_pairs": None, "width": 64, "blocks": 6, "gaussian_blocks": None,
    "bandwidth": 0.5, "alpha": 0.2, "batch_samples": 16, "batch_points": 1024,
    "iterations": 20000, "eval_every": 250, "target_accuracy": None,
    "seed": 1, "samples": None,
}

TRAIN_CNN_DEFAULTS = {
    "n_pairs": None, "blocks": 3, "channels": [16, 32, 64], "kernel": 3,
    "alpha": 4.0, "batch_samples": 8, "iterations": 20000, "eval_every": 100,
    "target_loss": None, "seed": 1, "samples": None,
}


def _sample_indices(cfg, dataset):
    spec = cfg.get("samples")
    if spec is None:
        return None
    if isinstance(spec, int):
        if not 1 <= spec <= len(dataset):
            raise ConfigError(f"samples={spec} outside 1..{len(dataset)}")
        return list(range(spec))
    if isinstance(spec, list):
        return [int(s) for s in spec]
    raise ConfigError(f"samples must be an int or list, got {spec!r}")


def _train_log(tag):
    def log(iteration, loss, *extra):
        extras = " ".join(f"{x:.4f}" for x in extra if x is not None)
        print(f"  {tag} iteration {iteration}: loss {loss:.5f} {extras}",
              file=sys.stderr)
    return log


def cmd_train_fnn(args) -> int:
    cfg = _resolve(TRAIN_FNN_DEFAULTS, args)
    dataset = dataio.Dataset(args.data)
    n_pairs = int(cfg["n_pairs"]) if cfg["n_pairs"] is not None else dataset.pairs
    fnn_cfg = fnn_mod.FnnConfig(
        n_pairs=n_pairs, width=int(cfg["width"]), blocks=int(cfg["blocks"]),
        gaussian_blocks=(None if cfg["gaussian_blocks"] is None
                         else int(cfg["gaussian_blocks"])),
        bandwidth=float(cfg["bandwidth"]), alpha=float(cfg["alpha"]),
        batch_samples=int(cfg["batch_samples"]),
        batch_points=int(cfg["batch_points"]),
        iterations=int(cfg["iterations"]), eval_every=int(cfg["eval_every"]),
        target_accuracy=(None if cfg["target_accuracy"] is None
                         else float(cfg["target_accuracy"])),
    )
    model, trace, accuracy = fnn_mod.train(
        dataset, fnn_cfg, seed=int(cfg["seed"]),
        sample_indices=_sample_indices(cfg, dataset),
        checkpoint_path=args.out,
        log=_train_log("fnn") if args.verbose else None,
    )
    cfg["n_pairs"] = n_pairs
    cfg["kind"] = "fnn"
    cfg["data_sha256"] = _data_sha(args.data)
    _write_resolved(cfg, args.out)
    print(f"wrote {args.out} ({len(trace)} iterations, final loss "
          f"{trace[-1]:.5f}, train accuracy {accuracy:.4f})")
    return EXIT_OK


def _data_sha(data_path: str) -> str:
    mpath = dataio.manifest_path(data_path)
    if os.path.exists(mpath):
        return dataio.read_manifest(mpath).get("blob_sha256", "")
    return ""


def cmd_train_cnn(args) -> int:
    cfg = _resolve(TRAIN_CNN_DEFAULTS, args)
    dataset = dataio.Dataset(args.data)
    n_pairs = int(cfg["n_pairs"]) if cfg["n_pairs"] is not None else dataset.pairs
    cnn_cfg = cnn_mod.CnnConfig(
        n_pairs=n_pairs, blocks=int(cfg["blocks"]),
        channels=tuple(int(c) for c in cfg["channels"]),
        kernel=int(cfg["kernel"]), alpha=float(cfg["alpha"]),
        batch_samples=int(cfg["batch_samples"]),
        iterations=int(cfg["iterations"]), eval_every=int(cfg["eval_every"]),
        target_loss=(None if cfg["target_loss"] is None
                     else float(cfg["target_loss"])),
    )
    cnn_cfg.check_grid(dataset.grid.n1, dataset.grid.n2)
    model, trace = cnn_mod.train(
        dataset, cnn_cfg, seed=int(cfg["seed"]),
        sample_indices=_sample_indices(cfg, dataset),
        checkpoint_path=args.out,
        log=_train_log("cnn") if args.verbose else None,
    )
    cfg["n_pairs"] = n_pairs
    cfg["kind"] = "cnn"
    cfg["data_sha256"] = _data_sha(args.data)
    _write_resolved(cfg, args.out)
    print(f"wrote {args.out} ({len(trace)} iterations, final loss {trace[-1]:.5f})")
    return EXIT_OK


def _load_model_config(model_path: str) -> dict:
    path = model_path + ".config.json"
    if not os.path.exists(path):
        raise ConfigError(f"missing model config {path}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _rebuild_model(model_path: str):
    cfg = _load_model_config(model_path)
    kind = cfg.get("kind")
    if kind == "fnn":
        arch = fnn_mod.FnnConfig(
            n_pairs=int(cfg["n_pairs"]), width=int(cfg["width"]),
            blocks=int(cfg["blocks"]),
            gaussian_blocks=(None if cfg["gaussian_blocks"] is None
                             else int(cfg["gaussian_blocks"])),
            bandwidth=float(cfg["bandwidth"]))
        return kind, fnn_mod.load_model(arch, model_path)
    if kind == "cnn":
        arch = cnn_mod.CnnConfig(
            n_pairs=int(cfg["n_pairs"]), blocks=int(cfg["blocks"]),
            channels=tuple(int(c) for c in cfg["channels"]),
            kernel=int(cfg["kernel"]))
        return kind, cnn_mod.load_model(arch, model_path)
    raise ConfigError(f"model config {model_path}.config.json has kind={kind!r}")


def _predict_one(kind: str, model, grid, phis, grads) -> IndexField:
    if kind == "fnn":
        return model.predict_field(grid, grads[: model.config.n_pairs])
    return model.predict_field(grid, phis[: model.config.n_pairs])


DSM_DEFAULTS = {"gamma": 1.0, "omega": 1, "tolerance": 1e-10}


def cmd_dsm(args) -> int:
    cfg = _resolve(DSM_DEFAULTS, args)
    grid, pairs, _, _, _ = pipeline.load_record_for_inference(args.data, args.index)
    omega = int(cfg["omega"])
    if not 1 <= omega <= len(pairs):
        raise ConfigError(f"omega={omega} outside 1..{len(pairs)}")
    solver_cfg = _solver_cfg(cfg)
    source = NumericDipoleSource(background_operator(grid), solver_cfg)
    result = index_field_classic(
        pairs[omega - 1].f, pairs[omega - 1].g, grid, source,
        gamma=float(cfg["gamma"]), config=solver_cfg)
    _save_field(result.field, args.out, args.png)
    _write_resolved(cfg, args.out)
    flag = " (zero contrast)" if result.zero_contrast else ""
    print(f"wrote {args.out}{flag}")
    return EXIT_OK


def cmd_predict(args) -> int:
    kind, model = _rebuild_model(args.model)
    grid, _, phis, grads, _ = pipeline.load_record_for_inference(
        args.data, args.index)
    field = _predict_one(kind, model, grid, phis, grads)
    _save_field(field, args.out, args.png)
    print(f"wrote {args.out} ({kind} prediction)")
    return EXIT_OK


EVAL_DEFAULTS = {"threshold": 0.5, "samples": None, "gamma": 1.0, "omega": 1,
                 "tolerance": 1e-10}


def cmd_eval(args) -> int:
    cfg = _resolve(EVAL_DEFAULTS, args)
    dataset = dataio.Dataset(args.data)
    indices = _sample_indices(cfg, dataset) or range(len(dataset))
    threshold = float(cfg["threshold"])
    if args.model:
        kind, model = _rebuild_model(args.model)
        model_cfg = _load_model_config(args.model)
    else:
        kind, model, model_cfg = "dsm", None, {
            "kind": "dsm", "gamma": cfg["gamma"], "omega": cfg["omega"]}
    digest = metrics.config_digest({
        "model": model_cfg, "data": _data_sha(args.data),
        "threshold": threshold, "samples": list(indices)})
    report = metrics.EvalReport(digest=digest)
    solver_cfg = _solver_cfg(cfg)
    source = None
    for idx in indices:
        grid, pairs, phis, grads, truth = pipeline.load_record_for_inference(
            dataset, idx)
        if kind == "dsm":
            if source is None:
                source = NumericDipoleSource(background_operator(grid), solver_cfg)
            omega = int(cfg["omega"])
            field = index_field_classic(
                pairs[omega - 1].f, pairs[omega - 1].g, grid, source,
                gamma=float(cfg["gamma"]), config=solver_cfg).field
        else:
            field = _predict_one(kind, model, grid, phis, grads)
        report.add(idx, field, truth, threshold)
    report.save(args.out)
    _write_resolved(cfg, args.out)
    agg = report.aggregate()
    print(f"wrote {args.out} (samples {agg['count']}, "
          f"IoU {agg['iou_mean']:.4f} +- {agg['iou_std']:.4f})")
    return EXIT_OK


RENDER_DEFAULTS = {"scale": 4}


def cmd_render(args) -> int:
    cfg = _resolve(RENDER_DEFAULTS, args)
    field = _field_from_file(args.field)
    render.render_heatmap(field, args.out, scale=int(cfg["scale"]))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results = checks.run_all()
    failed = 0
    for res in results:
        status = "pass" if res.passed else "FAIL"
        print(f"{status}  {res.name}: max rel error {res.max_rel_error:.3e} "
              f"(tolerance {res.tolerance:g})")
        failed += 0 if res.passed else 1
    if failed:
        raise NumericalError(f"{failed} gradient checks failed")
    return EXIT_OK


SENS_DEFAULTS = {"n1": 65, "n2": 65, "max_omega": 10, "kind": "circles",
                 "tolerance": 1e-10, "pairs": 10}


def cmd_sensitivity_study(args) -> int:
    cfg = _resolve(SENS_DEFAULTS, args)
    grid = _grid_from_cfg(cfg)
    values = pipeline.sensitivity_study(
        grid, max_omega=int(cfg["max_omega"]), kind=str(cfg["kind"]),
        config=_solver_cfg(cfg))
    lines = [f"omega={w + 1}\trelative_difference={v!r}"
             for w, v in enumerate(values)]
    body = "\n".join(lines) + "\n"
    recon_lines = []
    if args.model:
        kind, model = _rebuild_model(args.model)
        n_pairs = model.config.n_pairs
        blocked, removed = pipeline.sensitivity_pair(str(cfg["kind"]))
        for tag, sample in (("blocked", blocked), ("removed", removed)):
            rec = pipeline.build_record(sample, grid, n_pairs,
                                        config=_solver_cfg(cfg))
            field = _predict_one(kind, model, grid, rec.phi_stack,
                                 rec.grad_stack)
            out_png = f"{args.out}.{tag}.png"
            render.render_heatmap(field, out_png)
            score = metrics.iou(field, rec.truth)
            recon_lines.append(f"reconstruction\t{tag}\tiou={score!r}\t{out_png}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(body)
        if recon_lines:
            fh.write("\n".join(recon_lines) + "\n")
    _write_resolved(cfg, args.out)
    print(f"wrote {args.out} (max rel diff "
          f"{max(values):.4f} over omega 1..{len(values)})")
    return EXIT_OK


EXPERIMENT_DEFAULTS = {
    "scenario": 1, "train_samples": 32, "test_samples": 8, "pairs": 10,
    "n1": 64, "n2": 64, "data_seed": 1001, "test_seed": 2002,
    "train_seed": 1, "n_values": [1, 10], "deltas": [0.0],
    "noise_seed": 31415, "kinds": ["fnn", "cnn"], "iterations": 500,
    "fnn": {}, "cnn": {}, "threshold": 0.5, "tolerance": 1e-10,
}


def _experiment_stage(stage, fn, *args_, **kwargs):
    try:
        return fn(*args_, **kwargs)
    except (SolverError, NumericalError, ShapeSamplingError) as exc:
        raise NumericalError(f"stage {stage} failed: {exc}") from exc
    except OSError as exc:
        raise OSError(f"stage {stage} failed: {exc}") from exc


def cmd_experiment(args) -> int:
    cfg = _resolve(EXPERIMENT_DEFAULTS, args)
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    grid = _grid_from_cfg(cfg)
    solver_cfg = _solver_cfg(cfg)
    pairs = int(cfg["pairs"])
    train_path = os.path.join(out_dir, "train.eitd")
    _experiment_stage(
        "gen-train", pipeline.generate_dataset, int(cfg["scenario"]),
        int(cfg["train_samples"]), pairs, grid, int(cfg["data_seed"]),
        train_path, config=solver_cfg)
    test_paths = {}
    for delta in cfg["deltas"]:
        noise = (None if float(delta) == 0.0 else pipeline.NoiseSpec(
            delta=float(delta), seed=int(cfg["noise_seed"])))
        path = os.path.join(out_dir, f"test_delta{delta}.eitd")
        _experiment_stage(
            f"gen-test delta={delta}", pipeline.generate_dataset,
            int(cfg["scenario"]), int(cfg["test_samples"]), pairs, grid,
            int(cfg["test_seed"]), path, noise=noise, config=solver_cfg)
        test_paths[delta] = path
    train_ds = dataio.Dataset(train_path)
    rows = []
    for kind in cfg["kinds"]:
        for n in ([None] if kind == "dsm" else cfg["n_values"]):
            model = None
            if kind == "fnn":
                fcfg = fnn_mod.FnnConfig(
                    n_pairs=int(n), iterations=int(cfg["iterations"]),
                    **cfg["fnn"])
                model, _, _ = _experiment_stage(
                    f"train-fnn N={n}", fnn_mod.train, train_ds, fcfg,
                    int(cfg["train_seed"]),
                    checkpoint_path=os.path.join(out_dir, f"fnn_n{n}.eitp"))
            elif kind == "cnn":
                ccfg = cnn_mod.CnnConfig(
                    n_pairs=int(n), iterations=int(cfg["iterations"]),
                    **cfg["cnn"])
                model, _ = _experiment_stage(
                    f"train-cnn N={n}", cnn_mod.train, train_ds, ccfg,
                    int(cfg["train_seed"]),
                    checkpoint_path=os.path.join(out_dir, f"cnn_n{n}.eitp"))
            elif kind != "dsm":
                raise ConfigError(f"unknown model kind {kind!r}")
            for delta, path in test_paths.items():
                test_ds = dataio.Dataset(path)
                digest = metrics.config_digest(
                    {"kind": kind, "n": n, "delta": delta, "cfg": cfg})
                report = metrics.EvalReport(digest=digest)
                source = None
                for idx in range(len(test_ds)):
                    g_, pair_list, phis, grads, truth = (
                        pipeline.load_record_for_inference(test_ds, idx))
                    if kind == "dsm":
                        if source is None:
                            source = NumericDipoleSource(
                                background_operator(g_), solver_cfg)
                        field = _experiment_stage(
                            f"dsm sample {idx}", index_field_classic,
                            pair_list[0].f, pair_list[0].g, g_, source,
                            config=solver_cfg).field
                    else:
                        field = _predict_one(kind, model, g_, phis, grads)
                    report.add(idx, field, truth, float(cfg["threshold"]))
                tag = f"{kind}" + ("" if n is None else f"_n{n}")
                report.save(os.path.join(out_dir, f"report_{tag}_delta{delta}.txt"))
                agg = report.aggregate()
                rows.append((kind, n, delta, agg["iou_mean"], agg["dice_mean"],
                             agg["mse_mean"]))
    summary = os.path.join(out_dir, "experiment_report.txt")
    with open(summary, "w", encoding="utf-8") as fh:
        fh.write("kind\tN\tdelta\tiou_mean\tdice_mean\tmse_mean\n")
        for kind, n, delta, iou_m, dice_m, mse_m in rows:
            fh.write(f"{kind}\t{n}\t{delta}\t{iou_m!r}\t{dice_m!r}\t{mse_m!r}\n")
    _write_resolved(cfg, summary)
    print(f"wrote {summary} ({len(rows)} rows)")
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="eitdsm",
        description="Inclusion reconstruction from boundary voltage data: "
                    "dataset generation, direct sampling, network training, "
                    "prediction, and evaluation.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON config file")
            p.add_argument("--set", action="append", metavar="KEY=VALUE",
                           help="override a config key")
        p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("gen-data", help="generate an EITD dataset")
    common(p)
    p.add_argument("--out", required=True, help="output .eitd path")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-fnn", help="train the pointwise classifier")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output .eitp checkpoint")
    p.set_defaults(func=cmd_train_fnn)

    p = sub.add_parser("train-cnn", help="train the image-to-image network")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output .eitp checkpoint")
    p.set_defaults(func=cmd_train_cnn)

    p = sub.add_parser("dsm", help="conventional index field for one record")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True, help="output .npy field")
    p.add_argument("--png", help="also render a heatmap")
    p.set_defaults(func=cmd_dsm)

    p = sub.add_parser("predict", help="network prediction for one record")
    common(p, config=False)
    p.add_argument("--model", required=True, help=".eitp checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True, help="output .npy field")
    p.add_argument("--png", help="also render a heatmap")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="metrics over a dataset")
    common(p)
    p.add_argument("--model", help=".eitp checkpoint (omit with --dsm)")
    p.add_argument("--dsm", action="store_true",
                   help="evaluate the conventional index instead of a model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="render a stored field to PNG")
    common(p)
    p.add_argument("--field", required=True, help=".npy field file")
    p.add_argument("--out", required=True, help="output .png")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    common(p, config=False)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sensitivity-study",
                       help="blocked-center relative voltage differences")
    common(p)
    p.add_argument("--out", required=True, help="output report path")
    p.add_argument("--model", help="optional .eitp to reconstruct both setups")
    p.set_defaults(func=cmd_sensitivity_study)

    p = sub.add_parser("experiment",
                       help="dataset -> train -> predict -> eval matrix")
    common(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_experiment)

    return top


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if getattr(args, "command", None) == "eval":
        if bool(args.model) == bool(args.dsm):
            print("error: pass exactly one of --model or --dsm", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, dataio.DatasetFormatError) as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
