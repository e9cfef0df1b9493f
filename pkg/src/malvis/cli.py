"""Command-line entry point chaining the two experimental arms.

Arm A: tabular -> SMOTE -> PRS images -> CNN.
Arm B: tabular -> PRS images -> cGAN malign images added -> CNN.
Both arms are scored on one shared encoded test set.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .cgan import GanDivergedError, generate_malign, load_generator, save_generator, train_cgan
from .cnn import kfold_cv, train_cnn
from .config import ConfigError, PipelineConfig, dump_config, load_config
from .metrics import EvalReport, compare_runs, evaluate, format_comparison, format_report
from .nn import load_checkpoint, save_checkpoint
from .prs import (BinaryImage, arrays_to_samples, derive_layout, encode_batch, encode_sample,
                  read_image, read_samples_csv, samples_to_arrays, write_image,
                  write_samples_csv)
from .smote import balance
from .synth import gen_dataset, split_train_test

log = logging.getLogger("malvis")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_DIVERGED = 0, 2, 3, 4


class MissingArtifact(FileNotFoundError):
    pass


class Workspace:
    """Resolves configured artifact paths under the output directory."""

    def __init__(self, config: PipelineConfig, out_dir: str | os.PathLike):
        self.config = config
        self.root = Path(out_dir)

    def path(self, name: str) -> Path:
        return self.root / getattr(self.config.paths, name)

    def need(self, name: str) -> Path:
        p = self.path(name)
        if not p.exists():
            raise MissingArtifact(f"missing artifact {p}; run the earlier stage first")
        return p

    def out(self, name: str) -> Path:
        p = self.path(name)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def report(self, filename: str) -> Path:
        d = self.path("reports")
        d.mkdir(parents=True, exist_ok=True)
        return d / filename

    def generated_dir(self) -> Path:
        return self.path("images") / "generated"


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_xy(path: Path) -> tuple[np.ndarray, np.ndarray]:
    return samples_to_arrays(read_samples_csv(path))


def _encode(X: np.ndarray) -> np.ndarray:
    return encode_batch(X, derive_layout(X.shape[1]))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def image_grid(ink: np.ndarray, cols: int = 8, gap: int = 2) -> BinaryImage:
    """Tile up to ``cols * cols`` images with white gutters into one square image."""
    ink = np.asarray(ink, dtype=bool)[: cols * cols]
    d = ink.shape[-1]
    side = cols * d + (cols + 1) * gap
    out = np.zeros((side, side), dtype=bool)
    for i, img in enumerate(ink):
        r, c = divmod(i, cols)
        y0, x0 = gap + r * (d + gap), gap + c * (d + gap)
        out[y0 : y0 + d, x0 : x0 + d] = img
    return BinaryImage(out)


# -- stages -------------------------------------------------------------------

def cmd_synth(ws: Workspace) -> dict:
    cfg = ws.config
    X, y = gen_dataset(cfg.synth)
    write_samples_csv(arrays_to_samples(X, y), ws.out("dataset"))
    (Xtr, ytr), (Xte, yte) = split_train_test(X, y, cfg.test_per_class,
                                              rng_seed=cfg.stage_seeds()["split"])
    write_samples_csv(arrays_to_samples(Xtr, ytr), ws.out("train"))
    write_samples_csv(arrays_to_samples(Xte, yte), ws.out("test"))
    log.info("synth: %d train, %d test rows", len(ytr), len(yte))
    return {"n_train": int(len(ytr)), "n_test": int(len(yte))}


def cmd_encode(input_csv: str | os.PathLike, out_dir: str | os.PathLike,
               j: int | None = None) -> list[Path]:
    """One PGM per CSV row, named ``sample_<row>_<label>.pgm``."""
    if not Path(input_csv).exists():
        raise MissingArtifact(f"missing input {input_csv}")
    samples = read_samples_csv(input_csv)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, s in enumerate(samples, start=1):
        layout = derive_layout(j or len(s.values))
        p = out / f"sample_{i:05d}_{s.label}.pgm"
        write_image(encode_sample(s, layout), p)
        paths.append(p)
    return paths


def cmd_smote(ws: Workspace) -> dict:
    X, y = _load_xy(ws.need("train"))
    cfg = ws.config.smote
    Xb, yb = balance(X, y, cfg.k_neighbors, cfg.rng_seed)
    write_samples_csv(arrays_to_samples(Xb, yb), ws.out("smote"))
    n_new = int(len(yb) - len(y))
    log.info("smote: %d synthetic malign rows", n_new)
    return {"n_new": n_new}


def _arm_training_set(ws: Workspace, arm: str) -> tuple[np.ndarray, np.ndarray]:
    if arm == "a":
        X, y = _load_xy(ws.need("smote"))
        return _encode(X), y
    X, y = _load_xy(ws.need("train"))
    ink = _encode(X)
    gen_dir = ws.generated_dir()
    if not gen_dir.is_dir():
        raise MissingArtifact(f"missing generated images in {gen_dir}")
    files = sorted(gen_dir.glob("*.pgm"))
    gen = np.stack([read_image(f).ink for f in files]) if files else np.zeros((0,) + ink.shape[1:], bool)
    return np.concatenate([ink, gen]), np.concatenate([y, np.ones(len(gen), dtype=np.int64)])


def cmd_train_cnn(ws: Workspace, arm: str) -> dict:
    images, labels = _arm_training_set(ws, arm)
    cfg = ws.config.cnn
    result = {}
    if ws.config.cv:
        cv = kfold_cv(images, labels, cfg)
        _write_json(ws.report(f"cv_{arm}.json"), cv)
        result["cv_mean_accuracy"] = cv["mean_accuracy"]
    model, hist = train_cnn(images, labels, cfg)
    save_checkpoint(ws.out(f"cnn_{arm}"), {"cnn": model}, {"arm": arm, "epochs": cfg.epochs})
    hist.write_csv(ws.report(f"history_{arm}.csv"))
    log.info("cnn arm %s: final train accuracy %.4f", arm, hist.accuracy[-1])
    result.update(n_train=int(len(labels)), final_train_accuracy=hist.accuracy[-1])
    return result


def cmd_train_cgan(ws: Workspace) -> dict:
    X, y = _load_xy(ws.need("train"))
    trace_path = ws.report("gan_trace.csv")
    try:
        gen, _, trace = train_cgan(_encode(X), y, ws.config.cgan)
    except GanDivergedError as exc:
        exc.trace.write_csv(trace_path)
        exc.trace_path = trace_path
        raise
    trace.write_csv(trace_path)
    save_generator(ws.out("generator"), gen, ws.config.cgan)
    tail = trace.tail_means(100)
    _write_json(ws.report("gan_tail.json"), tail)
    return {"iterations": len(trace), **tail}


def _n_generated(ws: Workspace) -> int:
    if ws.config.n_generated is not None:
        return ws.config.n_generated
    _, y = _load_xy(ws.need("train"))
    return int(max(0, (y == 0).sum() - (y == 1).sum()))


def cmd_generate(ws: Workspace, count: int | None = None) -> dict:
    gen = load_generator(ws.need("generator"))
    count = _n_generated(ws) if count is None else count
    images = generate_malign(gen, count, rng=ws.config.stage_seeds()["generate"])
    out = ws.generated_dir()
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("*.pgm"):
        old.unlink()
    for i, img in enumerate(images, start=1):
        write_image(img, out / f"gen_{i:05d}.pgm")
    if images:
        write_image(image_grid(np.stack([im.ink for im in images])),
                    ws.path("images") / "grid_generated.pgm")
    return {"n_generated": count,
            "mean_black": float(np.mean([im.black_count() for im in images])) if images else 0.0}


def _test_set(ws: Workspace) -> tuple[np.ndarray, np.ndarray]:
    X, y = _load_xy(ws.need("test"))
    return _encode(X), y


def test_set_digest(ink: np.ndarray, labels: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.packbits(np.asarray(ink, dtype=bool)).tobytes())
    h.update(np.asarray(labels, dtype=np.int64).tobytes())
    return h.hexdigest()


def cmd_evaluate(ws: Workspace, arm: str) -> tuple[EvalReport, str]:
    """Score one arm; also returns the digest of the test images it actually saw."""
    models, _ = load_checkpoint(ws.need(f"cnn_{arm}"))
    images, labels = _test_set(ws)
    report = evaluate(models["cnn"], images, labels)
    report.to_json(ws.report(f"report_{arm}.json"))
    report.confusion_csv(ws.report(f"confusion_{arm}.csv"))
    ws.report(f"report_{arm}.txt").write_text(format_report(report) + "\n", encoding="utf-8")
    return report, test_set_digest(images, labels)


def _load_report(path: Path) -> EvalReport:
    return EvalReport.from_dict(json.loads(path.read_text(encoding="utf-8")))


def cmd_compare(ws: Workspace) -> str:
    paths = [ws.path("reports") / f"report_{arm}.json" for arm in ("a", "b")]
    if not all(p.exists() for p in paths):
        raise MissingArtifact("compare needs report_a.json and report_b.json; run evaluate first")
    cmp = compare_runs(*(_load_report(p) for p in paths))
    text = format_comparison(cmp)
    ws.report("comparison.txt").write_text(text + "\n", encoding="utf-8")
    _write_json(ws.report("comparison.json"), cmp.to_dict())
    return text


def write_sample_grids(ws: Workspace) -> None:
    X, y = _load_xy(ws.need("train"))
    ink = _encode(X)
    d = ws.path("images")
    d.mkdir(parents=True, exist_ok=True)
    for cls, name in ((0, "benign"), (1, "malign")):
        write_image(image_grid(ink[y == cls]), d / f"grid_{name}.pgm")


def cmd_run_all(ws: Workspace) -> dict:
    cfg = ws.config
    ws.root.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, ws.root / "config.yaml")
    stages = {"synth": cmd_synth(ws), "smote": cmd_smote(ws)}
    write_sample_grids(ws)
    stages["train_cnn_a"] = cmd_train_cnn(ws, "a")
    stages["train_cgan"] = cmd_train_cgan(ws)
    stages["generate"] = cmd_generate(ws)
    stages["train_cnn_b"] = cmd_train_cnn(ws, "b")
    report_a, digest_a = cmd_evaluate(ws, "a")
    report_b, digest_b = cmd_evaluate(ws, "b")
    if digest_a != digest_b:
        raise RuntimeError("arms were scored on different test sets")
    comparison = cmd_compare(ws)
    manifest = {
        "version": __version__,
        "seed": cfg.seed,
        "stage_seeds": cfg.stage_seeds(),
        "config_sha256": cfg.digest(),
        "test_set_sha256": {"a": digest_a, "b": digest_b},
        "stages": stages,
        "accuracy": {"a": report_a.accuracy, "b": report_b.accuracy},
        "artifacts": artifact_checksums(ws.root),
    }
    _write_json(ws.root / "manifest.json", manifest)
    print(comparison)
    return manifest


def artifact_checksums(root: Path) -> dict[str, str]:
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name != "manifest.json" and "generated" not in p.parts:
            out[p.relative_to(root).as_posix()] = sha256_file(p)
    gen = sorted(root.rglob("generated/*.pgm"))
    if gen:
        h = hashlib.sha256()
        for p in gen:
            h.update(p.read_bytes())
        out["images/generated/*.pgm"] = h.hexdigest()
    return out


# -- argument handling --------------------------------------------------------

def _parse_set(items: list[str]) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        if isinstance(value, str):
            # YAML 1.1 reads "1e-3" as a string
            try:
                value = float(value)
            except ValueError:
                pass
        out[key.strip()] = value
    return out


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies use SUPPRESS so they do not overwrite flags given before the command
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=d(None), help="YAML pipeline configuration")
    common.add_argument("--seed", type=int, default=d(None),
                        help="master seed (overrides the config file)")
    common.add_argument("--out-dir", default=d("run"), help="directory for every artifact")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        dest="set_late" if suppress else "set",
                        help="override any config key, e.g. cnn.epochs=5")
    common.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="malvis", description=__doc__.splitlines()[0],
                                parents=[_common(suppress=False)])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="synthesise and split a tabular dataset")
    enc = sub.add_parser("encode", parents=[common], help="encode CSV rows as PGM images")
    enc.add_argument("input", help="CSV of counts with a trailing label column")
    enc.add_argument("--j", type=int, help="logical variable count (defaults to the row width)")
    sub.add_parser("smote", parents=[common], help="balance the training set with SMOTE")
    for name, text in (("train-cnn", "train the detector for one arm"),
                       ("evaluate", "score one arm on the shared test set")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--arm", choices=("a", "b"), required=True)
    sub.add_parser("train-cgan", parents=[common], help="train the conditional GAN")
    g = sub.add_parser("generate", parents=[common], help="write generated malign images")
    g.add_argument("--count", type=int)
    sub.add_parser("compare", parents=[common], help="side-by-side report of both arms")
    sub.add_parser("run-all", parents=[common], help="every stage, both arms")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = _parse_set(args.set + args.set_late)
        if args.seed is not None:
            overrides["seed"] = args.seed
        config = load_config(args.config, overrides).seeded()
        ws = Workspace(config, args.out_dir)
        cmd = args.command
        if cmd == "synth":
            print(json.dumps(cmd_synth(ws), sort_keys=True))
        elif cmd == "encode":
            paths = cmd_encode(args.input, Path(args.out_dir) / "encoded", args.j)
            print(f"wrote {len(paths)} image(s) to {Path(args.out_dir) / 'encoded'}")
        elif cmd == "smote":
            print(json.dumps(cmd_smote(ws), sort_keys=True))
        elif cmd == "train-cnn":
            print(json.dumps(cmd_train_cnn(ws, args.arm), sort_keys=True))
        elif cmd == "train-cgan":
            print(json.dumps(cmd_train_cgan(ws), sort_keys=True))
        elif cmd == "generate":
            print(json.dumps(cmd_generate(ws, args.count), sort_keys=True))
        elif cmd == "evaluate":
            print(format_report(cmd_evaluate(ws, args.arm)[0]))
        elif cmd == "compare":
            print(cmd_compare(ws))
        elif cmd == "run-all":
            cmd_run_all(ws)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifact as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except GanDivergedError as exc:
        where = getattr(exc, "trace_path", None)
        print(f"training diverged: {exc}; loss trace at {where}", file=sys.stderr)
        return EXIT_DIVERGED
    except FloatingPointError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
