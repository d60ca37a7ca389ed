"""``wvc`` command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classify import nn_predict, roc_accuracy
from .dynamics import IntegrationError, load_scenario, run_scenario
from .errors import DataError
from .feedback import MIN_MEMBERS, feedback_classify
from .ingest import (ManifestEntry, decode_grayscale, encode_pgm, gaussian_downsample, read_manifest,
                     save_image, wav_to_log_spectrogram, write_manifest)
from .modelfile import load_model, save_model
from .patches import DEFAULT_COUNTS
from .pipeline import describe, fit, parallel_map, resolve_jobs
from .select import SelectionReport
from .wavelet import MAX_LEVELS, WaveletConfig

log = logging.getLogger("wvc")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    levels: int = 3
    patch_counts: dict = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    select_k: int = 200
    seed: int = 0
    hist: bool = False
    hist_bins: int = 64
    hist_weight: float = 1.0
    feedback_k: int = 2
    boundary: str = "valid"
    jobs: int | None = None

    def __post_init__(self):
        if not 1 <= self.levels <= MAX_LEVELS:
            raise UsageError(f"levels must be in [1, {MAX_LEVELS}], got {self.levels}")
        for name in ("select_k", "hist_bins", "feedback_k"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.patch_counts or any(m < 1 or n < 1 for m, n in self.patch_counts.items()):
            raise UsageError("patch counts and sides must all be >= 1")
        if self.hist_weight < 0:
            raise UsageError("hist_weight must be non-negative")
        if self.boundary not in ("valid", "periodic"):
            raise UsageError(f"boundary must be valid or periodic, got {self.boundary!r}")
        if self.jobs is not None and self.jobs < 1:
            raise UsageError(f"jobs must be >= 1, got {self.jobs}")

    @property
    def wavelet(self) -> WaveletConfig:
        return WaveletConfig(levels=self.levels)

    @property
    def active_hist_bins(self) -> int:
        return self.hist_bins if self.hist else 0


def parse_counts(text: str) -> dict:
    """``"4:250,8:250"`` -> ``{4: 250, 8: 250}``."""
    out = {}
    try:
        for item in text.split(","):
            side, count = item.split(":")
            out[int(side)] = int(count)
    except ValueError:
        raise UsageError(f"patch counts must look like 4:250,8:250, got {text!r}") from None
    return out


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


_CONVERTERS = {
    "levels": int, "select_k": int, "seed": int, "hist_bins": int, "feedback_k": int, "jobs": int,
    "hist_weight": float, "hist": _parse_bool, "boundary": str.strip, "patch_counts": parse_counts,
}


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read config ({exc.strerror})") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CONVERTERS[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def build_config(args) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    values = read_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", metavar="PATH", help="flat key=value config file")
    g.add_argument("--seed", type=int)
    g.add_argument("--levels", type=int, metavar="J", help="wavelet scales (default 3)")
    g.add_argument("--select-k", type=int, metavar="N", help="patches kept after selection (default 200)")
    g.add_argument("--patch-counts", type=parse_counts, metavar="SPEC", help="e.g. 4:250,8:250,12:250,16:250")
    g.add_argument("--hist", action=argparse.BooleanOptionalAction, default=None,
                   help="append the approximation histogram (off by default)")
    g.add_argument("--hist-bins", type=int, metavar="N", help="histogram bins (default 64)")
    g.add_argument("--hist-weight", type=float, metavar="W")
    g.add_argument("--feedback-k", type=int, metavar="K", help="clusters for feedback (default 2)")
    g.add_argument("--boundary", choices=("valid", "periodic"), help="S2 boundary mode")
    g.add_argument("--jobs", type=int, metavar="N", help="worker threads (fallback: WVC_JOBS)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wvc", description="Wavelet/patch feature hierarchy with 1-NN classification.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    sub = parser.add_subparsers(
        dest="command", required=True, parser_class=_Parser,
        metavar="{train,predict,evaluate,feedback,spectrogram,simulate-res,dynamics,inspect}",
    )

    p = sub.add_parser("train", help="manifest -> model file")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    _common(p)

    p = sub.add_parser("predict", help="model + images -> CSV")
    p.add_argument("model")
    p.add_argument("images", nargs="+")
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    _common(p)

    p = sub.add_parser("evaluate", help="model + manifest -> accuracy report")
    p.add_argument("model")
    p.add_argument("manifest")
    p.add_argument("--split", choices=("test", "train", "all"), default="test")
    _common(p)

    p = sub.add_parser("feedback", help="model + scene -> cluster JSON lines")
    p.add_argument("model")
    p.add_argument("image")
    p.add_argument("--min-members", type=int, default=MIN_MEMBERS)
    _common(p)

    p = sub.add_parser("spectrogram", help="WAV -> PGM spectrogram segments")
    p.add_argument("wav")
    p.add_argument("outdir")
    p.add_argument("--frame", type=int, default=1024)
    p.add_argument("--hop", type=int, default=512)
    p.add_argument("--segment-seconds", type=float, default=5.0)

    p = sub.add_parser("simulate-res", help="Gaussian blur and subsample an image")
    p.add_argument("image")
    p.add_argument("factor", type=int)
    p.add_argument("output")

    p = sub.add_parser("dynamics", help="JSON scenario -> trajectory CSV")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    p.add_argument("--every", type=int, default=1, help="keep every Nth step")

    p = sub.add_parser("inspect", help="model summary and selection report")
    p.add_argument("model")
    p.add_argument("--report", help="write the selection CSV here instead of stdout")

    p = sub.add_parser("gen-textures")  # hidden: synthetic corpus for tests and demos
    p.add_argument("outdir")
    p.add_argument("--per-class", type=int, default=8)
    p.add_argument("--test-per-class", type=int, default=8)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    return parser


# ---------------------------------------------------------------------------
# commands


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _load_images(paths, jobs):
    return parallel_map(decode_grayscale, paths, jobs)


def _model_config(model, cfg: RunConfig, args) -> RunConfig:
    """Prediction-time config: the model's settings unless a flag overrides them."""
    base = replace(cfg, levels=model.wavelet.levels, boundary="periodic" if model.options.periodic else "valid",
                   hist=model.has_hist, hist_bins=model.options.hist_bins or cfg.hist_bins)
    if args.config:
        file_values = read_config(args.config)
        base = replace(base, **{k: v for k, v in file_values.items() if k in ("levels", "boundary", "hist", "hist_bins")})
    for name in ("levels", "boundary", "hist", "hist_bins"):
        flag = getattr(args, name, None)
        if flag is not None:
            base = replace(base, **{name: flag})
    return base


def _describe_all(model, images, cfg: RunConfig):
    bins = cfg.active_hist_bins
    periodic = cfg.boundary == "periodic"
    return parallel_map(lambda im: describe(im, model.bank, cfg.wavelet, bins, periodic), images, cfg.jobs)


def cmd_train(args, cfg: RunConfig) -> int:
    entries = [e for e in read_manifest(args.manifest) if e.split == "train"]
    if not entries:
        raise DataError(f"{args.manifest}: no training entries")
    images = _load_images([e.path for e in entries], cfg.jobs)
    log.info("training on %d images", len(images))
    model, report = fit(images, [e.label for e in entries], cfg.wavelet, cfg.patch_counts, cfg.select_k,
                        cfg.seed, cfg.active_hist_bins, cfg.hist_weight, cfg.boundary == "periodic", cfg.jobs)
    save_model(model, args.output)
    print(f"wrote {args.output}: {len(images)} images, {len(set(model.labels))} classes, "
          f"{len(model.bank.selected)}/{len(model.bank)} patches kept")
    return EXIT_OK


def cmd_predict(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    pcfg = _model_config(model, cfg, args)
    images = _load_images(args.images, cfg.jobs)
    preds = [nn_predict(model, fv, hist) for fv, hist in _describe_all(model, images, pcfg)]
    out, close = _open_out(args.output)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["path", "predicted", "distance", "neighbor"])
        for path, (label, dist, row) in zip(args.images, preds):
            w.writerow([path, label, repr(dist), row])
    finally:
        if close:
            out.close()
    return EXIT_OK


def confusion_report(truth, predicted) -> str:
    """Accuracy, confusion counts and per-class one-vs-rest ROC accuracy."""
    classes = sorted(set(truth) | set(predicted))
    idx = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        counts[idx[t], idx[p]] += 1
    n = len(truth)
    buf = io.StringIO()
    buf.write(f"accuracy {np.trace(counts) / n:.6f} ({int(np.trace(counts))}/{n})\n")
    buf.write("confusion (rows true, columns predicted)\n")
    width = max(len(c) for c in classes)
    buf.write(" " * width + "".join(f" {c:>{width}}" for c in classes) + "\n")
    for c in classes:
        buf.write(f"{c:<{width}}" + "".join(f" {v:>{width}d}" for v in counts[idx[c]]) + "\n")
    buf.write("class,fpr,tpr,p,roc_accuracy\n")
    for c in classes:
        i = idx[c]
        pos = counts[i].sum()
        neg = n - pos
        tp = counts[i, i]
        fp = counts[:, i].sum() - tp
        x = float(fp / neg) if neg else 0.0
        y = float(tp / pos) if pos else 1.0
        p = float(pos / n)
        buf.write(f"{c},{x!r},{y!r},{p!r},{roc_accuracy(x, y, p)!r}\n")
    return buf.getvalue()


def cmd_evaluate(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    pcfg = _model_config(model, cfg, args)
    entries = [e for e in read_manifest(args.manifest) if args.split == "all" or e.split == args.split]
    if not entries:
        raise DataError(f"{args.manifest}: no {args.split} entries")
    images = _load_images([e.path for e in entries], cfg.jobs)
    preds = [nn_predict(model, fv, h)[0] for fv, h in _describe_all(model, images, pcfg)]
    sys.stdout.write(confusion_report([e.label for e in entries], preds))
    return EXIT_OK


def cmd_feedback(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    pcfg = _model_config(model, cfg, args)
    img = decode_grayscale(args.image)
    fv, _ = describe(img, model.bank, pcfg.wavelet, 0, pcfg.boundary == "periodic")
    fitting = int(fv.fits.sum())
    if fitting < cfg.feedback_k:
        raise DataError(f"{args.image}: {fitting} located features cannot form {cfg.feedback_k} clusters")
    for res in feedback_classify(model, fv, cfg.feedback_k, cfg.seed, args.min_members):
        print(json.dumps(res.to_json()))
    return EXIT_OK


def cmd_spectrogram(args) -> int:
    if args.frame < 2 or args.frame & (args.frame - 1):
        raise UsageError(f"--frame must be a power of two, got {args.frame}")
    if not 1 <= args.hop <= args.frame:
        raise UsageError(f"--hop must be in [1, frame], got {args.hop}")
    if args.segment_seconds <= 0:
        raise UsageError("--segment-seconds must be positive")
    images = wav_to_log_spectrogram(args.wav, args.frame, args.hop, args.segment_seconds)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.wav).stem
    for i, img in enumerate(images):
        encode_pgm(img, outdir / f"{stem}_{i:03d}.pgm", maxval=65535)
    print(f"wrote {len(images)} segment(s) to {outdir}")
    return EXIT_OK


def cmd_simulate_res(args) -> int:
    if args.factor < 1:
        raise UsageError(f"factor must be >= 1, got {args.factor}")
    save_image(gaussian_downsample(decode_grayscale(args.image), args.factor), args.output)
    return EXIT_OK


def cmd_dynamics(args) -> int:
    if args.every < 1:
        raise UsageError("--every must be >= 1")
    try:
        spec = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"{args.scenario}: cannot read scenario ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.scenario}: invalid JSON ({exc})") from exc
    try:
        sc = load_scenario(spec)
        times, states = run_scenario(sc)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{args.scenario}: {exc}") from exc
    except IntegrationError as exc:
        raise DataError(f"{args.scenario}: integration diverged at t={exc.t:.6g}") from exc
    keep = np.arange(0, len(times), args.every)
    if keep[-1] != len(times) - 1:
        keep = np.append(keep, len(times) - 1)
    out, close = _open_out(args.output)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t"] + [f"component_{i}" for i in range(states.shape[1])])
        for i in keep:
            w.writerow([repr(float(times[i]))] + [repr(float(v)) for v in states[i]])
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_inspect(args) -> int:
    model = load_model(args.model)
    bank = model.bank
    sides = {}
    for i in bank.selected:
        sides[bank.patches[i].side] = sides.get(bank.patches[i].side, 0) + 1
    labels, counts = np.unique(np.array(model.labels), return_counts=True)
    print(f"format version {model.format_version}")
    print(f"wavelet levels {model.wavelet.levels}, epsilon {model.wavelet.epsilon!r}")
    print(f"boundary {'periodic' if model.options.periodic else 'valid'}")
    print(f"histogram bins {model.options.hist_bins} (weight {model.options.hist_weight!r})"
          if model.has_hist else "histogram off")
    print(f"patch seed {bank.rng_seed}; {len(bank.selected)} of {len(bank)} patches selected")
    print("selected by side " + ", ".join(f"{m}:{n}" for m, n in sorted(sides.items())))
    print(f"training rows {len(model.labels)}: " + ", ".join(f"{l}={c}" for l, c in zip(labels, counts)))
    if bank.variances is None:
        print("no selection variances stored")
        return EXIT_OK
    kept = np.lexsort((np.arange(len(bank)), -bank.variances))[: len(bank.selected)]
    text = SelectionReport(bank.variances, kept, len(kept)).to_csv()
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gen_textures(args) -> int:
    from .synth import texture_corpus

    if min(args.per_class, args.test_per_class, args.classes - 1) < 1 or args.size < 16:
        raise UsageError("need per-class counts >= 1, at least 2 classes and size >= 16")
    n = args.per_class + args.test_per_class
    images, labels = texture_corpus(n, args.size, args.seed, args.classes)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (img, lab) in enumerate(zip(images, labels)):
        name = f"{lab}_{i % n:03d}.png"
        save_image(img, outdir / name)
        entries.append(ManifestEntry(Path(name), lab, "train" if i % n < args.per_class else "test"))
    write_manifest(entries, outdir / "manifest.csv")
    print(f"wrote {len(entries)} images and {outdir / 'manifest.csv'}")
    return EXIT_OK


_WITH_CONFIG = {"train": cmd_train, "predict": cmd_predict, "evaluate": cmd_evaluate, "feedback": cmd_feedback}
_PLAIN = {"spectrogram": cmd_spectrogram, "simulate-res": cmd_simulate_res, "dynamics": cmd_dynamics,
          "inspect": cmd_inspect, "gen-textures": cmd_gen_textures}


def run_command(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s", stream=sys.stderr)
        if args.command in _WITH_CONFIG:
            cfg = build_config(args)
            try:
                resolve_jobs(cfg.jobs)
            except ValueError:
                raise UsageError("WVC_JOBS must be an integer") from None
            return _WITH_CONFIG[args.command](args, cfg)
        return _PLAIN[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_command())
