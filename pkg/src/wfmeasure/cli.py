"""Command-line front end.

    wfmeasure eval     --pred DIR --gt DIR      saliency metrics per image + means
    wfmeasure loss     --pred DIR --gt DIR      1 - F and optional gradient dumps
    wfmeasure oracle   --pred DIR --gt DIR      brute-force weighted F per pair
    wfmeasure compare  --sizes 8 16 32          exact vs approximate deviation
    wfmeasure bench    --size 224               exact vs approximate wall time
    wfmeasure optimize --size 32 | --gt FILE    fit a map by descending the loss

Exit status: 0 success, 1 some images failed, 2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple


from . import images, report, verify
from .approx import afw_loss
from .errors import ImageFormatError, OracleSizeError, WfmError
from .exact import ORACLE_MAX_PIXELS, fw_beta_exact
from .metrics import SALIENCY_BETA_SQ, evaluate_dataset
from .params import DeltaMode, ErrorNorm, ExponentForm, WfmParams

log = logging.getLogger("wfmeasure")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2

COMMANDS = ("eval", "loss", "oracle", "compare", "bench", "optimize")


class ConfigError(WfmError):
    pass


@dataclasses.dataclass
class RunConfig:
    command: str
    params: WfmParams = WfmParams()
    pred: Optional[Path] = None
    gt: Optional[Path] = None
    output: Optional[Path] = None
    gt_threshold: int = 128
    fmt: str = "json"
    seed: int = 0
    jobs: int = 1
    allow_large_oracle: bool = False
    beta_sq: float = SALIENCY_BETA_SQ
    grad_dir: Optional[Path] = None
    sizes: Tuple[int, ...] = (8, 16, 32)
    trials: int = 50
    size: int = 224
    reps: int = 5
    steps: int = 200
    step_size: float = 0.5
    save_map: Optional[Path] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.fmt not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.fmt!r}")
        if not 0 <= self.gt_threshold <= 255:
            raise ConfigError("--gt-threshold must be in [0, 255]")
        if self.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if self.command in ("eval", "loss", "oracle") and (self.pred is None or self.gt is None):
            raise ConfigError(f"{self.command} needs --pred and --gt")


def pair_files(pred: Path, gt: Path) -> List[Tuple[str, Path, Path]]:
    """Match prediction and ground-truth files by stem; any leftover is an error.

    Two single files are paired directly under the ground truth's stem.
    """
    if pred.is_file() and gt.is_file():
        return [(gt.stem, pred, gt)]
    preds = images.list_images(pred)
    gts = images.list_images(gt)
    missing_pred = sorted(set(gts) - set(preds))
    missing_gt = sorted(set(preds) - set(gts))
    if missing_pred or missing_gt:
        raise ConfigError(
            "unpaired files: "
            + ", ".join([f"{s} (no prediction)" for s in missing_pred] + [f"{s} (no ground truth)" for s in missing_gt])
        )
    if not gts:
        raise ConfigError("no PNG/PGM images found")
    return [(stem, preds[stem], gts[stem]) for stem in sorted(gts)]


def _map(fn, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _eval(cfg: RunConfig) -> Tuple[int, str]:
    pairs = pair_files(cfg.pred, cfg.gt)
    items = [
        (stem, (lambda g=g: images.ingest_mask(g, cfg.gt_threshold)), (lambda p=p: images.ingest_prediction(p)))
        for stem, p, g in pairs
    ]
    rep = evaluate_dataset(items, cfg.params, cfg.beta_sq, cfg.jobs)
    text = report.metrics_csv(rep) if cfg.fmt == "csv" else report.to_json(rep.to_dict(), "metrics")
    return (EXIT_PARTIAL if rep.errors else EXIT_OK), text


def _per_pair(cfg: RunConfig, fn, kind: str, header) -> Tuple[int, str]:
    pairs = pair_files(cfg.pred, cfg.gt)

    def one(item):
        stem, p, g = item
        try:
            y = images.ingest_mask(g, cfg.gt_threshold)
            yhat = images.ingest_prediction(p)
            return fn(stem, y, yhat), None
        except (WfmError, ValueError) as exc:
            return None, {"id": stem, "error": f"{type(exc).__name__}: {exc}"}

    results = _map(one, pairs, cfg.jobs)
    # pairs are stem-sorted and _map preserves order
    rows = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    if cfg.fmt == "csv":
        table = [[r[h] for h in header] for r in rows]
        table += [[e["id"]] + [""] * (len(header) - 1) for e in errors]
        text = report.rows_csv(header, table)
    else:
        text = report.to_json({"per_image": rows, "errors": errors, "params": cfg.params.to_dict()}, kind)
    return (EXIT_PARTIAL if errors else EXIT_OK), text


def _loss(cfg: RunConfig) -> Tuple[int, str]:
    if cfg.grad_dir is not None:
        cfg.grad_dir.mkdir(parents=True, exist_ok=True)

    def fn(stem, y, yhat):
        loss, grad = afw_loss(y, yhat, cfg.params)
        row = {"id": stem, "loss": loss, "fw": 1.0 - loss}
        if cfg.grad_dir is not None:
            png = cfg.grad_dir / f"{stem}_grad.png"
            images.write_gradient(png, grad)
            row["gradient"] = png.name
        return row

    return _per_pair(cfg, fn, "loss", ("id", "loss", "fw"))


def _oracle(cfg: RunConfig) -> Tuple[int, str]:
    if not cfg.allow_large_oracle:
        for stem, _, g in pair_files(cfg.pred, cfg.gt):
            try:
                h, w = images.read_gray8(g).shape
            except ImageFormatError:
                continue  # reported per image below
            if h * w > ORACLE_MAX_PIXELS:
                raise ConfigError(
                    f"{stem}: {w}x{h} exceeds the oracle cap of {ORACLE_MAX_PIXELS} pixels "
                    "(use --allow-large-oracle)"
                )

    def fn(stem, y, yhat):
        counts = fw_beta_exact(y, yhat, cfg.params, allow_large=cfg.allow_large_oracle)
        return {"id": stem, **counts.to_dict()}

    return _per_pair(cfg, fn, "oracle", ("id", "f_w", "p_w", "r_w", "tp_w", "fp_w", "fn_w", "tn_w"))


def _compare(cfg: RunConfig) -> Tuple[int, str]:
    try:
        rep = verify.compare_exact_approx(cfg.sizes, cfg.trials, cfg.params, cfg.seed)
    except OracleSizeError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.fmt == "csv":
        return EXIT_OK, report.rows_csv(
            ("size", "f_exact", "f_approx", "abs_gap", "bound"),
            [(i.size, i.f_exact, i.f_approx, i.abs_gap, i.bound) for i in rep.instances],
        )
    return EXIT_OK, report.to_json(rep.to_dict(), "deviation")


def _bench(cfg: RunConfig) -> Tuple[int, str]:
    try:
        rep = verify.bench(cfg.size, cfg.reps, cfg.params, cfg.allow_large_oracle, cfg.seed)
    except OracleSizeError as exc:
        raise ConfigError(str(exc)) from exc
    d = rep.to_dict()
    if cfg.fmt == "csv":
        keys = sorted(d)
        return EXIT_OK, report.rows_csv(keys, [[d[k] for k in keys]])
    return EXIT_OK, report.to_json(d, "bench")


def _optimize(cfg: RunConfig) -> Tuple[int, str]:
    if cfg.gt is not None:
        y = images.ingest_mask(cfg.gt, cfg.gt_threshold)
    else:
        y = verify.disk_mask(cfg.size)
    trace = verify.optimize_map(y, cfg.steps, cfg.step_size, cfg.params)
    if cfg.save_map is not None:
        images.write_gray8(cfg.save_map, trace.final_map)
    if cfg.fmt == "csv":
        return EXIT_OK, report.rows_csv(("step", "loss", "fw"), [(s.step, s.loss, s.fw) for s in trace.steps])
    return EXIT_OK, report.to_json(trace.to_dict(), "optimize")


_HANDLERS = {
    "eval": _eval,
    "loss": _loss,
    "oracle": _oracle,
    "compare": _compare,
    "bench": _bench,
    "optimize": _optimize,
}


def run(cfg: RunConfig) -> Tuple[int, str]:
    """Execute one command; returns (exit status, serialised report or error message)."""
    try:
        return _HANDLERS[cfg.command](cfg)
    except (ConfigError, ImageFormatError, OracleSizeError) as exc:
        return EXIT_CONFIG, str(exc)
    except WfmError as exc:
        return EXIT_CONFIG, f"{type(exc).__name__}: {exc}"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("metric parameters")
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--theta", type=int, default=9)
    g.add_argument("--sigma", type=float, default=None, help="default: theta / 4")
    g.add_argument("--phi", type=int, default=5)
    g.add_argument("--alpha", type=float, default=WfmParams().alpha)
    g.add_argument("--exponent-form", choices=[e.value for e in ExponentForm], default=ExponentForm.SQUARED_DISTANCE.value)
    g.add_argument("--delta-mode", choices=[e.value for e in DeltaMode], default=DeltaMode.SQUARED_BANDED.value)
    g.add_argument("--error-norm", choices=[e.value for e in ErrorNorm], default=ErrorNorm.L2.value)
    o = common.add_argument_group("run options")
    o.add_argument("--gt-threshold", type=int, default=128)
    o.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--jobs", type=int, default=1)
    o.add_argument("--allow-large-oracle", action="store_true")
    o.add_argument("-o", "--output", type=Path, default=None)

    parser = argparse.ArgumentParser(prog="wfmeasure", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def pair_cmd(name, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--pred", type=Path, required=True, help="prediction image or directory")
        p.add_argument("--gt", type=Path, required=True, help="ground-truth image or directory")
        return p

    p = pair_cmd("eval", "MAE, AUROC, max F, IoU@0.5 and weighted F_1 per image")
    p.add_argument("--beta-sq", type=float, default=SALIENCY_BETA_SQ)
    p = pair_cmd("loss", "1 - F (approximate) per image, optionally dumping gradients")
    p.add_argument("--grad-dir", type=Path, default=None)
    pair_cmd("oracle", "brute-force weighted F per image")

    p = sub.add_parser("compare", parents=[common], help="exact vs approximate on random instances")
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    p.add_argument("--trials", type=int, default=50)

    p = sub.add_parser("bench", parents=[common], help="wall time of exact vs approximate")
    p.add_argument("--size", type=int, default=224)
    p.add_argument("--reps", type=int, default=5)

    p = sub.add_parser("optimize", parents=[common], help="fit a map by gradient descent on the loss")
    p.add_argument("--gt", type=Path, default=None, help="mask image; default a synthetic disk")
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--step-size", type=float, default=0.5)
    p.add_argument("--save-map", type=Path, default=None)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = WfmParams(
        beta=ns.beta,
        theta=ns.theta,
        sigma=ns.sigma,
        phi=ns.phi,
        alpha=ns.alpha,
        exponent_form=ns.exponent_form,
        delta_mode=ns.delta_mode,
        error_norm=ns.error_norm,
    )
    extra = {}
    for name in ("pred", "gt", "beta_sq", "grad_dir", "trials", "size", "reps", "steps", "step_size", "save_map"):
        if hasattr(ns, name):
            extra[name] = getattr(ns, name)
    if hasattr(ns, "sizes"):
        extra["sizes"] = tuple(ns.sizes)
    return RunConfig(
        command=ns.command,
        params=params,
        output=ns.output,
        gt_threshold=ns.gt_threshold,
        fmt=ns.fmt,
        seed=ns.seed,
        jobs=ns.jobs,
        allow_large_oracle=ns.allow_large_oracle,
        **extra,
    )


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except WfmError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    status, text = run(cfg)
    if status == EXIT_CONFIG:
        log.error("%s", text)
        return status
    if cfg.output is not None:
        cfg.output.write_text(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_PARTIAL:
        log.warning("some images failed; see the errors entries in the report")
    return status


if __name__ == "__main__":
    sys.exit(main())
