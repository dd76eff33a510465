"""Command line interface: sbm-gen, diagnose, train, study, rerun.

Every command resolves its configuration fully (defaults, then config file,
then flags), executes as a pure function of that resolved config, and writes
a manifest next to its outputs. ``pastel rerun <manifest>`` re-executes the
recorded command and reproduces the data outputs byte for byte.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import rng as rng_mod
from .errors import (
    InvalidInputError,
    InvalidParams,
    NumericalError,
    PastelError,
)
from .gpr import group_pagerank
from .graph import (
    Graph,
    LabelSplit,
    SbmParams,
    generate_sbm,
    load_graph,
    sample_split,
    save_graph,
)
from .metrics import (
    curvature_map,
    imbalance_report,
    reaching_coefficient,
    squashing_coefficient,
)
from .trainer import (
    BASELINE_KINDS,
    StudyRecord,
    TrainConfig,
    evaluate,
    label_placement_study,
    run_baseline,
    train,
)

TRAIN_FIELDS = [f.name for f in dataclasses.fields(TrainConfig)]


# ------------------------------------------------------------ small helpers

def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n")


def _parse_kv_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise InvalidParams(f"{path}:{lineno}: expected key=value")
        key, value = text.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _parse_sbm_spec(spec: str) -> dict:
    """Parse an inline 'n=600,c=4,p=0.1,q=0.005[,...]' SBM description."""
    out: dict = {}
    for part in spec.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise InvalidParams(f"bad sbm spec fragment {part!r}")
        key, value = part.split("=", 1)
        key = key.strip()
        if key in ("n", "c", "feature_dim"):
            out[key] = int(value)
        elif key in ("p", "q", "feature_noise"):
            out[key] = float(value)
        else:
            raise InvalidParams(f"unknown sbm key {key!r}")
    for required in ("n", "c", "p", "q"):
        if required not in out:
            raise InvalidParams(f"sbm spec is missing {required!r}")
    return out


def _coerce(key: str, value):
    """Coerce a string config value to its TrainConfig field type."""
    if not isinstance(value, str):
        return value
    fields = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    kind = fields.get(key, "str")
    if key == "track_imbalance" or kind == "bool":
        return value.lower() in ("1", "true", "yes", "on")
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    return value


def _resolve_train_config(config: dict) -> TrainConfig:
    kwargs = {k: config[k] for k in TRAIN_FIELDS if k in config and config[k] is not None}
    return TrainConfig(**kwargs)


def _load_inputs(config: dict) -> tuple[Graph, np.ndarray, dict[str, dict]]:
    """Load the graph + labels either from files or an inline SBM spec."""
    digests: dict[str, dict] = {}
    if config.get("sbm"):
        params = SbmParams(**_parse_sbm_spec(config["sbm"]))
        g, labels = generate_sbm(params, seed=config["seed"])
        return g, labels, digests
    if not config.get("edges"):
        raise InvalidParams("provide --edges or --sbm")
    for key in ("edges", "features", "labels"):
        if config.get(key):
            path = config[key]
            if not Path(path).exists():
                raise InvalidParams(f"{key} file {path!r} does not exist")
            digests[key] = {"path": str(path), "sha256": _sha256(path)}
    g, labels = load_graph(
        config["edges"], config.get("features"), config.get("labels")
    )
    if labels is None:
        raise InvalidParams("a label file is required")
    return g, labels, digests


def _build_split(g: Graph, labels: np.ndarray, config: dict) -> LabelSplit:
    if config.get("labeled"):
        ids = np.array([int(x) for x in str(config["labeled"]).split(",")])
        train = np.zeros(g.n, dtype=bool)
        train[ids] = True
        if np.any(labels[train] < 0):
            raise InvalidParams("an explicitly labeled node has no class id")
        return LabelSplit(
            labels=labels,
            train_mask=train,
            val_mask=np.zeros(g.n, dtype=bool),
            test_mask=~train,
        )
    return sample_split(g, labels, int(config.get("per_class", 20)), config["seed"])


def _write_manifest(
    out_prefix: str, command: str, config: dict, inputs: dict, outputs: dict
) -> str:
    manifest = {
        "tool": "pastel",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
    }
    path = f"{out_prefix}.manifest.json"
    _write_json(path, manifest)
    return path


def _worker_count(trials: int) -> int:
    cap = os.environ.get("PASTEL_THREADS")
    if cap is None:
        return 1
    return max(1, min(int(cap), trials))


# ---------------------------------------------------------------- commands

def run_sbm_gen(config: dict) -> dict:
    params = SbmParams(
        n=config["n"],
        c=config["c"],
        p=config["p"],
        q=config["q"],
        feature_dim=config.get("feature_dim") or 16,
        feature_noise=config.get("feature_noise")
        if config.get("feature_noise") is not None
        else 1.0,
    )
    g, labels = generate_sbm(params, seed=config["seed"])
    prefix = config["out"]
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    outputs = {
        "edges": f"{prefix}.edges",
        "features": f"{prefix}.features.csv",
        "labels": f"{prefix}.labels.csv",
    }
    save_graph(g, outputs["edges"], outputs["features"], outputs["labels"], labels)
    _write_manifest(prefix, "sbm-gen", config, {}, outputs)
    return outputs


def run_diagnose(config: dict) -> dict:
    g, labels, digests = _load_inputs(config)
    split = _build_split(g, labels, config)
    report = imbalance_report(g, split)
    payload = {
        "rc": report.rc,
        "sc": report.sc,
        "per_edge_curvature": [
            [int(u), int(v), float(k)]
            for (u, v), k in zip(report.curvature.edges, report.curvature.values)
        ],
    }
    text = json.dumps(payload, sort_keys=True) + "\n"
    if config.get("out"):
        Path(config["out"]).write_text(text)
        prefix = str(config["out"]).removesuffix(".json")
        _write_manifest(prefix, "diagnose", config, digests, {"report": config["out"]})
    else:
        sys.stdout.write(text)
    return payload


def _summary_diagnostics(
    g: Graph, split: LabelSplit, learned: Graph | None
) -> dict[str, float]:
    before = imbalance_report(g, split)
    out = {
        "rc_before": before.rc,
        "sc_before": before.sc,
        "rc_after": before.rc,
        "sc_after": before.sc,
    }
    if learned is not None:
        out["rc_after"] = reaching_coefficient(learned, split)
        out["sc_after"] = squashing_coefficient(learned, split, curvature_map(learned))
    return out


def run_train(config: dict) -> dict:
    g, labels, digests = _load_inputs(config)
    split = _build_split(g, labels, config)
    cfg = _resolve_train_config(config)
    baseline = config.get("baseline")
    if baseline:
        if baseline not in BASELINE_KINDS:
            raise InvalidParams(f"unknown baseline {baseline!r}")
        result = run_baseline(baseline, g, split, cfg,
                              rate=float(config.get("rate") or 0.10))
    else:
        result = train(g, split, cfg)

    wf1, mf1 = evaluate(result.logits, split, "test")
    summary: dict = {"wf1": wf1, "mf1": mf1}
    summary.update(_summary_diagnostics(g, split, result.learned_graph))

    prefix = config["out"]
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    outputs = {
        "summary": f"{prefix}.summary.json",
        "records": f"{prefix}.records.jsonl",
    }
    _write_json(outputs["summary"], summary)
    with Path(outputs["records"]).open("w") as fh:
        for record in result.records:
            fh.write(json.dumps(dataclasses.asdict(record), sort_keys=True) + "\n")

    if config.get("dump_structure"):
        outputs["structure"] = config["dump_structure"]
        a_star = (
            result.structure.a_star
            if result.structure is not None
            else g.adjacency
        )
        with Path(config["dump_structure"]).open("w") as fh:
            upper = np.triu(a_star, k=1)
            for u, v in zip(*np.nonzero(upper)):
                fh.write(f"{u} {v} {float(a_star[u, v])!r}\n")
    if config.get("dump_gpr"):
        outputs["gpr"] = config["dump_gpr"]
        basis = result.learned_graph if result.learned_graph is not None else g
        gpr = group_pagerank(basis, split, cfg.restart_prob)
        with Path(config["dump_gpr"]).open("w") as fh:
            for row in gpr.values:
                fh.write(",".join(repr(x) for x in row.tolist()) + "\n")

    _write_manifest(prefix, "train", config, digests, outputs)
    return summary


def _study_structures(config: dict, cfg: TrainConfig) -> list[StudyRecord]:
    base = _parse_sbm_spec(config["sbm"])
    q_values = [float(x) for x in str(config["q_list"]).split(",") if x.strip()]
    if not q_values:
        raise InvalidParams("--q-list must name at least one q value")

    def one(q: float) -> StudyRecord:
        params = SbmParams(**{**base, "q": q})
        g, labels = generate_sbm(params, seed=config["seed"])
        # Community sizes only depend on (n, c), so the label placement is
        # identical across all q values under the shared seed.
        split = sample_split(g, labels, cfg.per_class, seed=config["seed"])
        rc = reaching_coefficient(g, split)
        sc = squashing_coefficient(g, split, curvature_map(g))
        result = run_baseline("plain_gcn", g, split, cfg)
        wf1, _ = evaluate(result.logits, split, "test")
        return StudyRecord(rc=rc, sc=sc, wf1=wf1, seed=config["seed"])

    workers = _worker_count(len(q_values))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, q_values))
    return [one(q) for q in q_values]


def run_study(config: dict) -> list[StudyRecord]:
    mode = config.get("mode") or "labels"
    cfg = _resolve_train_config(config)
    if mode == "labels":
        g, labels, _ = _load_inputs(config)
        trials = int(config.get("trials") or 10)
        records = label_placement_study(
            g, labels, trials, cfg, workers=_worker_count(trials)
        )
    elif mode == "structures":
        if not config.get("sbm"):
            raise InvalidParams("structures mode needs an --sbm spec")
        records = _study_structures(config, cfg)
    else:
        raise InvalidParams(f"unknown study mode {mode!r}")

    lines = ["rc,sc,wf1,seed"]
    for r in records:
        lines.append(f"{r.rc!r},{r.sc!r},{r.wf1!r},{r.seed}")
    text = "\n".join(lines) + "\n"
    out = config.get("out")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
        prefix = str(out).removesuffix(".csv")
        _write_manifest(prefix, "study", config, {}, {"csv": str(out)})
    else:
        sys.stdout.write(text)
    return records


RUNNERS = {
    "sbm-gen": run_sbm_gen,
    "diagnose": run_diagnose,
    "train": run_train,
    "study": run_study,
}


def run_rerun(config: dict) -> None:
    manifest = json.loads(Path(config["manifest"]).read_text())
    command = manifest["command"]
    if command not in RUNNERS:
        raise InvalidParams(f"manifest names unknown command {command!r}")
    stored = dict(manifest["config"])
    if config.get("out"):
        stored["out"] = config["out"]
    RUNNERS[command](stored)


# ------------------------------------------------------------------ parsing

def _add_train_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value config file; flags override")
    sub.add_argument("--epochs", type=int)
    sub.add_argument("--heads", type=int)
    sub.add_argument("--restart-prob", dest="restart_prob", type=float)
    sub.add_argument("--lambda1", type=float)
    sub.add_argument("--lambda2", type=float)
    sub.add_argument("--lambda-decay", dest="lambda_decay", type=float)
    sub.add_argument("--lambda-floor", dest="lambda_floor", type=float)
    sub.add_argument("--beta-smooth", dest="beta_smooth", type=float)
    sub.add_argument("--beta-connect", dest="beta_connect", type=float)
    sub.add_argument("--beta-sparse", dest="beta_sparse", type=float)
    sub.add_argument("--a0", type=float)
    sub.add_argument("--lr", type=float)
    sub.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    sub.add_argument("--embed-dim", dest="embed_dim", type=int)
    sub.add_argument("--dropout", type=float)
    sub.add_argument("--per-class", dest="per_class", type=int)
    sub.add_argument("--patience", type=int)


def _add_input_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--edges", help="edge list file")
    sub.add_argument("--features", help="feature CSV file")
    sub.add_argument("--labels", help="label CSV file")
    sub.add_argument("--sbm", help="inline SBM spec n=..,c=..,p=..,q=..")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pastel",
        description="Position-aware graph structure learning and "
        "topology-imbalance diagnostics.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("sbm-gen", help="generate an SBM benchmark graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--feature-dim", dest="feature_dim", type=int)
    p.add_argument("--feature-noise", dest="feature_noise", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file prefix")

    p = subs.add_parser("diagnose", help="reaching/squashing diagnostics")
    _add_input_flags(p)
    p.add_argument("--labeled", help="comma-separated labeled node ids")
    p.add_argument("--per-class", dest="per_class", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here (default stdout)")

    p = subs.add_parser("train", help="train the structure learner or a baseline")
    _add_input_flags(p)
    _add_train_flags(p)
    p.add_argument("--baseline", choices=BASELINE_KINDS)
    p.add_argument("--rate", type=float, help="edge add/drop rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file prefix")
    p.add_argument("--dump-structure", dest="dump_structure")
    p.add_argument("--dump-gpr", dest="dump_gpr")

    p = subs.add_parser("study", help="label-placement / structure studies")
    _add_input_flags(p)
    _add_train_flags(p)
    p.add_argument("--mode", choices=("labels", "structures"), default="labels")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--q-list", dest="q_list", help="comma-separated q values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path (default stdout)")

    p = subs.add_parser("rerun", help="re-execute a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="override the output prefix/path")
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags, as one flat dict."""
    config: dict = {}
    raw = vars(args)
    if raw.get("config"):
        for key, value in _parse_kv_file(raw["config"]).items():
            config[key] = _coerce(key, value)
    for key, value in raw.items():
        if key in ("command", "config"):
            continue
        if value is not None:
            config[key] = value
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _resolve(args)
    try:
        if args.command == "rerun":
            run_rerun(config)
        else:
            RUNNERS[args.command](config)
    except (InvalidInputError, FileNotFoundError) as exc:
        _emit_error(exc)
        return 2
    except NumericalError as exc:
        _emit_error(exc)
        return 3
    except PastelError as exc:
        _emit_error(exc)
        return 2
    return 0


def _emit_error(exc: Exception) -> None:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
