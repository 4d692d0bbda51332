"""Command-line entry point orchestrating the full pipeline.

Subcommands: prepare, train-bpe, train-baseline, train, predict, ensemble,
bucket-select, evaluate. Logs go to stderr, machine-readable results to
stdout or files, so stages compose in shell pipelines. All randomness is
controlled by explicit seeds; identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import baselines, bpe, ensemble, textfeat, trainer
from .config import RunConfig
from .corpus import (
    ClassLabel,
    LabeledCorpus,
    LengthBucket,
    load_corpus,
    resplit,
    save_corpus,
)
from .encoder import parse_strategy
from .ensemble import PredictionVector
from .global_local import GlobalLocalConfig, GlobalLocalModel
from .metrics import f1_informative
from .trainer import Checkpoint, SingleEncoderClassifier, train_two_phase

logger = logging.getLogger("tweetinform")


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _max_workers(n_tasks: int) -> int:
    env = os.environ.get("TWEETINFORM_THREADS")
    cap = int(env) if env else 4
    return max(1, min(cap, n_tasks))


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_prepare(args: argparse.Namespace) -> int:
    train = load_corpus(args.train, has_labels=True, expect_header=not args.no_header)
    valid = load_corpus(args.valid, has_labels=True, expect_header=not args.no_header,
                        split_tag="validation")
    if args.resplit:
        train, valid = resplit(train, valid, seed=args.seed)
        logger.info("re-split 90/10 with seed %d", args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / "train.tsv"
    valid_path = out_dir / "valid.tsv"
    save_corpus(train, train_path)
    save_corpus(valid, valid_path)
    _emit({"train": len(train), "validation": len(valid),
           "train_path": str(train_path), "valid_path": str(valid_path)})
    return 0


def cmd_train_bpe(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.data, has_labels=not args.no_labels,
                         expect_header=not args.no_header)
    table = bpe.train_bpe(corpus.texts(), vocab_size=args.vocab_size)
    bpe.save_merge_table(table, args.out)
    _emit({"vocab_size": table.vocab_size, "merges": len(table.merges),
           "out": str(args.out)})
    return 0


def cmd_train_baseline(args: argparse.Namespace) -> int:
    train = load_corpus(args.train, has_labels=True, expect_header=not args.no_header)
    valid = load_corpus(args.valid, has_labels=True, expect_header=not args.no_header,
                        split_tag="validation")
    vocab = textfeat.fit_vocabulary(train)
    train_counts = textfeat.count_matrix(train.texts(), vocab)
    valid_counts = textfeat.count_matrix(valid.texts(), vocab)
    labels = train.labels()

    if args.kind == "nb":
        model: baselines.LinearModel | baselines.NaiveBayesModel = baselines.train_nb(
            train_counts, labels, alpha=args.alpha)
        valid_features = valid_counts
    else:
        train_tfidf = [textfeat.tfidf_transform(c, vocab) for c in train_counts]
        valid_features = [textfeat.tfidf_transform(c, vocab) for c in valid_counts]
        train_fn = baselines.train_logreg if args.kind == "logreg" else baselines.train_svm
        model = train_fn(train_tfidf, labels, l2=args.l2, epochs=args.epochs, lr=args.lr)

    preds = [baselines.predict_baseline(model, x) for x in valid_features]
    pred_labels = [ensemble.classify(p) for p in preds]
    score, matrix = f1_informative(pred_labels, valid.labels())

    if args.vocab_out:
        textfeat.save_vocabulary(vocab, args.vocab_out)
    if args.out:
        _save_baseline(model, args.kind, args.out)
    if args.pred_out:
        ensemble.save_predictions(args.pred_out, [r.id for r in valid.records], preds)
    logger.info("%s baseline: validation F1 %.4f", args.kind, score)
    _emit({"kind": args.kind, "f1": score, "precision": matrix.precision(),
           "recall": matrix.recall(), "accuracy": matrix.accuracy()})
    return 0


def _save_baseline(model, kind: str, path: str) -> None:
    from . import checkpoint as ckpt_io

    if isinstance(model, baselines.NaiveBayesModel):
        arrays = {"log_prior": model.log_prior, "log_likelihood": model.log_likelihood}
        config = {"model": "baseline", "kind": "nb", "alpha": model.alpha}
    else:
        arrays = {"weights": model.weights, "bias": np.array([model.bias])}
        config = {"model": "baseline", "kind": model.kind}
    ckpt_io.save_arrays(path, arrays, config=config)


def _load_baseline(path: str):
    from . import checkpoint as ckpt_io

    arrays, config, _ = ckpt_io.load_arrays(path)
    if config.get("model") != "baseline":
        raise ValueError(f"{path}: not a baseline checkpoint")
    if config["kind"] == "nb":
        return baselines.NaiveBayesModel(arrays["log_prior"], arrays["log_likelihood"],
                                         config.get("alpha", 1.0))
    return baselines.LinearModel(config["kind"], arrays["weights"], float(arrays["bias"][0]))


def _build_model(cfg: RunConfig, table: bpe.MergeTable):
    cfg.validate()
    enc_cfg = cfg.to_encoder_config(table.vocab_size)
    m = cfg.model
    if m.kind == "single":
        return SingleEncoderClassifier(
            table, enc_cfg, parse_strategy(m.strategy, m.n_layers),
            clf_depth=m.clf_depth, clf_hidden=m.clf_hidden, seed=cfg.seed,
        )
    gl_cfg = GlobalLocalConfig(
        encoder=enc_cfg,
        global_strategy=parse_strategy(m.global_strategy, m.n_layers),
        head_strategy=parse_strategy(m.head_strategy, m.n_layers),
        tail_strategy=parse_strategy(m.tail_strategy, m.n_layers),
        head_fraction=m.head_fraction,
    )
    return GlobalLocalModel(table, gl_cfg, clf_depth=m.clf_depth,
                            clf_hidden=m.clf_hidden, seed=cfg.seed)


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.batch_size is not None:
        cfg.train.batch_size = args.batch_size
    if args.phase1_epochs is not None:
        cfg.train.phase1_epochs = args.phase1_epochs
    if args.phase2_epochs is not None:
        cfg.train.phase2_epochs = args.phase2_epochs
    if args.phase1_lr is not None:
        cfg.train.phase1_lr = args.phase1_lr
    if args.phase2_lr is not None:
        cfg.train.phase2_lr = args.phase2_lr
    if args.max_len is not None:
        cfg.model.max_len = args.max_len
    if args.strategy is not None:
        cfg.model.strategy = args.strategy
    if args.model_kind is not None:
        cfg.model.kind = args.model_kind
    return cfg


def cmd_train(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    cfg = _apply_overrides(cfg, args)
    table = bpe.load_merge_table(args.tokenizer)
    data_dir = Path(args.data_dir)
    train = load_corpus(data_dir / "train.tsv", has_labels=True)
    valid = load_corpus(data_dir / "valid.tsv", has_labels=True, split_tag="validation")
    model = _build_model(cfg, table)
    checkpoint = train_two_phase(model, train, valid, cfg.to_train_plan())
    checkpoint.save(args.out)
    _emit({"f1": checkpoint.f1, "epoch": checkpoint.epoch, "phase": checkpoint.phase,
           "out": str(args.out)})
    return 0


def _predict_one(model_path: str, table: bpe.MergeTable, texts: list[str]):
    model, _ = trainer.load_classifier(model_path, table)
    return trainer.predict(model, texts)


def cmd_predict(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.data, has_labels=not args.no_labels,
                         expect_header=not args.no_header)
    texts = corpus.texts()
    ids = [rec.id for rec in corpus.records]

    first = _peek_model_kind(args.model[0])
    if first == "baseline":
        if len(args.model) != 1:
            raise ValueError("baseline prediction supports a single --model")
        if not args.vocab:
            raise ValueError("baseline prediction requires --vocab")
        model = _load_baseline(args.model[0])
        vocab = textfeat.load_vocabulary(args.vocab)
        counts = textfeat.count_matrix(texts, vocab)
        if isinstance(model, baselines.NaiveBayesModel):
            features = counts
        else:
            features = [textfeat.tfidf_transform(c, vocab) for c in counts]
        preds = [baselines.predict_baseline(model, x) for x in features]
        ensemble.save_predictions(args.out, ids, preds)
        _emit({"out": str(args.out), "n": len(preds)})
        return 0

    if not args.tokenizer:
        raise ValueError("encoder model prediction requires --tokenizer")
    table = bpe.load_merge_table(args.tokenizer)
    if len(args.model) == 1:
        if not args.out:
            raise ValueError("single-model predict requires --out")
        preds = _predict_one(args.model[0], table, texts)
        ensemble.save_predictions(args.out, ids, preds)
        _emit({"out": str(args.out), "n": len(preds)})
        return 0

    if not args.out_dir:
        raise ValueError("multi-model predict requires --out-dir")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=_max_workers(len(args.model))) as pool:
        futures = [pool.submit(_predict_one, path, table, texts) for path in args.model]
        results = [f.result() for f in futures]
    outputs = []
    for model_path, preds in zip(args.model, results):
        out_path = out_dir / (Path(model_path).stem + ".preds.tsv")
        ensemble.save_predictions(out_path, ids, preds)
        outputs.append(str(out_path))
    _emit({"outputs": outputs, "n": len(texts)})
    return 0


def _peek_model_kind(path: str) -> str:
    from . import checkpoint as ckpt_io

    _, config, _ = ckpt_io.load_arrays(path)
    return config.get("model", "")


def _model_id(path: str) -> str:
    name = Path(path).name
    for suffix in (".preds.tsv", ".tsv", ".txt"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return Path(path).stem


def _load_prediction_files(paths: list[str]) -> tuple[list[str], dict[str, list[PredictionVector]]]:
    """Returns (ids, per-model predictions); all files must agree on ids."""
    by_model: dict[str, list[PredictionVector]] = {}
    reference_ids: list[str] | None = None
    for path in paths:
        ids, preds = ensemble.load_predictions(path)
        if reference_ids is None:
            reference_ids = ids
        elif ids != reference_ids:
            raise ValueError(f"{path}: prediction ids disagree with {paths[0]}")
        model_id = _model_id(path)
        if model_id in by_model:
            raise ValueError(f"duplicate model id {model_id!r} among prediction files")
        by_model[model_id] = preds
    assert reference_ids is not None
    return reference_ids, by_model


def cmd_ensemble(args: argparse.Namespace) -> int:
    ids, by_model = _load_prediction_files(args.preds)
    if args.rule in ("vote", "average"):
        labels = []
        for i in range(len(ids)):
            row = [by_model[m][i] for m in sorted(by_model)]
            labels.append(ensemble.combine(row, args.rule))
    elif args.rule == "bucketed":
        if not args.bucket_map or not args.data:
            raise ValueError("bucketed ensembling requires --bucket-map and --data")
        bucket_map = _load_bucket_map(args.bucket_map)
        corpus = load_corpus(args.data, has_labels=not args.no_labels,
                             expect_header=not args.no_header)
        if [rec.id for rec in corpus.records] != ids:
            raise ValueError("--data ids disagree with prediction files")
        labels = []
        for i, rec in enumerate(corpus.records):
            row = {m: by_model[m][i] for m in by_model}
            labels.append(ensemble.bucketed_predict(rec.text, row, bucket_map, rule="vote"))
    else:
        raise ValueError(f"unknown ensemble rule {args.rule!r}")
    ensemble.save_labels(args.out, ids, labels)
    _emit({"out": str(args.out), "n": len(labels), "rule": args.rule})
    return 0


def _load_bucket_map(path: str) -> dict[LengthBucket, list[str]]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    out: dict[LengthBucket, list[str]] = {}
    for bucket in LengthBucket:
        if bucket.value not in raw:
            raise ValueError(f"{path}: bucket map missing {bucket.value!r}")
        out[bucket] = list(raw[bucket.value])
    return out


def cmd_bucket_select(args: argparse.Namespace) -> int:
    reference = load_corpus(args.reference, has_labels=True,
                            expect_header=not args.no_header)
    ids, by_model = _load_prediction_files(args.preds)
    if [rec.id for rec in reference.records] != ids:
        raise ValueError("--reference ids disagree with prediction files")
    bucket_map = ensemble.select_top_models_per_bucket(by_model, reference, k=args.k)
    payload = {bucket.value: list(models) for bucket, models in bucket_map.items()}
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    _emit({"out": str(args.out), "k": args.k})
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    pred_ids, pred_labels = ensemble.load_labels(args.pred)
    gold = load_corpus(args.gold, has_labels=True, expect_header=not args.no_header)
    gold_by_id = {rec.id: rec.label for rec in gold.records}
    if set(pred_ids) != set(gold_by_id):
        raise ValueError("prediction and gold id sets differ")
    golds = [gold_by_id[i] for i in pred_ids]
    score, matrix = f1_informative(pred_labels, golds)
    logger.info(
        "F1=%.4f P=%.4f R=%.4f acc=%.4f (tp=%d fp=%d fn=%d tn=%d)",
        score, matrix.precision(), matrix.recall(), matrix.accuracy(),
        matrix.tp, matrix.fp, matrix.fn, matrix.tn,
    )
    _emit({"f1": score, "precision": matrix.precision(), "recall": matrix.recall(),
           "accuracy": matrix.accuracy(), "tp": matrix.tp, "fp": matrix.fp,
           "fn": matrix.fn, "tn": matrix.tn, "n": matrix.total})
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tweetinform",
        description="Classify short social-media posts as INFORMATIVE vs UNINFORMATIVE.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug detail")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="validate corpora and optionally re-split 90/10")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--resplit", action="store_true", help="pool and re-split 90/10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train-bpe", help="train the subword tokenizer")
    p.add_argument("--data", required=True)
    p.add_argument("--vocab-size", type=int, default=4000)
    p.add_argument("--no-labels", action="store_true")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_bpe)

    p = sub.add_parser("train-baseline", help="train a TF-IDF classical baseline")
    p.add_argument("--kind", choices=("logreg", "nb", "svm"), required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--l2", type=float, default=baselines.DEFAULT_L2)
    p.add_argument("--lr", type=float, default=baselines.DEFAULT_LR)
    p.add_argument("--epochs", type=int, default=baselines.DEFAULT_EPOCHS)
    p.add_argument("--alpha", type=float, default=baselines.DEFAULT_ALPHA)
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out", help="write model checkpoint here")
    p.add_argument("--vocab-out", help="write the fitted vocabulary here")
    p.add_argument("--pred-out", help="write validation predictions here")
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("train", help="train a single or global-local encoder model")
    p.add_argument("--config", help="JSON run configuration (flags win)")
    p.add_argument("--data-dir", required=True, help="directory with train.tsv and valid.tsv")
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--phase1-epochs", type=int)
    p.add_argument("--phase2-epochs", type=int)
    p.add_argument("--phase1-lr", type=float)
    p.add_argument("--phase2-lr", type=float)
    p.add_argument("--max-len", type=int)
    p.add_argument("--strategy", help="pooling strategy, e.g. last+first")
    p.add_argument("--model-kind", choices=("single", "global_local"), dest="model_kind")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write softmax predictions for a dataset")
    p.add_argument("--model", action="append", required=True,
                   help="checkpoint path; repeat for parallel multi-model prediction")
    p.add_argument("--tokenizer")
    p.add_argument("--vocab", help="vocabulary file (baseline models)")
    p.add_argument("--data", required=True)
    p.add_argument("--no-labels", action="store_true")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ensemble", help="combine prediction files into labels")
    p.add_argument("--rule", choices=("vote", "average", "bucketed"), default="vote")
    p.add_argument("--preds", nargs="+", required=True)
    p.add_argument("--bucket-map", help="JSON bucket map (bucketed rule)")
    p.add_argument("--data", help="dataset TSV for word counts (bucketed rule)")
    p.add_argument("--no-labels", action="store_true")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("bucket-select", help="pick top models per length bucket")
    p.add_argument("--preds", nargs="+", required=True,
                   help="per-model prediction files over the reference corpus")
    p.add_argument("--reference", required=True, help="labeled reference TSV")
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bucket_select)

    p = sub.add_parser("evaluate", help="score a label file against gold labels")
    p.add_argument("--pred", required=True, help="id<TAB>LABEL file")
    p.add_argument("--gold", required=True, help="labeled TSV")
    p.add_argument("--no-header", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:  # single-line machine-parsable failure contract
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
