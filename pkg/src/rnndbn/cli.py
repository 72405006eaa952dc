"""Command-line interface: ``rnndbn {train,generate,eval,gradcheck}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric/budget error.
Progress goes to stdout as ``epoch <n> obj <value>`` lines; evaluation
prints ``mean_ll <value> <exact|approx>``.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import checks, data, oracles
from . import rnn_dbn as rd
from .config import TrainConfig
from .dbn import DbnParams, dbn_sample, greedy_train, init_dbn
from .errors import BudgetError, DataError
from .numerics import make_rng
from .rbm import RbmParams, init_rbm, log_likelihood, rbm_sample, train_rbm
from .rtrbm import (
    RtrbmParams,
    init_rtrbm,
    rtrbm_frame_ll,
    rtrbm_generate,
    rtrbm_train,
)

FORMAT_VERSION = 1
MODEL_KINDS = {"rbm": "rbm", "dbn": "dbn", "rtrbm": "rtrbm", "rnn-dbn": "rnn_dbn"}

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# model files


def _dump_value(x):
    """JSON text with every float written to 17 significant digits."""
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_dump_value(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_dump_value(v) for v in x) + "]"
    if isinstance(x, np.ndarray):
        return _dump_value(x.tolist())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("cannot serialise a non-finite parameter")
        text = format(x, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    return json.dumps(x)


def _fields(obj):
    return {name: getattr(obj, name) for name in obj.__dataclass_fields__}


def model_to_dict(kind, params, cfg):
    if kind == "dbn":
        tensors = {"layers": [_fields(layer) for layer in params.layers]}
        dims = {"widths": params.widths}
    else:
        tensors = _fields(params)
        if kind == "rnn_dbn":
            dims = {"n_v": params.n_v, "n_h1": params.n_h1, "n_h2": params.n_h2, "n_u": params.n_u}
        else:
            dims = {"n_v": params.n_v, "n_h": params.n_h}
    return {
        "format_version": FORMAT_VERSION,
        "model_kind": kind,
        "dimensions": dims,
        "train_config": cfg.to_dict(),
        "seed": cfg.seed,
        "params": tensors,
    }


def dumps_model(kind, params, cfg):
    doc = model_to_dict(kind, params, cfg)
    lines = [
        f"  {json.dumps(k)}: {_dump_value(v) if k == 'params' else json.dumps(v)}"
        for k, v in doc.items()
    ]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def loads_model(text):
    """Parse a model file into ``(kind, params, TrainConfig)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(f"model file is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise DataError("model file must hold a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {doc.get('format_version')!r}")
    kind = doc.get("model_kind")
    try:
        t = doc["params"]
        if kind == "rbm":
            params = RbmParams(**{k: np.array(v, dtype=float) for k, v in t.items()})
        elif kind == "dbn":
            params = DbnParams(tuple(
                RbmParams(**{k: np.array(v, dtype=float) for k, v in layer.items()})
                for layer in t["layers"]
            ))
        elif kind == "rtrbm":
            params = RtrbmParams(**{k: np.array(v, dtype=float) for k, v in t.items()})
        elif kind == "rnn_dbn":
            params = rd.RnnDbnParams(**{k: np.array(v, dtype=float) for k, v in t.items()})
        else:
            raise DataError(f"unknown model_kind {kind!r}")
        cfg = TrainConfig.from_dict(doc["train_config"])
    except (TypeError, KeyError, ValueError) as e:
        raise DataError(f"model file is inconsistent: {e}") from e
    dims = doc.get("dimensions", {})
    actual = model_to_dict(kind, params, TrainConfig())["dimensions"]
    if dims != actual:
        raise DataError(f"model dimensions {dims} do not match tensors {actual}")
    return kind, params, cfg


def save_model(path, kind, params, cfg):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(kind, params, cfg))


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads_model(fh.read())
    except OSError as e:
        raise DataError(f"cannot read model file {path}: {e}") from e


def n_visible(kind, params):
    return params.widths[0] if kind == "dbn" else params.n_v


# ---------------------------------------------------------------------------
# commands


def _parse_hidden(text):
    try:
        widths = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--hidden expects comma-separated integers, got {text!r}")
    if not widths or min(widths) < 1:
        raise UsageError(f"--hidden widths must be positive, got {text!r}")
    return widths


def cmd_train(args):
    kind = MODEL_KINDS[args.model]
    hidden = _parse_hidden(args.hidden)
    try:
        cfg = TrainConfig(
            learning_rate=args.lr, cd_k=args.cd_k, epochs=args.epochs, batch_size=args.batch,
            gen_gibbs_steps=args.gibbs, clip_threshold=args.clip, seed=args.seed,
        )
    except ValueError as e:
        raise UsageError(str(e))
    if kind in ("rbm", "rtrbm") and len(hidden) != 1:
        raise UsageError(f"--model {args.model} takes a single --hidden width")
    if kind == "rnn_dbn" and len(hidden) != 2:
        raise UsageError("--model rnn-dbn takes --hidden H1,H2")

    ds = data.load_pianoroll(args.data)
    n_v = ds.num_pitches
    rng = make_rng(cfg.seed)

    def log(epoch, value):
        print(f"epoch {epoch} obj {value:.10g}", flush=True)

    if kind == "rbm":
        params, _ = train_rbm(init_rbm(n_v, hidden[0], rng), ds.all_frames(), cfg, rng, log=log)
    elif kind == "dbn":
        params = greedy_train(
            init_dbn([n_v] + hidden, rng), ds.all_frames(), cfg, rng,
            log=lambda layer, e, v: log(layer * cfg.epochs + e, v),
        )
    elif kind == "rtrbm":
        params, _ = rtrbm_train(init_rtrbm(n_v, hidden[0], rng), ds.binary_sequences(), cfg, rng,
                                log=log)
    else:
        n_u = args.rnn_units if args.rnn_units is not None else hidden[0]
        if n_u < 1:
            raise UsageError("--rnn-units must be positive")
        p0 = rd.init_rnn_dbn(n_v, hidden[0], hidden[1], n_u, rng)
        params, _ = rd.train(p0, ds.binary_sequences(), cfg, rng, log=log)
    save_model(args.out, kind, params, cfg)
    return EXIT_OK


def cmd_generate(args):
    kind, params, cfg = load_model(args.model_file)
    if args.length < 1:
        raise UsageError("--length must be >= 1")
    gibbs = args.gibbs if args.gibbs is not None else cfg.gen_gibbs_steps
    if gibbs < 1:
        raise UsageError("--gibbs must be >= 1")
    n_v = n_visible(kind, params)
    primer = None
    if args.primer is not None:
        if kind not in ("rtrbm", "rnn_dbn"):
            raise UsageError(f"--primer is only meaningful for sequence models, not {kind}")
        pds = data.load_pianoroll(args.primer)
        if pds.num_pitches != n_v:
            raise DataError(f"primer has {pds.num_pitches} pitches, model expects {n_v}")
        primer = data.to_binary_vectors(pds.sequences[0], n_v)
    rng = make_rng(args.seed)
    if kind == "rbm":
        frames = rbm_sample(params, gibbs, rng, n_samples=args.length)
    elif kind == "dbn":
        frames = dbn_sample(params, gibbs, rng, n_samples=args.length)
    elif kind == "rtrbm":
        frames = rtrbm_generate(params, args.length, gibbs, rng, primer=primer)
    else:
        gen_cfg = TrainConfig(**{**cfg.to_dict(), "gen_gibbs_steps": gibbs})
        frames = rd.generate(params, args.length, primer, gen_cfg, rng)
    out = data.Dataset("generated", n_v, (data.from_binary_vectors(frames),))
    data.save_pianoroll(out, args.out)
    return EXIT_OK


def evaluate(kind, params, ds, exact_only, rng):
    """Mean per-frame log-likelihood of ``ds`` and whether it is exact."""
    seqs = ds.binary_sequences()
    if kind == "rbm":
        lls = log_likelihood(params, np.vstack(seqs))
        return float(np.mean(lls)), True
    if kind == "dbn":
        return oracles.exact_ll_dbn(params, np.vstack(seqs)), True
    if kind == "rtrbm":
        lls = np.concatenate([rtrbm_frame_ll(params, s) for s in seqs])
        return float(np.mean(lls)), True
    results = [rd.frame_conditional_ll(params, s, approximate=not exact_only, rng=rng)
               for s in seqs]
    lls = np.concatenate([r.per_frame for r in results])
    return float(np.mean(lls)), all(r.exact for r in results)


def cmd_eval(args):
    ds = data.load_pianoroll(args.data)
    if args.model_file == "random":
        value, exact = -ds.num_pitches * math.log(2.0), True
    else:
        kind, params, _ = load_model(args.model_file)
        if n_visible(kind, params) != ds.num_pitches:
            raise DataError(
                f"data has {ds.num_pitches} pitches, model expects {n_visible(kind, params)}"
            )
        value, exact = evaluate(kind, params, ds, args.exact, make_rng(args.seed))
    print(f"mean_ll {value:.6f} {'exact' if exact else 'approx'}")
    return EXIT_OK


def cmd_gradcheck(args):
    if not 1e-7 <= args.eps <= 1e-3:
        raise UsageError(f"--eps must lie in [1e-7, 1e-3], got {args.eps}")
    err = checks.GRADCHECKS[args.model](seed=args.seed, eps=args.eps)
    threshold = checks.THRESHOLDS[args.model]
    ok = err < threshold
    print(f"max_rel_err {err:.3e} threshold {threshold:.0e} {'ok' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="rnndbn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a model on a piano-roll file")
    t.add_argument("--model", required=True, choices=sorted(MODEL_KINDS))
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--lr", type=float, default=0.1)
    t.add_argument("--cd-k", type=int, default=1)
    t.add_argument("--hidden", required=True, help="H or H1,H2,...")
    t.add_argument("--rnn-units", type=int, default=None)
    t.add_argument("--batch", type=int, default=1)
    t.add_argument("--gibbs", type=int, default=25, help="Gibbs steps stored for generation")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--clip", type=float, default=None)
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("generate", help="sample a sequence from a trained model")
    g.add_argument("--model-file", required=True)
    g.add_argument("--length", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--primer", default=None)
    g.add_argument("--gibbs", type=int, default=None)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("eval", help="mean per-frame log-likelihood on a piano-roll file")
    e.add_argument("--model-file", required=True, help='model file, or "random"')
    e.add_argument("--data", required=True)
    e.add_argument("--exact", action="store_true")
    e.add_argument("--seed", type=int, default=0, help="seed for approximate evaluation")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    c.add_argument("--model", required=True, choices=sorted(checks.GRADCHECKS))
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--eps", type=float, default=1e-5)
    c.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"rnndbn: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"rnndbn: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (BudgetError, FloatingPointError) as e:
        print(f"rnndbn: numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
