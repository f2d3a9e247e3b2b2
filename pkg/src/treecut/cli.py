"""Command-line entry point.

Exit codes: 0 success or PASS, 1 a check FAILed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path


from . import __version__
from .errors import TreeCutError
from .rng import GENERATOR_ID, RngStream, blocks

SCHEMA = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# Replicate plumbing ----------------------------------------------------------


def per_replicate(count: int, seed: int, stream: int, threads: int, fn) -> list:
    """Rows from ``fn(replicate, generator)`` in replicate order.

    Each block of replicates owns one stream, so output does not depend on
    ``threads``.
    """
    root = RngStream(seed, stream)

    def one(block):
        b, start, stop = block
        g = root.child(b).generator()
        rows = []
        for r in range(start, stop):
            rows.extend(fn(r + 1, g))
        return rows

    jobs = list(blocks(count))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, jobs))
    else:
        parts = [one(j) for j in jobs]
    return [row for part in parts for row in part]


def _csv_text(header: list[str], rows, name: str) -> str:
    buf = io.StringIO()
    buf.write(f"# treecut {name} schema={SCHEMA} format=csv\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _jsonl_text(rows, name: str) -> str:
    lines = [json.dumps({"schema": SCHEMA, "kind": name, "format": "jsonl"})]
    lines += [json.dumps(r, sort_keys=True) for r in rows]
    return "\n".join(lines) + "\n"


def _emit(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    path = Path(args.out)
    path.write_bytes(text.encode())
    write_manifest(path, args)


def write_manifest(path: Path, args) -> Path:
    data = path.read_bytes()
    manifest = {
        "command": args.argv,
        "seed": args.seed,
        "generator": GENERATOR_ID,
        "version": __version__,
        "wall_time_s": round(time.time() - args.t0, 3),
        "outputs": {path.name: hashlib.sha256(data).hexdigest()},
    }
    mpath = path.with_name(path.name + ".manifest.json")
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return mpath


def _law(args):
    from .samplers import OffspringLaw

    return OffspringLaw.parse(args.law, Path.cwd()) if args.law else None


def _tree_sampler(args):
    from .samplers import nearest_attainable, sample_cayley, sample_conditioned_gw

    law = _law(args)
    model = getattr(args, "model", None) or ("gw" if law else "cayley")
    if model == "cayley":
        return (lambda g: sample_cayley(args.n, g)), None, args.n
    if law is None:
        raise UsageError("--model gw needs --law")
    n = nearest_attainable(law, args.n)
    return (lambda g: sample_conditioned_gw(law, n, g)), law, n


# Subcommands -----------------------------------------------------------------


def cmd_sample(args) -> int:
    from .trees import dumps_tree

    draw, law, n = _tree_sampler(args)
    rows = per_replicate(args.count, args.seed, 10, args.threads, lambda r, g: [dumps_tree(draw(g))])
    head = f"# treecut sample schema={SCHEMA} model={args.model} n={n}"
    if law is not None:
        head += f" law={law.describe()}"
    _emit(args, head + "\n" + "\n".join(rows) + "\n")
    return 0


def cmd_cut(args) -> int:
    from .cutting import ordered_cut, ordered_cut_counts, planted_cut
    from .samplers import sample_cayley

    n, k = args.n, args.k

    def one(r, g):
        t = sample_cayley(n, g)
        S = tuple(int(v) for v in g.integers(1, n + 1, size=k))
        if args.mode == "planted":
            Ms = planted_cut(t, S, g).Ms
        elif args.mode == "ordered":
            Ms = ordered_cut(t, S, g).Ms
        else:
            Ms = ordered_cut_counts(t, S, g)
        return [[r, n, k, max(Ms), *Ms]]

    rows = per_replicate(args.count, args.seed, 11, args.threads, one)
    header = ["replicate", "n", "k", "M"] + [f"M_{i}" for i in range(1, k + 1)]
    _emit(args, _csv_text(header, rows, f"cut mode={args.mode}"))
    return 0


def cmd_dynamics(args) -> int:
    from .dynamics import forest_to_tree, modified_dynamics, reverse_transform, tree_to_forest
    from .samplers import sample_cayley
    from .trees import dumps_forest, dumps_tree

    n = args.n
    failures = []

    def one(r, g):
        t = sample_cayley(n, g)
        if args.emit == "roundtrip":
            v = int(g.integers(1, n + 1))
            back, w = forest_to_tree(tree_to_forest(t, v))
            ok = back == t and w == v
            rev = reverse_transform(tree_to_forest(t, v), g)
            if not ok:
                failures.append(r)
            return [[r, int(ok), dumps_tree(rev)]]
        tr = modified_dynamics(t, g)
        if args.emit == "kappa":
            return [[r, tr.kappa, tr.sigma[-1]]]
        if args.emit == "forest":
            return [{"replicate": r, "forest": dumps_forest(tr.forest)}]
        return [{"replicate": r, "that": dumps_tree(tr.that), "r": t.root}]

    rows = per_replicate(args.count, args.seed, 12, args.threads, one)
    if args.emit == "kappa":
        text = _csv_text(["replicate", "kappa", "sigma_last"], rows, "dynamics kappa")
    elif args.emit == "roundtrip":
        text = _csv_text(["replicate", "roundtrip_ok", "reverse_tree"], rows, "dynamics roundtrip")
    else:
        text = _jsonl_text(rows, f"dynamics {args.emit}")
    _emit(args, text)
    return 1 if failures else 0


def _sigma(args, law) -> float:
    if args.sigma == "auto":
        return 1.0 if law is None else law.sigma
    return float(args.sigma)


def cmd_fragment(args) -> int:
    from .fragmentation import build_that_tree, fragment, mass_integral
    from .trees import dumps_tree

    draw, law, n = _tree_sampler(args)
    sigma = _sigma(args, law)

    def one(r, g):
        t = draw(g)
        tr = fragment(t, sigma, g)
        if args.emit == "kappa":
            lam, integral = mass_integral(tr)
            return [[r, n, tr.kappa, repr(lam), repr(integral)]]
        if args.emit == "trace":
            return [{"replicate": r, **e} for e in tr.events()]
        that, u, v = build_that_tree(tr, t)
        return [{"replicate": r, "that": dumps_tree(that), "u": u, "v": v, "kappa": tr.kappa}]

    rows = per_replicate(args.count, args.seed, 13, args.threads, one)
    if args.emit == "kappa":
        text = _csv_text(["replicate", "n", "kappa", "Lambda", "mu_integral"], rows, f"fragment sigma={sigma!r}")
    else:
        text = _jsonl_text(rows, f"fragment {args.emit}")
    _emit(args, text)
    return 0


def cmd_excursion(args) -> int:
    from .excursion import attachment_marks, bridge_transform, check_path
    from .fragmentation import fragment
    from .samplers import sample_cayley

    n = args.n
    bad = []

    def one(r, g):
        t = sample_cayley(n, g)
        tr = fragment(t, 1.0, g)
        if args.emit == "marks":
            return [[r, m.i, m.y, m.piece, m.position] for m in attachment_marks(tr, t)]
        path = bridge_transform(t, tr)
        if check_path(path, tr, t):
            bad.append(r)
        return [[r, i, int(h)] for i, h in enumerate(path.heights)]

    rows = per_replicate(args.count, args.seed, 14, args.threads, one)
    if args.emit == "marks":
        text = _csv_text(["replicate", "cut", "y", "piece", "position"], rows, "excursion marks")
    else:
        text = _csv_text(["replicate", "step", "height"], rows, "excursion path")
    _emit(args, text)
    return 1 if bad else 0


def cmd_oracle(args) -> int:
    from .oracle import CHECKS

    res = CHECKS[args.check](args.n, args.k)
    line = res.line()
    print(line)
    if args.out is not None:
        _emit(args, line + "\n")
    return 0 if res.passed else 1


def cmd_verify(args) -> int:
    from . import montecarlo as mc
    from .stats import ReferenceLaw, cdf_table

    if args.claim == "chik":
        res = mc.verify_chik(args.n, args.k, args.count, args.seed, args.threads)
        refs = {"M/sqrt(n)": ReferenceLaw(args.k)}
    elif args.claim == "kcoup":
        res = mc.verify_kcoup(args.n, args.k, args.count, args.seed, args.threads)
        refs = {}
    elif args.claim == "rayleigh":
        res = mc.verify_rayleigh(args.n, args.count, args.seed, args.threads)
        refs = {name: ReferenceLaw.rayleigh() for name in res.samples}
    elif args.claim == "gw":
        from .samplers import OffspringLaw

        law = _law(args) or OffspringLaw.geometric()
        res = mc.verify_gw(law, args.n, args.count, args.seed, args.threads)
        refs = {name: ReferenceLaw.rayleigh() for name in res.samples}
    else:
        ns = tuple(args.ns) if args.ns else (100, 1000, 10000)
        res = mc.verify_localtime(ns, args.count, args.seed, args.threads)
        refs = {}
    print(f"claim={res.claim} {res.detail}")
    for line in res.lines():
        print(line)
    if args.out is not None:
        rows = []
        for name, law in refs.items():
            for x, fe, fr in cdf_table(res.samples[name], law):
                rows.append([name, repr(float(x)), repr(float(fe)), repr(float(fr))])
        _emit(args, _csv_text(["series", "sample", "empirical_cdf", "reference_cdf"], rows, f"verify {res.claim}"))
    return 0 if res.passed else 1


# Parser ----------------------------------------------------------------------


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=_positive, default=1)
    common.add_argument("--out", default=None, help="output file (a manifest is written beside it)")
    common.add_argument("--config", default=None, help="key = value file presetting flags")

    p = _Parser(prog="treecut", description="Random tree cutting, dynamics and fragmentation.",
                parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("sample", parents=[common], help="sample random trees")
    s.add_argument("--model", choices=["cayley", "gw"], default="cayley")
    s.add_argument("--law", default=None)
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--count", type=_positive, default=1)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("cut", parents=[common], help="cut random trees")
    s.add_argument("--mode", choices=["planted", "ordered", "records"], default="records")
    s.add_argument("--k", type=_positive, default=1)
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--count", type=_positive, default=1)
    s.set_defaults(func=cmd_cut)

    s = sub.add_parser("dynamics", parents=[common], help="modified dynamics and forests")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--count", type=_positive, default=1)
    s.add_argument("--emit", choices=["kappa", "forest", "that", "roundtrip"], default="kappa")
    s.set_defaults(func=cmd_dynamics)

    s = sub.add_parser("fragment", parents=[common], help="cut process with exponential clocks")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--law", default=None, help="offspring law; uniform Cayley trees when omitted")
    s.add_argument("--sigma", default="auto")
    s.add_argument("--count", type=_positive, default=1)
    s.add_argument("--emit", choices=["kappa", "trace", "that"], default="kappa")
    s.set_defaults(func=cmd_fragment)

    s = sub.add_parser("excursion", parents=[common], help="concatenated contour paths")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--count", type=_positive, default=1)
    s.add_argument("--emit", choices=["path", "marks"], default="path")
    s.set_defaults(func=cmd_excursion)

    from .oracle import CHECKS

    s = sub.add_parser("oracle", parents=[common], help="exact small-n checks")
    s.add_argument("--check", choices=sorted(CHECKS), required=True)
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--k", type=_positive, default=1)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("verify", parents=[common], help="Monte Carlo limit-law checks")
    s.add_argument("--claim", choices=["kcoup", "rayleigh", "gw", "chik", "localtime"], required=True)
    s.add_argument("--n", type=_positive, default=1000)
    s.add_argument("--k", type=_positive, default=1)
    s.add_argument("--count", type=_positive, default=10000)
    s.add_argument("--law", default=None)
    s.add_argument("--ns", type=_positive, nargs="+", default=None, help="sizes for the localtime claim")
    s.set_defaults(func=cmd_verify)
    return p


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Keys use flag names."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"config line without '=': {raw!r}")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    cfg = read_config(known.config)
    subs = parser._subparsers._group_actions[0].choices if parser._subparsers else {}
    for sp in [parser, *subs.values()]:
        dests = {a.dest: a for a in sp._actions}
        values = {}
        for key, value in cfg.items():
            if key in dests:
                a = dests[key]
                values[key] = a.type(value) if a.type and a.nargs is None else value
        sp.set_defaults(**values)
    known_dests = {a.dest for sp in [parser, *subs.values()] for a in sp._actions}
    unknown = set(cfg) - known_dests
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    # config may satisfy required flags
    for sp in subs.values():
        for a in sp._actions:
            if a.required and a.dest in cfg:
                a.required = False


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        args.argv = ["treecut", *argv]
        args.t0 = time.time()
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (TreeCutError, FileNotFoundError) as exc:
        print(f"treecut: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
