"""Command-line interface.

Exit codes: 0 success, 1 a check or verification failed, 2 usage error,
3 resource ceiling exceeded.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import logging
import sys
import tempfile
from pathlib import Path

from . import __version__, bounds
from .model import (
    ModelConfig,
    Rho,
    axiom_check,
    axiom_config_Q,
    correlation_mc,
    gowers_mc,
    pushforward_test,
)
from .patterns import DEFAULT_BUDGET, PatternSet, ResourceCeilingExceeded, SignPattern, enumerate_patterns, sample_patterns
from .poly import MultiplicativeFn
from .props import check_back1, check_back2
from .report import RunManifest, append_csv, file_digest, format_record, format_records

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_CEILING = 0, 1, 2, 3

log = logging.getLogger("signpat")


class UsageError(Exception):
    pass


# --- argument helpers -----------------------------------------------------------


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")


def _congruence(s: str) -> tuple[int, int]:
    try:
        r, m = s.split(":")
        r, m = int(r), int(m)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected r:m, got {s!r}")
    if m < 1:
        raise argparse.ArgumentTypeError("modulus must be positive")
    return r, m


def _mrange(s: str) -> range:
    try:
        a, b = s.split("..")
        return range(int(a), int(b) + 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b, got {s!r}")


def _lam(name: str) -> MultiplicativeFn:
    if name == "liouville":
        return MultiplicativeFn.liouville()
    if name == "trivial":
        return MultiplicativeFn.trivial()
    raise UsageError(f"unknown multiplicative function {name!r}")


def read_rho(path: str, q: int) -> Rho:
    """A twist from a file: either a bare +/- line or ``key=value`` lines with ``rho=``."""
    text = Path(path).read_text()
    kv = dict(line.split("=", 1) for line in text.splitlines() if "=" in line)
    if kv:
        if "q" in kv and int(kv["q"]) != q:
            raise UsageError(f"rho file is for q={kv['q']}, not {q}")
        if "rho" not in kv:
            raise UsageError("rho file has no rho= line")
        return Rho.from_string(q, kv["rho"])
    return Rho.from_string(q, text.strip())


def _model(args, *, extra_Q: int = 1) -> ModelConfig:
    lam = _lam(args.lam)
    if args.q is None:
        if args.rho is not None:
            raise UsageError("--rho needs --q")
        return ModelConfig(args.d, lam=lam, Q=extra_Q, depth=args.depth)
    rho = Rho.all_plus(args.q) if args.rho is None else read_rho(args.rho, args.q)
    return ModelConfig(args.d, lam=lam, q=args.q, rho=rho, Q=extra_Q * args.q**args.depth, depth=args.depth)


# --- outputs ------------------------------------------------------------------------


class Run:
    """Collects inputs and outputs of one invocation for its manifest."""

    def __init__(self, args, argv: list[str]):
        self.args = args
        self.argv = argv
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}

    def input(self, path: str) -> str:
        self.inputs[path] = file_digest(path)
        return path

    def write(self, flag: str, path: str, data: bytes) -> None:
        Path(path).write_bytes(data)
        self.outputs[flag] = path

    def finish(self) -> None:
        if not self.outputs:
            return
        man = RunManifest(
            subcommand=self.args.cmd,
            argv=self.argv,
            seed=getattr(self.args, "seed", None),
            version=__version__,
            threads=getattr(self.args, "threads", 1),
            inputs=self.inputs,
            outputs=self.outputs,
            output_digests={p: file_digest(p) for p in self.outputs.values()},
        )
        for path in self.outputs.values():
            man.save(path)


def _emit_report(run: Run, recs: list[dict]) -> None:
    text = format_records(recs)
    sys.stdout.write(text)
    if getattr(run.args, "out", None):
        run.write("--out", run.args.out, text.encode())
    if getattr(run.args, "csv", None):
        append_csv(run.args.csv, recs)


# --- subcommands ------------------------------------------------------------------


def cmd_enumerate(run: Run) -> int:
    a = run.args
    ps = enumerate_patterns(a.d, a.k, budget=a.budget, workers=a.threads, backend=a.backend)
    text = ps.to_text()
    if a.out:
        run.write("--out", a.out, text.encode("ascii"))
        sys.stdout.write(format_record({"d": a.d, "k": a.k, "count": ps.exact_count, "digest": ps.digest()}))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sample(run: Run) -> int:
    a = run.args
    ps = sample_patterns(a.d, a.k, a.trials, a.seed, sweep=a.sweep)
    text = ps.to_text()
    if a.out:
        run.write("--out", a.out, text.encode("ascii"))
        sys.stdout.write(format_record({"d": a.d, "k": a.k, "count": ps.exact_count, "digest": ps.digest()}))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _need(a, *names):
    for n in names:
        if getattr(a, n) is None:
            raise UsageError(f"--formula {a.formula} needs --{n}")


def cmd_bound(run: Run) -> int:
    a = run.args
    f = a.formula
    rec = {"formula": f}
    if f == "mainbound":
        _need(a, "d", "k")
        v = bounds.mainbound_exact(a.d, a.k)
        rec.update(d=a.d, k=a.k, value=v, decimal=bounds.to_decimal(v, 20))
    elif f == "c":
        _need(a, "d")
        rec.update(d=a.d, value=bounds.c_constant(a.d))
    elif f == "minq":
        _need(a, "d")
        rec.update(d=a.d, value=bounds.minimal_q(a.d))
    elif f == "threshold":
        _need(a, "d", "q")
        rec.update(d=a.d, q=a.q, value=bounds.main2_threshold(a.d, a.q))
    elif f == "back1":
        _need(a, "m", "r")
        rec.update(m=a.m, r=a.r, value=bounds.back1_lower_bound(a.m, a.r))
    elif f in ("chowla-closed", "chowla-exact"):
        _need(a, "d")
        fn = bounds.chowla_closed_form if f == "chowla-closed" else bounds.chowla_correlation
        v, dec = fn(a.d)
        rec.update(d=a.d, value=v, decimal=dec)
    elif f == "shelah":
        _need(a, "m", "d")
        rec.update(m=a.m, d=a.d, value=bounds.shelah_vertex_bound(a.m, a.d))
    sys.stdout.write(f"{_fmt_value(rec['value'])}\n")
    if a.out:
        run.write("--out", a.out, format_record(rec).encode())
    return EXIT_OK


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _model_record(cfg: ModelConfig) -> dict:
    return {"config": cfg.canonical(), "config_digest": cfg.digest()}


def cmd_correlate(run: Run) -> int:
    a = run.args
    cfg = _model(a)
    est = correlation_mc(cfg, a.shifts, a.n, a.seed, threads=a.threads)
    rec = {
        "estimate": est.estimate,
        "std_error": est.std_error,
        "sum": est.total,
        "N": est.N,
        "shifts": a.shifts,
        "seed": a.seed,
        **_model_record(cfg),
    }
    _emit_report(run, [rec])
    return EXIT_OK


def cmd_gowers(run: Run) -> int:
    a = run.args
    extra = a.xmod[1] if a.xmod else 1
    cfg = _model(a, extra_Q=extra)
    recs = []
    for H in a.H:
        est = gowers_mc(cfg, a.order, H, a.n, a.seed, hmods=a.hmod or (), xmod=a.xmod, threads=a.threads)
        recs.append(
            {
                "estimate": est.estimate,
                "std_error": est.std_error,
                "sum": est.total,
                "N": est.N,
                "H": H,
                "order": a.order,
                "hmod": ";".join(f"{r}:{m}" for r, m in (a.hmod or [])) or "none",
                "xmod": f"{a.xmod[0]}:{a.xmod[1]}" if a.xmod else "none",
                "seed": a.seed,
                **_model_record(cfg),
            }
        )
    _emit_report(run, recs)
    return EXIT_OK


def cmd_axioms(run: Run) -> int:
    a = run.args
    base = _model(a)
    cfg = base.with_Q(axiom_config_Q(base, a.amax))
    rep = axiom_check(cfg, a.samples, a.amax, a.seed)
    rec = {**rep.record(), "seed": a.seed, **_model_record(cfg)}
    _emit_report(run, [rec])
    return EXIT_OK if rep.ok else EXIT_FAILED


def cmd_pushforward(run: Run) -> int:
    a = run.args
    base = _model(a)
    cfg = base.with_Q(base.Q * a.a * a.bins)
    rep = pushforward_test(cfg, a.a, a.bins, a.n, a.seed)
    _emit_report(run, [{**rep.record(), "seed": a.seed, **_model_record(cfg)}])
    return EXIT_OK


def cmd_rho_search(run: Run) -> int:
    from .rho import search

    a = run.args
    patterns = PatternSet.load(run.input(a.patterns))
    if patterns.k != a.q or patterns.d != a.d:
        raise UsageError(f"pattern file has d={patterns.d} k={patterns.k}; need d={a.d} k={a.q}")
    eps = SignPattern.from_string(a.epsilon)
    if eps.k != a.q:
        raise UsageError(f"epsilon must have length q = {a.q}")
    res = search(a.d, a.q, eps, patterns, threads=a.threads)
    phi = bounds.totient(a.q)
    rec = {
        "d": a.d,
        "q": a.q,
        "phi": phi,
        "patterns": patterns.exact_count,
        "bad_count": res.bad.bad_count,
        "counting_certificate": bounds.counting_certificate(a.d, a.q, patterns.exact_count),
        "found": res.rho is not None,
    }
    if res.certificate is None:
        sys.stdout.write(format_record(rec))
        return EXIT_FAILED
    rec["rho"] = str(res.rho)
    rec["verified"] = res.certificate.verified
    sys.stdout.write(format_record(rec))
    text = res.certificate.to_text()
    if a.cert:
        run.write("--cert", a.cert, text.encode("ascii"))
    else:
        sys.stdout.write(text)
    return EXIT_OK if res.certificate.verified else EXIT_FAILED


def cmd_rho_verify(run: Run) -> int:
    from .rho import ExclusionCertificate, check_certificate

    a = run.args
    cert = ExclusionCertificate.load(a.cert)
    patterns = PatternSet.load(a.patterns)
    chk = check_certificate(cert, patterns, threads=a.threads)
    sys.stdout.write(format_record({"verified": chk.ok}))
    for reason in chk.reasons:
        sys.stdout.write(f"reason={reason}\n")
    return EXIT_OK if chk.ok else EXIT_FAILED


def cmd_props(run: Run) -> int:
    a = run.args
    if a.check == "back2":
        rep = check_back2(enumerate_patterns(a.d, 2 * a.r + 2, budget=a.budget), a.r)
    else:
        if a.mrange is None:
            raise UsageError("--check back1 needs --mrange a..b")
        rep = check_back1(a.d, a.r, a.mrange, budget=a.budget)
    _emit_report(run, [rep.record()])
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_replay(run: Run) -> int:
    """Re-run a manifest into a scratch directory and compare output bytes."""
    a = run.args
    man = RunManifest.load(a.manifest)
    problems = []
    for path, digest in man.inputs.items():
        if not Path(path).exists() or file_digest(path) != digest:
            problems.append(f"input changed: {path}")
    if not problems:
        with tempfile.TemporaryDirectory() as tmp:
            argv = list(man.argv)
            fresh = {}
            for flag, path in man.outputs.items():
                i = argv.index(flag)
                fresh[path] = str(Path(tmp) / f"out{len(fresh)}")
                argv[i + 1] = fresh[path]
            if "--csv" in argv:
                i = argv.index("--csv")
                del argv[i : i + 2]
            code = main(argv, _quiet=True)
            if code not in (EXIT_OK, EXIT_FAILED):
                problems.append(f"re-run exited with {code}")
            for path, new in fresh.items():
                if not Path(new).exists() or file_digest(new) != man.output_digests[path]:
                    problems.append(f"output differs: {path}")
    rec = {"manifest": a.manifest, "reproduced": not problems}
    sys.stdout.write(format_record(rec))
    for p in problems:
        sys.stdout.write(f"reason={p}\n")
    return EXIT_OK if not problems else EXIT_FAILED


# --- parser ---------------------------------------------------------------------------


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--q", type=int)
    p.add_argument("--rho", help="file holding a +/- string or a certificate")
    p.add_argument("--lam", default="liouville", choices=["liouville", "trivial"])
    p.add_argument("--depth", type=int, default=2, help="powers of q kept in the profinite component")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="signpat", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        p.add_argument("--threads", type=int, default=1)
        return p

    p = add("enumerate", cmd_enumerate, help="exact pattern set")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--backend", choices=["numba", "numpy"])

    p = add("sample", cmd_sample, help="sampled pattern set (oracle)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sweep", type=int)
    p.add_argument("--out")

    p = add("bound", cmd_bound, help="closed-form bounds")
    p.add_argument(
        "--formula",
        required=True,
        choices=["mainbound", "c", "minq", "threshold", "back1", "chowla-closed", "chowla-exact", "shelah"],
    )
    for flag in ("--d", "--k", "--q", "--m", "--r"):
        p.add_argument(flag, type=int)
    p.add_argument("--out")

    p = add("correlate", cmd_correlate, help="Monte Carlo correlation of shifts")
    _model_flags(p)
    p.add_argument("--shifts", type=_int_list, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--csv")

    p = add("gowers", cmd_gowers, help="finite-H Gowers average")
    _model_flags(p)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--H", type=_int_list, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--hmod", type=_congruence, action="append")
    p.add_argument("--xmod", type=_congruence)
    p.add_argument("--out")
    p.add_argument("--csv")

    p = add("axioms", cmd_axioms, help="check the model identities")
    _model_flags(p)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--amax", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = add("pushforward", cmd_pushforward, help="chi-square test of I_a pushforward")
    _model_flags(p)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--bins", type=int, default=16)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = add("rho-search", cmd_rho_search, help="find a twist excluding a pattern")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--epsilon", required=True)
    p.add_argument("--patterns", required=True)
    p.add_argument("--cert")

    p = add("rho-verify", cmd_rho_verify, help="re-check an exclusion certificate")
    p.add_argument("--cert", required=True)
    p.add_argument("--patterns", required=True)

    p = add("props", cmd_props, help="pattern completeness and counting checks")
    p.add_argument("--check", required=True, choices=["back2", "back1"])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--mrange", type=_mrange)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")

    p = add("replay", cmd_replay, help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    return ap


def main(argv: list[str] | None = None, *, _quiet: bool = False) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    run = Run(args, argv)
    sink = contextlib.redirect_stdout(io.StringIO()) if _quiet else contextlib.nullcontext()
    try:
        with sink:
            code = args.fn(run)
        run.finish()
        return code
    except ResourceCeilingExceeded as exc:
        print(f"error: {exc} (predicted {exc.predicted}, budget {exc.budget})", file=sys.stderr)
        return EXIT_CEILING
    except MemoryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CEILING
    except (UsageError, ValueError, ArithmeticError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
