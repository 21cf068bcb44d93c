"""Command line: construct / analyze / export.

Exit codes: 0 ok, 2 bad manifest, 3 unknown diagnostic, 4 unknown export,
5 archive version mismatch, 10 precision budget, 11 schedule exhausted,
12 candidate limit.  Default precision comes from CONJLAB_PRECISION.
"""
import argparse
import json
import os
import sys

from . import analytics, archive
from .errors import ConjlabError, DegenerateFit, UnknownDiagnostic
from .values import precision, render

DIAGNOSTICS = ("rotation", "holder", "measure", "singularity", "ac", "ck")


def _default_out(manifest_path, m):
    if m.output:
        base = os.path.dirname(os.path.abspath(manifest_path))
        return os.path.join(base, m.output)
    stem = os.path.splitext(os.path.abspath(manifest_path))[0]
    return stem + ".archive"


def cmd_construct(args):
    m = archive.load_manifest(args.manifest)
    if args.precision:
        m.precision_bits = args.precision
    a = archive.construct(m)
    out = archive.save_archive(a, args.out or _default_out(args.manifest, m))
    last = [lg for lg in a.logs if lg["step"] >= 1]
    for lg in last:
        print(f"step {lg['step']}: q = 10^{lg['q_log10']}  bound {lg['bound']}  < {lg['threshold']}")
    print(f"archive written to {out}")
    return 0


def _rotation(state, a, iterations):
    est = analytics.rotation_number(state.f(), iterations)
    target = state.truncs[-1].to_mpf()
    return {
        "iterations": iterations, "estimate": render(est.value), "bound": render(est.bound),
        "alpha_archived": a.report["alpha_next"], "error": render(abs(est.value - target)),
        "within_bound": bool(est.contains(target)),
    }


def _holder(state):
    out = {}
    H = state.H()
    for direction in ("forward", "inverse"):
        try:
            fit = analytics.holder_exponent(H, direction)
        except DegenerateFit as exc:
            out[direction] = {"error": str(exc)}
            continue
        out[direction] = {
            "exponent": render(fit.exponent), "residual": render(fit.residual),
            "scales": [f"2^-{j}" for j in fit.scales], "pairs": fit.pairs, "sampled": True,
        }
    return out


def _measure(state, N):
    if state.n < 1:
        return {"note": "f is a rotation; both CDFs are Lebesgue"}
    push = analytics.measure_cdf(state, "pushforward")
    birk = analytics.measure_cdf(state, "birkhoff", N=N)
    return {"N": N, "sup_distance": render(push.sup_distance(birk)),
            "lebesgue_distance": render(push.sup_distance(analytics.lebesgue_cdf()))}


def _exact(v):
    return archive.jsonable(v)


def cmd_analyze(args):
    a = archive.load_archive(args.archive)
    m = a.run_manifest
    which = [d for d in DIAGNOSTICS if getattr(args, d)]
    if not which:
        raise UnknownDiagnostic("pick at least one of " + ", ".join("--" + d for d in DIAGNOSTICS))
    kind = m.construction.kind
    # validate before any heavy work
    if "singularity" in which and kind != "G1Sing":
        raise UnknownDiagnostic(f"--singularity needs a G1Sing archive, got {kind}")
    if "ac" in which and kind not in ("G1Ac", "G0Ac"):
        raise UnknownDiagnostic(f"--ac needs a G1Ac or G0Ac archive, got {kind}")
    if "ck" in which and kind not in ("Gk", "G1Ac"):
        raise UnknownDiagnostic(f"--ck needs a Gk or G1Ac archive, got {kind}")
    state = a.state()
    report = {"archive": os.path.abspath(args.archive), "n": state.n, "construction": kind}
    with precision(m.precision_bits):
        if "rotation" in which:
            report["rotation"] = _rotation(state, a, args.iterations)
        if "holder" in which:
            report["holder"] = _holder(state)
        if "measure" in which:
            report["measure"] = _measure(state, args.iterations)
        if "singularity" in which:
            report["singularity"] = _exact(analytics.singularity_diagnostic(state))
        if "ac" in which:
            report["ac"] = _exact(analytics.ac_diagnostic(state))
        if "ck" in which:
            report["ck"] = _exact(analytics.ck_diagnostic(state))
    path = args.out or os.path.join(args.archive, "report.json")
    archive.write_text(path, archive.dumps(report))
    if "holder" in which:
        archive.write_text(os.path.join(os.path.dirname(path), "holder-table.csv"), archive.export(a, "holder-table"))
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_export(args):
    a = archive.load_archive(args.archive)
    text = archive.export(a, args.what)
    if args.out:
        archive.write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="conjlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="run a manifest and write an archive")
    c.add_argument("manifest")
    c.add_argument("--out", help="archive directory (default: manifest output field)")
    c.add_argument("--precision", type=int, help="override precision_bits")
    c.set_defaults(func=cmd_construct)

    a = sub.add_parser("analyze", help="diagnostics on an archive")
    a.add_argument("archive")
    for d in DIAGNOSTICS:
        a.add_argument(f"--{d}", action="store_true")
    a.add_argument("--iterations", type=int, default=10 ** 4, help="rotation / Birkhoff orbit length")
    a.add_argument("--out", help="report path (default: <archive>/report.json)")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("export", help="CSV tables from an archive")
    e.add_argument("archive")
    e.add_argument("what", help="conjugacy-cdf | step-bounds | holder-table")
    e.add_argument("--out", help="CSV path (default: stdout)")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConjlabError as exc:
        print(f"conjlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
