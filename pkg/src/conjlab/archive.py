"""Run manifests, archives on disk and the CSV exports.

An archive is a directory holding ``manifest.json``, ``steps.jsonl`` and
``archive.json``.  The rationals of a run are never stored in decimal; the
truncation indices k are enough to rebuild every map exactly.
"""
import csv
import io
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mpf

from . import scheduler
from .errors import ArchiveVersionMismatch, ConjlabError, InvalidManifest, InvalidParam, InvalidSchedule, UnknownExport
from .liouville import from_descriptor
from .values import DEFAULT_PRECISION, Pow10, precision, render

FORMAT = "conjlab-archive"
VERSION = 1
DIGITS = 30
CDF_POINTS = 2 ** 10 + 1

_BUDGET_KEYS = ("max_q_log10", "candidate_cap", "max_precision", "extensions", "holder_d")


# ------------------------------------------------------------ manifest ---
@dataclass
class RunManifest:
    construction: scheduler.Construction
    r: int
    steps: int
    alpha: dict
    precision_bits: int = DEFAULT_PRECISION
    budgets: scheduler.Config = field(default_factory=scheduler.Config)
    output: str = None

    def liouville(self):
        return from_descriptor(self.alpha)

    def to_json(self):
        d = {
            "construction": self.construction.to_json(),
            "r": self.r,
            "steps": self.steps,
            "alpha": self.alpha,
            "precision_bits": self.precision_bits,
            "budgets": self.budgets.to_json(),
        }
        if self.output is not None:
            d["output"] = self.output
        return d


def _need(d, key, kind):
    if key not in d:
        raise InvalidManifest(f"manifest is missing {key!r}")
    v = d[key]
    if not isinstance(v, kind) or isinstance(v, bool):
        raise InvalidManifest(f"{key!r} has the wrong type")
    return v


def manifest_from_json(d):
    if not isinstance(d, dict):
        raise InvalidManifest("manifest must be a JSON object")
    try:
        cons = scheduler.construction_from_json(_need(d, "construction", dict))
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidManifest(f"bad construction: {exc}") from exc
    r = _need(d, "r", int)
    steps = _need(d, "steps", int)
    if r < 1 or steps < 0:
        raise InvalidManifest("need r >= 1 and steps >= 0")
    alpha = _need(d, "alpha", dict)
    try:
        from_descriptor(alpha)
    except (InvalidSchedule, TypeError, ValueError) as exc:
        raise InvalidManifest(f"bad alpha: {exc}") from exc
    alpha = {"kind": alpha.get("kind", "factorial"), **({"a": list(alpha["a"])} if "a" in alpha else {})}
    bits = d.get("precision_bits", DEFAULT_PRECISION)
    if not isinstance(bits, int) or bits < 64:
        raise InvalidManifest("precision_bits must be an integer >= 64")
    budgets = d.get("budgets", {})
    if not isinstance(budgets, dict) or set(budgets) - set(_BUDGET_KEYS):
        raise InvalidManifest(f"budgets may only contain {', '.join(_BUDGET_KEYS)}")
    try:
        cfg = scheduler.config_from_json(budgets)
    except (TypeError, ValueError) as exc:
        raise InvalidManifest(f"bad budgets: {exc}") from exc
    out = d.get("output")
    if out is not None and not isinstance(out, str):
        raise InvalidManifest("output must be a path string")
    return RunManifest(cons, r, steps, alpha, bits, cfg, out)


def dumps(obj):
    """Canonical JSON text (sorted keys, two-space indent, trailing newline)."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def parse_manifest(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidManifest(f"malformed JSON: {exc}") from exc
    return manifest_from_json(d)


def serialize_manifest(m):
    return dumps(m.to_json())


def load_manifest(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidManifest(f"cannot read manifest: {exc}") from exc
    return parse_manifest(text)


# -------------------------------------------------------------- values ---
def jsonable(v):
    """Step-log values as JSON: exact rationals as "p/q", floats at 30 digits."""
    if isinstance(v, scheduler.StepBoundCheck):
        return {"name": v.name, "lhs": jsonable(v.lhs), "rhs": jsonable(v.rhs), "passed": v.passed}
    if isinstance(v, dict):
        return {k: jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return v if v.bit_length() < 600 else {"log10": render(mpmath.log10(mpf(v)))}
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, Pow10):
        return {"pow10": str(v.exponent)}
    if isinstance(v, (mpf, float)):
        return render(v, DIGITS)
    return str(v)


# ------------------------------------------------------------- archive ---
@dataclass
class RunArchive:
    manifest: dict
    indices: list
    logs: list
    report: dict
    version: int = VERSION

    @property
    def run_manifest(self):
        return manifest_from_json(self.manifest)

    def state(self):
        """Rebuild the construction state from the stored truncation indices."""
        m = self.run_manifest
        with precision(m.precision_bits):
            return scheduler.rebuild(m.construction, m.r, m.liouville(), self.indices, m.budgets)

    def to_json(self):
        return {"format": FORMAT, "version": self.version, "manifest": self.manifest,
                "indices": self.indices, "report": self.report}


def archive_from_state(manifest, state):
    logs = [jsonable(lg) for lg in state.logs]
    report = {
        "n": state.n,
        "alpha_next": state.truncs[-1].to_json(),
        "total_bound": render(scheduler.total_bound(state), DIGITS) if state.n else None,
        "all_passed": all(lg.get("passed", True) for lg in logs),
        "method": state.method,
    }
    return RunArchive(manifest.to_json(), [t.k for t in state.truncs], logs, report)


def _write_text(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_archive(archive, path):
    """Write the archive directory; it appears at ``path`` only when complete."""
    path = os.path.abspath(path)
    parent = os.path.dirname(path)
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(dir=parent, prefix=".tmp-archive-")
    try:
        _write_text(os.path.join(tmp, "manifest.json"), dumps(archive.manifest))
        _write_text(os.path.join(tmp, "steps.jsonl"),
                    "".join(json.dumps(lg, sort_keys=True) + "\n" for lg in archive.logs))
        _write_text(os.path.join(tmp, "archive.json"), dumps(archive.to_json()))
        if os.path.isdir(path):
            shutil.rmtree(path)
        os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return path


def load_archive(path):
    try:
        with open(os.path.join(path, "archive.json"), encoding="utf-8") as fh:
            d = json.load(fh)
        with open(os.path.join(path, "steps.jsonl"), encoding="utf-8") as fh:
            logs = [json.loads(line) for line in fh if line.strip()]
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidManifest(f"cannot read archive at {path}: {exc}") from exc
    if d.get("format") != FORMAT:
        raise InvalidManifest(f"{path} is not a run archive")
    if d.get("version") != VERSION:
        raise ArchiveVersionMismatch(f"archive version {d.get('version')} but this build reads {VERSION}")
    return RunArchive(d["manifest"], d["indices"], logs, d["report"], d["version"])


def construct(manifest):
    """Run the scheduler for a manifest and return the archive (not yet saved)."""
    with precision(manifest.precision_bits):
        try:
            state = scheduler.run(manifest.construction, manifest.r, manifest.liouville(),
                                  manifest.steps, manifest.budgets)
        except InvalidParam as exc:
            raise InvalidManifest(str(exc)) from exc
        return archive_from_state(manifest, state)


# -------------------------------------------------------------- export ---
def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def export_step_bounds(archive):
    steps = [lg for lg in archive.logs if lg["step"] >= 1]
    if not steps:
        raise UnknownExport("empty archive: no steps to export")
    rows = [(lg["step"], f"10^{lg['q_log10']}", lg["bound"], render(Fraction(lg["threshold"]), DIGITS),
             int(lg["passed"])) for lg in steps]
    return _csv(("n", "q_n", "bound", "threshold", "passed"), rows)


def export_conjugacy_cdf(archive, points=CDF_POINTS):
    state = archive.state()
    with precision(archive.run_manifest.precision_bits):
        Hi = state.H().inverse()
        rows = []
        for i in range(points):
            x = mpf(i) / (points - 1)
            rows.append((render(x, DIGITS), render(Hi.eval_lift(x), DIGITS)))
    return _csv(("x", "H_inv"), rows)


def export_holder_table(archive, scales=(6, 16)):
    from .analytics import holder_exponent

    state = archive.state()
    rows = []
    with precision(archive.run_manifest.precision_bits):
        H = state.H()
        for direction in ("forward", "inverse"):
            fit = holder_exponent(H, direction, scales)
            for j, s in zip(fit.scales, fit.sups):
                rows.append((direction, j, render(mpf(2) ** -j, DIGITS), render(s, DIGITS),
                             render(fit.exponent, DIGITS)))
    return _csv(("direction", "j", "scale", "sup", "exponent"), rows)


EXPORTS = {
    "step-bounds": export_step_bounds,
    "conjugacy-cdf": export_conjugacy_cdf,
    "holder-table": export_holder_table,
}


def export(archive, what):
    if what not in EXPORTS:
        raise UnknownExport(f"unknown export {what!r}; choose from {', '.join(EXPORTS)}")
    return EXPORTS[what](archive)


def write_text(path, text):
    _write_text(path, text)


__all__ = [
    "RunManifest", "RunArchive", "parse_manifest", "serialize_manifest", "load_manifest",
    "manifest_from_json", "construct", "save_archive", "load_archive", "export", "write_text",
    "ConjlabError",
]
