"""Report emission: ``report.json``, ``report.txt`` and ``fields/*.csv``.

``report.json`` holds only seed-determined content.  Wall-clock data (start
time, stage timings, backend) goes to the run section of ``report.txt``.
"""
import json
import logging
from pathlib import Path

from .geometry import write_field_csv
from .pipeline import AnalysisReport

log = logging.getLogger(__name__)

REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"


def report_json(report: AnalysisReport) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(report.data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt(v):
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def report_text(report: AnalysisReport) -> str:
    d = report.data
    prov = d["provenance"]
    lines = [
        f"matuniform report: {d['body']}",
        f"  grid dims {prov['grid']['dims']}, box {prov['grid']['box']}",
        f"  model {prov['model'].get('id')}, seed {prov['seed']}",
        f"  tolerances: sym {_fmt(prov['tolerances']['sym'])}, iso {_fmt(prov['tolerances']['iso'])}, "
        f"curvature {_fmt(prov['tolerances']['curv_effective'])}",
        "",
        "verdicts",
    ]
    for k, v in d["verdicts"].items():
        lines.append(f"  {k:<28} {_fmt(v)}")
    lines += ["", "stages"]
    for name, rec in d["stages"].items():
        status = rec.get("status")
        lines.append(f"  [{name}] {status}" + (f": {rec['reason']}" if status == "skipped" else ""))
        if status != "ok":
            continue
        if name == "classify":
            for kind, n in rec["kind_histogram"].items():
                lines.append(f"      {kind:<28} {n}")
        elif name == "uniformity":
            lines.append(f"      uniform {_fmt(rec['uniform'])}, failures {rec['failures']}, "
                         f"max accepted residual {_fmt(rec['residual_max_accepted'])}, "
                         f"min rejected residual {_fmt(rec['residual_min_rejected'])}")
        elif name == "unisymmetry":
            lines.append(f"      unisymmetric {_fmt(rec['unisymmetric'])}" + (f" ({rec['reason']})" if rec["reason"] else ""))
            rg = rec.get("reduced_vertex_group")
            if rg:
                lines.append(f"      reduced vertex group {rg['reduction']} (predicate: {rg['predicate_value']})")
        elif name == "geometry":
            lines.append(f"      frames from {rec['frame_source']} arrows, kind {rec['kind']}")
            if "curvature_max" in rec:
                lines.append(f"      curvature max {_fmt(rec['curvature_max'])} (tol {_fmt(rec['curvature_tol'])})")
            if "volume_form_min" in rec:
                lines.append(f"      volume form in [{_fmt(rec['volume_form_min'])}, {_fmt(rec['volume_form_max'])}]")
        elif name == "homogeneity":
            lines.append(f"      {rec['mode']}: {_fmt(rec['homogeneous'])} by {rec['criterion']} ({rec['label']})")
    info = report.run_info
    if info:
        lines += ["", "run"]
        for k in ("started_utc", "python", "numpy", "numba_enabled"):
            if k in info:
                lines.append(f"  {k:<28} {_fmt(info[k])}")
        for name, sec in info.get("stage_seconds", {}).items():
            lines.append(f"  {name + ' seconds':<28} {sec:.3f}")
    return "\n".join(lines) + "\n"


def emit(report: AnalysisReport, out_dir, formats) -> list:
    """Write the requested formats into ``out_dir``; returns the written paths."""
    formats = list(dict.fromkeys(formats or []))
    if not formats:
        log.warning("no output formats requested; nothing written")
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        p = out / REPORT_JSON
        p.write_text(report_json(report), encoding="utf-8", newline="\n")
        written.append(p)
    if "txt" in formats:
        p = out / REPORT_TXT
        p.write_text(report_text(report), encoding="utf-8", newline="\n")
        written.append(p)
    if "csv" in formats:
        fdir = out / "fields"
        fdir.mkdir(exist_ok=True)
        for name, (values, names, margin) in sorted(report.fields.items()):
            p = fdir / f"{name}.csv"
            write_field_csv(p, values, names, margin)
            written.append(p)
    return written
