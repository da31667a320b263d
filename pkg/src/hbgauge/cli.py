"""Command line entry point.

Usage::

    hbgauge run CONFIG.json [--out DIR] [--no-svg] [--tolerance REL]

Exit codes: 0 all checks passed, 2 invalid configuration, 3 inadmissible
hierarchical mesh, 4 gauge validity failure (spectral mismatch, zero count,
or tree structure).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .errors import AdmissibilityError, GaugeError
from .pipeline import Experiment, run_experiment
from .svg import level_svg, mesh_svg, overlay_svg

log = logging.getLogger("hbgauge")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADMISSIBILITY = 3
EXIT_GAUGE = 4

CSV_HEADER = ["i", "lambda_gauged", "lambda_ungauged", "abs_diff", "rel_diff"]


@dataclass
class RunArtifacts:
    out_dir: Path
    eigenvalues_csv: Path | None = None
    summary_json: Path | None = None
    trees_csv: Path | None = None
    svgs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    exit_code: int = EXIT_OK


def bundled_configs() -> list:
    root = resources.files("hbgauge") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def resolve_config(path) -> Path:
    """A filesystem path, or the name of a bundled config."""
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("hbgauge") / "configs" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    return p


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(report, path) -> Path:
    """Paired nonzero eigenvalues, one row per pair, ``i`` starting at 1."""
    cmp_ = report.comparison
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i, (g, u, a, r) in enumerate(
            zip(cmp_.gauged, cmp_.ungauged, cmp_.abs_diff, cmp_.rel_diff), start=1
        ):
            w.writerow([i, _fmt(g), _fmt(u), _fmt(a), _fmt(r)])
    return path


def emit_trees_csv(exp: Experiment, path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "edge", "class", "x0", "y0", "x1", "y1"])
        for g, t in zip(exp.graphs, exp.trees):
            nodes = g.grid.nodes
            for e, cls in zip(t.edges, t.classes):
                a, b = g.grid.edges[e]
                w.writerow([g.level, int(e), int(cls), *map(_fmt, nodes[a]), *map(_fmt, nodes[b])])
    return path


def emit_svg(exp: Experiment, out_dir, prefix: str) -> list:
    """One SVG per level, the hierarchical mesh, and (p = 1 only) the multi-level overlay."""
    out_dir = Path(out_dir)
    paths = []
    for g, t in zip(exp.graphs, exp.trees):
        p = out_dir / f"{prefix}_level{g.level}.svg"
        p.write_text(level_svg(g, t), encoding="utf-8")
        paths.append(p)
    p = out_dir / f"{prefix}_mesh.svg"
    p.write_text(mesh_svg(exp.mesh), encoding="utf-8")
    paths.append(p)
    if exp.config.degree == 1:
        p = out_dir / f"{prefix}_multilevel.svg"
        p.write_text(overlay_svg(exp.graphs, exp.trees, exp.mesh), encoding="utf-8")
        paths.append(p)
    else:
        log.warning("multi-level overlay skipped for degree %d: active edges of different levels overlap",
                    exp.config.degree)
    return paths


def write_summary(summary: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def run(config_path, out_dir=None, svg: bool = True, tolerance: float | None = None) -> RunArtifacts:
    """Run the full pipeline for one config and write its artifacts.

    Raises ``ConfigError``, ``AdmissibilityError`` or ``GaugeError``; gauge
    check failures that still produce a report are signalled through
    ``RunArtifacts.exit_code``.
    """
    config: ExperimentConfig = load_config(resolve_config(config_path))
    if tolerance is not None:
        config = dataclasses.replace(config, spectral_tolerance=float(tolerance))
    out = Path(out_dir) if out_dir else Path("out") / config.name
    out.mkdir(parents=True, exist_ok=True)

    exp = run_experiment(config)
    summary = exp.summary()
    art = RunArtifacts(out, summary=summary)
    art.eigenvalues_csv = emit_csv(exp.report, out / config.output("csv"))
    art.trees_csv = emit_trees_csv(exp, out / config.output("trees_csv"))
    art.summary_json = write_summary(summary, out / config.output("summary"))
    if svg:
        art.svgs = emit_svg(exp, out, config.output("svg_prefix"))
    if not all(summary["checks"].values()):
        art.exit_code = EXIT_GAUGE
    return art


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hbgauge", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment configuration")
    r.add_argument("config", help="config JSON path or name of a bundled config")
    r.add_argument("--out", default=None, help="output directory (default out/<name>)")
    r.add_argument("--no-svg", action="store_true", help="skip SVG rendering")
    r.add_argument("--tolerance", type=float, default=None,
                   help="relative tolerance for gauged vs ungauged eigenvalues")
    sub.add_parser("list", help="list bundled configurations")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = _parser().parse_args(argv)
    if args.command == "list":
        print("\n".join(bundled_configs()))
        return EXIT_OK
    try:
        art = run(args.config, args.out, svg=not args.no_svg, tolerance=args.tolerance)
    except ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except AdmissibilityError as exc:
        log.error("inadmissible mesh: %s", exc)
        return EXIT_ADMISSIBILITY
    except GaugeError as exc:
        log.error("gauged system could not be solved: %s", exc)
        return EXIT_GAUGE
    s = art.summary
    log.info("dim W0 = %d, dim W1 = %d, |M_L| = %d, zero count = %d, max rel diff = %.3e",
             s["dim_W0"], s["dim_W1"], s["multilevel_tree_size"], s["zero_count"], s["max_rel_diff"])
    for name, ok in s["checks"].items():
        log.info("%-22s %s", name, "PASS" if ok else "FAIL")
    log.info("artifacts written to %s", art.out_dir)
    return art.exit_code


if __name__ == "__main__":
    sys.exit(main())
