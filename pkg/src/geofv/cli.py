"""Command-line driver: run studies, verify flux axioms, inspect meshes."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import ConfigurationError
from .flux import FluxModel
from .harness import CONFIG_KEYS, ExperimentConfig, run_experiment
from .numflux import verify_flux_axioms

_EPILOG = "config keys (one 'key = value' per line, '#' comments):\n\n" + CONFIG_KEYS


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="geofv",
        description="Finite volume transport on closed surfaces",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to a flat key-value config file")
        p.add_argument("--output-dir", default=None, help="override output.dir")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument(
            "--threads",
            type=int,
            default=1,
            help="upper bound on worker threads (execution is currently "
            "single-threaded and deterministic)",
        )

    run_p = sub.add_parser("run", help="run the refinement study of a config")
    common(run_p)

    verify_p = sub.add_parser(
        "verify-flux", help="randomized verification of the flux axioms"
    )
    common(verify_p)

    info_p = sub.add_parser(
        "mesh-info", help="audit shape regularity and export mesh JSON"
    )
    common(info_p)
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    if args.output_dir is not None:
        config.output_dir = args.output_dir
    if args.seed is not None:
        config.seed = args.seed
    if args.threads < 1:
        raise ConfigurationError("--threads must be >= 1")
    return config


def _cmd_run(args) -> int:
    config = _load_config(args)
    result = run_experiment(config, output_dir=config.output_dir)
    print("level        h          tau        l1_error     wall_s")
    for row in result.table.rows:
        print(
            f"{row.level:>5}  {row.h:>9.3e}  {row.tau:>9.3e}"
            f"  {row.l1_error:>11.5e}  {row.wall_s:>8.2f}"
        )
    print(f"fitted rate: {result.table.fitted_rate:.4f}"
          f"  (fit residual {result.table.fit_residual:.2e})")
    if result.summary.get("failures"):
        for failure in result.summary["failures"]:
            print(f"level {failure['level']} FAILED: {failure['error']}")
        return 1
    return 0


def _cmd_verify_flux(args) -> int:
    config = _load_config(args)
    manifold = config.build_manifold()
    mesh = config.build_mesh(manifold, config.levels[0])
    model = FluxModel(
        manifold, config.flux_kind, config.build_velocity(), u_range=(-1.0, 1.0)
    )
    report = verify_flux_axioms(
        mesh, model, config.scheme, config.verify_samples, seed=config.seed
    )
    print(
        f"{report.scheme} / {report.flux_kind}: {report.samples} samples, "
        f"violations {report.counts}"
    )
    if config.output_dir is not None:
        os.makedirs(config.output_dir, exist_ok=True)
        path = os.path.join(config.output_dir, "flux-axioms.json")
        with open(path, "w") as fh:
            json.dump(
                {
                    "scheme": report.scheme,
                    "flux": report.flux_kind,
                    "samples": report.samples,
                    "seed": report.seed,
                    "counts": report.counts,
                    "violations": report.violations,
                },
                fh,
                indent=1,
                sort_keys=True,
            )
            fh.write("\n")
    return 0 if report.ok else 2


def _cmd_mesh_info(args) -> int:
    config = _load_config(args)
    manifold = config.build_manifold()
    print("level  cells  faces  vertices  chi        h      gamma2  sup(p/|K|)")
    for level in config.levels:
        mesh = config.build_mesh(manifold, level)
        audit = mesh.audit_shape_regularity()
        area_defect = abs(mesh.cell_area.sum() - manifold.total_area)
        print(
            f"{level:>5}  {mesh.num_cells:>5}  {mesh.num_faces:>5}"
            f"  {mesh.num_vertices:>8}  {mesh.euler_characteristic():>3}"
            f"  {mesh.h:>8.4f}  {audit.gamma2:>7.3f}"
            f"  {mesh.sup_perimeter_area_ratio():>9.3f}"
        )
        if area_defect > 1e-8 * manifold.total_area:
            print(f"  WARNING: cell areas miss total area by {area_defect:.2e}")
        if config.output_dir is not None:
            os.makedirs(config.output_dir, exist_ok=True)
            mesh.export_json(
                os.path.join(config.output_dir, f"mesh-level{level}.json")
            )
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    np.seterr(all="raise", under="ignore")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify-flux":
            return _cmd_verify_flux(args)
        return _cmd_mesh_info(args)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
