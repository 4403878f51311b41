"""The primfit command line.

Exit codes: 0 success, 2 parse error, 3 numerical failure, 4 I/O.
"""

import argparse
import logging
import sys
from pathlib import Path

from .errors import PrimfitError


def _add_project_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cloud", required=True, help="point cloud PLY")
    p.add_argument("--cameras", required=True, help="camera JSON")
    p.add_argument("--images", default=None, help="directory holding the view images")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="primfit",
                                     description="sketch-guided primitive fitting workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="summarize a point cloud file")
    p.add_argument("--cloud", required=True)

    p = sub.add_parser("validate", help="check a session script")
    p.add_argument("script")

    p = sub.add_parser("replay", help="run a session script and write its exports")
    _add_project_args(p)
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["ply", "obj"], default="ply",
                   help="format for exports whose action does not name one")

    p = sub.add_parser("report", help="replay a script and render report figures")
    _add_project_args(p)
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="serve the HTTP API for the web UI")
    _add_project_args(p)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--out", default=None, help="directory for exports (default: workdir)")
    p.add_argument("--session", default=None,
                   help="session script to append to (and rebuild from on restart)")
    p.add_argument("--ui", default=None, help="static web UI directory to mount at /")

    p = sub.add_parser("scene", help="generate the synthetic sphere demo scene")
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=7)

    return parser


def _load_project(args):
    from .session import load_project

    return load_project(args.cloud, args.cameras, images_dir=args.images)


def _cmd_info(args) -> int:
    from .meshio import read_cloud_ply

    cloud = read_cloud_ply(args.cloud)
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    print(f"{args.cloud}: {len(cloud)} points")
    print(f"  bounds min [{lo[0]:.6g}, {lo[1]:.6g}, {lo[2]:.6g}]")
    print(f"  bounds max [{hi[0]:.6g}, {hi[1]:.6g}, {hi[2]:.6g}]")
    print(f"  colors: {'yes' if cloud.colors is not None else 'no'}")
    return 0


def _cmd_validate(args) -> int:
    from .session import load_script, validate_script

    actions = load_script(args.script)
    validate_script(actions)
    print(f"{args.script}: OK ({len(actions)} actions)")
    return 0


def _replay_with_default_format(project, actions, out_dir, default_format):
    from .session import replay

    patched = []
    for a in actions:
        if a.get("action") == "export" and "format" not in a and \
                Path(a.get("path", "")).suffix.lstrip(".").lower() not in ("ply", "obj"):
            a = dict(a, format=default_format)
        patched.append(a)
    return replay(project, patched, out_dir=out_dir)


def _cmd_replay(args) -> int:
    from .session import load_script

    project = _load_project(args)
    actions = load_script(args.script)
    store = _replay_with_default_format(project, actions, Path(args.out), args.format)
    print(f"replayed {len(actions)} actions: "
          f"{len(store.selections)} selections, {len(store.curves)} curves, "
          f"{len(store.meshes)} meshes, {len(store.exports)} exports")
    for path in store.exports:
        print(f"  wrote {path}")
    return 0


def _cmd_report(args) -> int:
    from .report import write_report
    from .session import load_script, replay

    project = _load_project(args)
    actions = load_script(args.script)
    store = replay(project, actions, out_dir=Path(args.out))
    written = write_report(project, store, Path(args.out))
    for path in written:
        print(f"  wrote {path}")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    project = _load_project(args)
    out_dir = Path(args.out) if args.out else Path.cwd()
    serve(project, args.port, out_dir, script_path=args.session,
          ui_dir=args.ui, host=args.host)
    return 0


def _cmd_scene(args) -> int:
    from .synthetic import build_sphere_scene

    paths = build_sphere_scene(args.out, n_points=args.points, noise=args.noise,
                               seed=args.seed)
    for key in ("cloud", "cameras", "script"):
        print(f"  wrote {paths[key]}")
    return 0


_COMMANDS = {"info": _cmd_info, "validate": _cmd_validate, "replay": _cmd_replay,
             "report": _cmd_report, "serve": _cmd_serve, "scene": _cmd_scene}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PrimfitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
