"""Command-line entry points: run a mission end to end, aggregate benchmark
scores, inspect a persisted mission, or serve the HTTP API."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import bench as bench_mod
from ..candidates import ConfigurationError
from .config import build_clients, load_config
from .missions import InputError, MissionService, MissionState, StateError, TERMINAL_STATES


def _build_service(args) -> MissionService:
    config = load_config(getattr(args, "config", None))
    clients = build_clients(config, scene_override=getattr(args, "mock_scene", None))
    return MissionService(args.store, config, clients)


def _cmd_run(args) -> int:
    service = _build_service(args)
    mission = service.create(args.instruction, args.image)
    print(f"mission {mission.id}: {mission.state.value}")
    while mission.state not in TERMINAL_STATES:
        if mission.state is MissionState.AWAITING_SUPERVISOR:
            print(
                "mission awaits a supervisor decision; "
                f"resolve it via the API or rerun after deciding (store: {args.store})"
            )
            return 2
        mission = service.advance(mission.id)
        print(f"mission {mission.id}: {mission.state.value}")
    if mission.state is MissionState.ABORTED:
        print(f"aborted: {mission.abort_cause}")
        return 1
    result = json.loads((service.mission_dir(mission.id) / "result.json").read_text())
    print(json.dumps(result, indent=2))
    print(f"artifacts: {service.mission_dir(mission.id)}")
    return 0


def _cmd_bench(args) -> int:
    suite = bench_mod.load_suite(args.suite)
    scores = bench_mod.load_scores(args.scores)
    aggregates = bench_mod.aggregate(scores, suite=suite)
    text = bench_mod.render_report(aggregates)
    print(text, end="")
    if args.out:
        text_path, json_path = bench_mod.emit_report(aggregates, args.out)
        print(f"report written to {text_path} and {json_path}")
    return 0


def _cmd_inspect(args) -> int:
    store = Path(args.store)
    mission_dir = store / args.mission
    manifest = mission_dir / "mission.json"
    if not manifest.is_file():
        print(f"no mission {args.mission} under {store}", file=sys.stderr)
        return 1
    record = json.loads(manifest.read_text())
    print(json.dumps(record, indent=2))
    artifacts = sorted(
        p.relative_to(mission_dir).as_posix()
        for p in mission_dir.rglob("*")
        if p.is_file() and p.name != "mission.json"
    )
    print("files:")
    for name in artifacts:
        print(f"  {name}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    service = _build_service(args)
    uvicorn.run(create_app(service), host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="videonav",
        description="Language-guided drone navigation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one mission end to end")
    run.add_argument("--image", default=None, help="observation image (PNG); omit to render from the scene")
    run.add_argument("--instruction", required=True)
    run.add_argument("--config", default=None, help="service config JSON")
    run.add_argument("--mock-scene", default=None, help='scene file, or "demo" for the packaged scene')
    run.add_argument("--store", default="missions", help="mission store directory")
    run.set_defaults(fn=_cmd_run)

    bench = sub.add_parser("bench", help="aggregate trial scores into a report")
    bench.add_argument("--suite", default=None, help="suite JSON; omit for the built-in 15 tasks")
    bench.add_argument("--scores", required=True, help="CSV of model,task,trial,vc,df,tc")
    bench.add_argument("--out", default=None, help="directory for report.txt / report.json")
    bench.set_defaults(fn=_cmd_bench)

    inspect = sub.add_parser("inspect", help="print a persisted mission's manifest and files")
    inspect.add_argument("--mission", required=True, help="mission id")
    inspect.add_argument("--store", default="missions")
    inspect.set_defaults(fn=_cmd_inspect)

    serve = sub.add_parser("serve", help="serve the mission HTTP API")
    serve.add_argument("--config", default=None)
    serve.add_argument("--mock-scene", default=None)
    serve.add_argument("--store", default="missions")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(fn=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, ConfigurationError, StateError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
