import time
from colorama import just_fix_windows_console as fix_windows_console
from pathlib import Path
from typing import Optional

import critwave.cli as cli
import critwave.command as command

from .command.abc import RunInfo
from .config import DEFAULT_CONFIG_NAME, RunConfig
from .errors import CritwaveError
from .storage import RunManifest, write_json
from .version import VERSION_STR

USAGE = """
Usage: %s <action> [options...]
Where <action> can be:
    solve    -> solve the state equation for the configured control
    optimize -> compute an optimal control and audit it
    audit    -> audit a stored control against the optimality conditions
    check    -> run the numerical self-checks
    clean    -> remove all run artifacts
    version  -> print the version
Where [options...] can be:
    --config=<path>     -> configuration file (default: search `critwave.toml` upward)
    --out=<dir>         -> output directory (default `run.out`)
    --override=<k>=<v>  -> override a configuration key, e.g. time.n_t=400 (repeatable)
    --which=<checks>    -> checks to run: all, gradient, energy, prox, duality, psi, taylor
    --control=<path>    -> stored control for `audit`
    -q                  -> only print warnings, errors and results
""".strip()

MAX_CONFIG_SEARCH_DEPTH = 5
MANIFEST_NAME = "manifest.json"


def _find_config_file(filename: str) -> Optional[Path]:
    path = Path(filename).resolve()
    for _ in range(MAX_CONFIG_SEARCH_DEPTH):
        if path.exists():
            return path
        path = path.parent.parent / filename
    return None


def _clean(info: RunInfo) -> int:
    removed = False
    for kind in command.Kind:
        removed = command.create(kind, info).clean() or removed
    manifest = info.out / MANIFEST_NAME
    if manifest.exists():
        manifest.unlink()
        removed = True
    if removed:
        cli.success(f"Removed run artifacts from {info.out}")
    else:
        cli.note(f"Nothing to clean in {info.out}")
    return 0


def _run(cmd: command.Command, config: RunConfig) -> int:
    config.validate()
    if not cmd.want_run():
        return 1
    start = time.perf_counter()
    cmd.run()
    manifest = RunManifest(config.digest(), VERSION_STR, time.perf_counter() - start)
    for c in cmd.contrib():
        manifest.add(c.path, cmd.info.out)
    write_json(cmd.info.out / MANIFEST_NAME, manifest.to_json())
    return 0


def main(args: list[str]) -> int:
    fix_windows_console()

    args = cli.parse(args)

    if len(args.pos) < 1:
        print(USAGE % args.program)
        return 1

    action = args.pos[0].lower()
    match action:
        case "version":
            print(VERSION_STR)
            return 0

    if action != "clean" and command.find(action) is None:
        cli.error(f"Unknown action '{action}'.")
        print(USAGE % args.program)
        return 1

    cli.set_quiet(any(x in args.flags for x in ("q", "quiet")))

    config_path: Optional[Path]
    if "config" in args.named:
        config_path = Path(args.named.pop("config")).resolve()
        if not config_path.exists():
            cli.error(f"Configuration file {config_path} does not exist.")
            return 2
    else:
        config_path = _find_config_file(DEFAULT_CONFIG_NAME)
        if config_path is None:
            print("Could not find a configuration.")
            print(USAGE % args.program)
            return 1

    try:
        config = RunConfig.load(config_path, args.multi.get("override", []))
        if "out" in args.named:
            out = Path(args.named["out"]).resolve()
        else:
            out = (config.base / config.run.out).resolve()
        control = Path(args.named["control"]).resolve() if "control" in args.named else None
        info = RunInfo(out, config, args.named.get("which", "all"), control)

        if action == "clean":
            return _clean(info)
        cmd = command.from_name(action, info)
        if cmd is None:
            return 1
        return _run(cmd, config)
    except CritwaveError as e:
        cli.error(e.message, e.tip)
        return e.exit_code


def script_main() -> int:
    from sys import argv

    return main(argv)


if __name__ == "__main__":
    exit(script_main())
