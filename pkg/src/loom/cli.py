"""Headless frontend: scripted runs, scenario validation, and the server.

`loom run` drives the orchestrator in-process (no HTTP hop), so scripted
runs double as the reproducibility harness: with the mock backend the
transcript is a pure function of (scenario, script).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import click

from . import orchestrator as orc
from .errors import (
    BackendParseError,
    BackendTransportError,
    LoomError,
    ScenarioFormatError,
    ScenarioValidationError,
)
from .generation import BackendDescriptor, build_backend
from .orchestrator import Session
from .scenario import load_scenario_file, validate_scenario

EXIT_OK = 0
EXIT_INVALID_SCENARIO = 2
EXIT_BACKEND_FAILURE = 3
EXIT_IO_FAILURE = 4


@dataclass
class RunScript:
    scenario_path: str
    turns: int
    stirs: list[tuple[int, str]] = field(default_factory=list)
    seed: int = 0
    backend: BackendDescriptor = BackendDescriptor(kind="mock")
    out_path: str = "transcript.md"
    thoughts: bool = False


def run_script(script: RunScript) -> int:
    """Execute a linear run on a single branch; returns the exit code."""
    try:
        scenario = load_scenario_file(script.scenario_path)
    except ScenarioFormatError as exc:
        click.echo(f"invalid scenario: {exc}", err=True)
        return EXIT_INVALID_SCENARIO
    report = validate_scenario(scenario)
    if report:
        for violation in report:
            click.echo(f"invalid scenario: {violation}", err=True)
        return EXIT_INVALID_SCENARIO
    if script.turns < 0:
        click.echo("invalid script: turns must be >= 0", err=True)
        return EXIT_INVALID_SCENARIO
    for after_turn, _ in script.stirs:
        if not 0 <= after_turn <= script.turns:
            click.echo(
                f"invalid script: stir after turn {after_turn} outside 0..{script.turns}",
                err=True,
            )
            return EXIT_INVALID_SCENARIO

    try:
        backend = build_backend(script.backend)
    except ValueError as exc:
        click.echo(f"invalid backend: {exc}", err=True)
        return EXIT_BACKEND_FAILURE

    session = Session("cli", scenario, seed=script.seed)
    head = session.tree.root_id
    try:
        for after_turn, text in script.stirs:
            if after_turn == 0:
                head = orc.stir(session, head, text, backend)
        for turn in range(1, script.turns + 1):
            head = orc.advance(session, head, backend)
            for after_turn, text in script.stirs:
                if after_turn == turn:
                    head = orc.stir(session, head, text, backend)
    except (BackendTransportError, BackendParseError) as exc:
        click.echo(f"backend failure: {exc}", err=True)
        return EXIT_BACKEND_FAILURE
    except LoomError as exc:
        click.echo(f"run failed: {exc}", err=True)
        return EXIT_BACKEND_FAILURE

    transcript = orc.export_transcript(session, head, include_thoughts=script.thoughts)
    try:
        out = Path(script.out_path)
        if out.parent != Path(""):
            out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(transcript, encoding="utf-8")
    except OSError as exc:
        click.echo(f"cannot write transcript: {exc}", err=True)
        return EXIT_IO_FAILURE
    return EXIT_OK


def _parse_stir(value: str) -> tuple[int, str]:
    after, sep, text = value.partition(":")
    if not sep or not text:
        raise click.BadParameter(f"expected AFTER:TEXT, got {value!r}")
    try:
        return int(after), text
    except ValueError:
        raise click.BadParameter(f"stir turn must be an integer, got {after!r}") from None


def _descriptor(backend: str, backend_url: str, model: str) -> BackendDescriptor:
    return BackendDescriptor(kind=backend, endpoint=backend_url, model_name=model)


@click.group()
def main() -> None:
    """Narrative orchestration: shape a cast, observe, stir, select."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option("--turns", default=0, show_default=True, type=int)
@click.option("--stir", "stirs", multiple=True, metavar="AFTER:TEXT",
              help="Inject a stage direction after the given turn (repeatable).")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--backend", default="mock", show_default=True,
              type=click.Choice(["mock", "http"]))
@click.option("--backend-url", default="", help="Chat-completions endpoint (http backend).")
@click.option("--model", default="", help="Model name (http backend).")
@click.option("--out", "out_path", default="transcript.md", show_default=True, type=click.Path())
@click.option("--thoughts", is_flag=True, help="Include private thoughts as blockquotes.")
def run(scenario_path: str, turns: int, stirs: tuple[str, ...], seed: int,
        backend: str, backend_url: str, model: str, out_path: str, thoughts: bool) -> None:
    """Run a scripted linear session and write its transcript."""
    script = RunScript(
        scenario_path=scenario_path,
        turns=turns,
        stirs=[_parse_stir(s) for s in stirs],
        seed=seed,
        backend=_descriptor(backend, backend_url, model),
        out_path=out_path,
        thoughts=thoughts,
    )
    sys.exit(run_script(script))


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
def validate(scenario_path: str) -> None:
    """Check a scenario file; list every violation."""
    try:
        scenario = load_scenario_file(scenario_path)
    except ScenarioFormatError as exc:
        click.echo(f"invalid scenario: {exc}", err=True)
        sys.exit(EXIT_INVALID_SCENARIO)
    report = validate_scenario(scenario)
    if report:
        for violation in report:
            click.echo(violation)
        sys.exit(EXIT_INVALID_SCENARIO)
    click.echo("scenario is valid")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--port", default=8700, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="./loom-data", show_default=True, type=click.Path())
@click.option("--backend", default="mock", show_default=True,
              type=click.Choice(["mock", "http"]))
@click.option("--backend-url", default="", help="Chat-completions endpoint (http backend).")
@click.option("--model", default="", help="Model name (http backend).")
@click.option("--ui-dir", default=None, type=click.Path(),
              help="Serve a built studio UI from this directory at /ui.")
def serve(port: int, host: str, data_dir: str, backend: str,
          backend_url: str, model: str, ui_dir: str | None) -> None:
    """Start the local session service (JSON API + SSE stream)."""
    import uvicorn

    from .service import create_app

    try:
        app = create_app(data_dir, descriptor=_descriptor(backend, backend_url, model),
                         ui_dir=ui_dir)
    except ValueError as exc:
        click.echo(f"invalid backend: {exc}", err=True)
        sys.exit(EXIT_BACKEND_FAILURE)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
