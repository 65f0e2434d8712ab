"""Command-line entry point: ``burgulence <kind> [--plan F] [--out D] ...``.

Exit status is 0 when every check of the experiment passes, 1 when any
fails and 2 when the experiment could not run (bad plan, I/O error, crash).
"""

from __future__ import annotations

import sys
import traceback
from pathlib import Path

import click

from ..errors import PlanError
from .ensembles import WORKERS_ENV, default_workers
from .plan import KINDS, build_plan, read_plan_data
from .runner import run_experiment

EXIT_INFRA = 2


def _execute(kind: str, plan_path, out, seed, workers, overrides) -> int:
    try:
        data = read_plan_data(plan_path) if plan_path else {}
        if data.get("kind", kind) != kind:
            raise PlanError(f"plan is for {data['kind']!r} but the {kind!r} subcommand was run")
        data["kind"] = kind
        if seed is not None:
            data["seed"] = seed
        plan = build_plan(data, overrides, source=str(plan_path or "<defaults>"))
        workers = workers if workers is not None else default_workers()
        out_dir = Path(out or plan.out or Path("runs") / kind)
        outcome = run_experiment(plan, out_dir, workers=workers)
    except PlanError as exc:
        click.echo(f"plan error: {exc}", err=True)
        return EXIT_INFRA
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INFRA
    except Exception:  # noqa: BLE001 - any crash is an infrastructure failure
        traceback.print_exc()
        return EXIT_INFRA
    for res in outcome.results:
        click.echo(res.line())
    if outcome.manifest["degraded"]:
        click.echo(f"degraded: {len(outcome.manifest['failures'])} member(s) failed", err=True)
    click.echo(f"wrote {out_dir / 'manifest.json'}")
    return outcome.exit_code


def _subcommand(kind: str):
    @click.command(name=kind, help=f"Run the {kind} experiment.")
    @click.option("--plan", "plan_path", type=click.Path(dir_okay=False), help="YAML plan file.")
    @click.option("--out", type=click.Path(file_okay=False), help="Output directory.")
    @click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), help="Master seed.")
    @click.option("--workers", type=click.IntRange(1), help=f"Worker processes (default ${WORKERS_ENV} or 1).")
    @click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE",
                  help="Set a plan field; dotted keys reach nested fields, e.g. noise.cutoff=8.")
    def cmd(plan_path, out, seed, workers, overrides):
        sys.exit(_execute(kind, plan_path, out, seed, workers, list(overrides)))

    return cmd


@click.group(help="Stochastic Burgers simulator and diagnostics.")
def main():
    pass


for _kind in KINDS:
    main.add_command(_subcommand(_kind))


if __name__ == "__main__":
    main()
