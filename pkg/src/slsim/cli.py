"""Command line entry points: simulate, sweep, aggregate, validate."""
from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click
import yaml

from . import engine
from .config import load_config
from .errors import ConfigError, SlsimError
from .metrics import (
    aggregate_run_rows,
    read_run_csv,
    write_aggregate_csv,
    write_run_csv,
)

EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def _parse_overrides(pairs: tuple[str, ...]) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        out[key.strip()] = value.strip()
    return out


def _parse_int_list(text: str) -> list[int]:
    """Accept '1..20' ranges or comma lists like '10,50,90'."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _write_manifest(out_dir: Path, resolved, run_ids: list[str]) -> None:
    manifest = {
        "config": resolved.to_nested(),
        "provenance": {k: v.value for k, v in resolved.provenance.items()},
        "runs": run_ids,
    }
    (out_dir / "manifest.yaml").write_text(yaml.safe_dump(manifest, sort_keys=True))


@click.group()
def cli() -> None:
    """Slot-level NR sidelink platooning simulator."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--set", "sets", multiple=True, help="Override a config key: key=value.")
def simulate(config_path, seed, out_dir, sets) -> None:
    """Run one simulation and write its per-run CSV plus a manifest."""
    overrides = _parse_overrides(sets)
    if seed is not None:
        overrides["seed"] = str(seed)
    resolved = load_config(config_path, overrides)
    cfg = resolved.to_sim_config()
    result = engine.run(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_run_csv(out / f"{result.run_id}.csv", result)
    _write_manifest(out, resolved, [result.run_id])
    click.echo(f"wrote {out / (result.run_id + '.csv')}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seeds", required=True, help="Seed list: 'a..b' or comma separated.")
@click.option("--group-c", "group_c", required=True, help="Group C counts, comma separated.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--parallel", type=int, default=1, show_default=True)
@click.option("--set", "sets", multiple=True)
def sweep(config_path, seeds, group_c, out_dir, parallel, sets) -> None:
    """Run the (group C count x seed) product and write one CSV per run."""
    resolved = load_config(config_path, _parse_overrides(sets))
    cfg = resolved.to_sim_config()
    seed_list = _parse_int_list(seeds)
    counts = _parse_int_list(group_c)
    results = engine.sweep(cfg, counts, seed_list, parallel=parallel)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run_ids = []
    for key in sorted(results):
        res = results[key]
        write_run_csv(out / f"{res.run_id}.csv", res)
        run_ids.append(res.run_id)
    _write_manifest(out, resolved, run_ids)
    click.echo(f"wrote {len(run_ids)} runs to {out}")


@cli.command()
@click.option(
    "--runs",
    "runs_dir",
    type=click.Path(exists=True, file_okay=False),
    required=True,
    help="Directory of per-run CSVs.",
)
@click.option("--out", "out_path", type=click.Path(), required=True)
def aggregate(runs_dir, out_path) -> None:
    """Pool per-run CSVs into a p5/p50/p95 percentile CSV."""
    rows: list[dict] = []
    paths = sorted(Path(runs_dir).glob("*.csv"))
    if not paths:
        raise ConfigError(f"no run CSVs found under {runs_dir}")
    for p in paths:
        rows.extend(read_run_csv(p))
    write_aggregate_csv(out_path, aggregate_run_rows(rows))
    click.echo(f"wrote {out_path}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--set", "sets", multiple=True)
def validate(config_path, sets) -> None:
    """Check a configuration without running anything."""
    load_config(config_path, _parse_overrides(sets))
    click.echo("config ok")


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(130)
    except SlsimError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME_ERROR)
    except Exception as exc:  # noqa: BLE001
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME_ERROR)


if __name__ == "__main__":
    main()
