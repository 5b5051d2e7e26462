"""Command line figure rendering: aggregate CSV in, vector image out."""
from __future__ import annotations

import sys

import click

from .data import SchemaError
from .figure import FigureSpec, render

EXIT_INPUT_ERROR = 2


@click.command(name="plot")
@click.option("--csv", "csv_path", type=click.Path(exists=True), required=True,
              help="Aggregate percentile CSV produced by the simulator.")
@click.option("--metric", type=click.Choice(["prr", "pir"]), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Output image path (extension selects the format, e.g. .svg/.pdf).")
@click.option("--no-band", is_flag=True, help="Draw medians only, without p5-p95 bands.")
@click.option("--title", default=None)
def plot(csv_path, metric, out_path, no_band, title) -> None:
    """Render median lines with p5-p95 percentile bands per group."""
    spec = FigureSpec(
        metric=metric,
        output_path=out_path,
        percentile_band=not no_band,
        title=title,
    )
    render(csv_path, spec)
    click.echo(f"wrote {out_path}")


def main() -> None:
    try:
        plot.main(standalone_mode=False)
    except (SchemaError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(130)


if __name__ == "__main__":
    main()
