"""
Rich tables for the console output of eval / bench / ablate.
"""

from collections.abc import Sequence

from rich.table import Table

from src.apps.bench.schemas import SummaryRow, SweepPoint
from src.apps.evaluation.schemas import EvalReport


def _fmt(value: float | None, digits: int = 3) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def eval_table(report: EvalReport, title: str = "Evaluation") -> Table:
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("Class", justify="left")
    table.add_column("AP", justify="right", width=7)
    table.add_column("AP50", justify="right", width=7)
    table.add_column("AP25", justify="right", width=7)
    table.add_column("Prec50", justify="right", width=7)
    table.add_column("Rec50", justify="right", width=7)
    table.add_column("#GT", justify="right", width=5)
    table.add_column("#Pred", justify="right", width=6)
    for row in report.per_class:
        table.add_row(
            row.name,
            _fmt(row.ap),
            _fmt(row.ap50),
            _fmt(row.ap25),
            _fmt(row.precision50),
            _fmt(row.recall50),
            str(row.n_gt),
            str(row.n_pred),
        )
    table.add_section()
    table.add_row(
        "[bold]mean[/bold]",
        _fmt(report.map),
        _fmt(report.ap50),
        _fmt(report.ap25),
        _fmt(report.mprec50),
        _fmt(report.mrec50),
        str(report.n_gt),
        str(report.n_pred),
    )
    return table


def summary_table(summary: Sequence[SummaryRow], title: str) -> Table:
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("Variant", justify="left")
    table.add_column("Noise", justify="left")
    table.add_column("Scenes", justify="right", width=6)
    table.add_column("mAP", justify="right", width=7)
    table.add_column("AP50", justify="right", width=7)
    table.add_column("AP25", justify="right", width=7)
    table.add_column("Coverage", justify="right", width=8)
    for row in summary:
        table.add_row(
            row.variant,
            row.noise,
            str(row.n_scenes),
            _fmt(row.mean_map),
            _fmt(row.mean_ap50),
            _fmt(row.mean_ap25),
            _fmt(row.mean_coverage),
        )
    return table


def sweep_table(points: Sequence[SweepPoint], title: str) -> Table:
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("r_d", justify="right", width=6)
    table.add_column("θ_d", justify="right", width=5)
    table.add_column("K", justify="right", width=4)
    table.add_column("mAP", justify="right", width=7)
    table.add_column("AP50", justify="right", width=7)
    for point in points:
        table.add_row(
            _fmt(point.r_d, 2),
            str(point.theta_d),
            str(point.k),
            _fmt(point.mean_map),
            _fmt(point.mean_ap50),
        )
    return table
