"""
Command: ablate

Runs the suite with one stage toggled off and on.

Usage:
  python -m src.manage ablate --stage voting --out reports/ablate_voting.json
"""

from django.core.management.base import BaseCommand

from src.apps.bench.services import run_ablation
from src.apps.bench.tables import summary_table
from src.apps.files.services import write_model
from src.cli.options import add_run_arguments, load_suite, render, start_run
from src.common.types import AblationStage
from src.xlib.enum_to_env import enum_to_env


class Command(BaseCommand):
    help = "Toggle one stage (voting, local_scenes, binary) over the suite."

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument(
            "--stage",
            type=str,
            required=True,
            help=f"One of {[s.value for s in AblationStage]}.",
        )
        parser.add_argument("--suite", type=str, default=None, help="BenchSuite JSON.")
        parser.add_argument("--out", type=str, required=True, help="Report JSON path.")

    def handle(self, *args, **options):
        start_run(options)
        stage = enum_to_env(AblationStage, options["stage"])
        report = run_ablation(load_suite(options["suite"]), stage, threads=options["threads"])
        write_model(options["out"], report)
        table = summary_table(report.summary, title=f"Ablation: {stage}")
        self.stdout.write(render(table, color=self.stdout.isatty()), ending="")
        self.stdout.write(self.style.SUCCESS(f"✓ wrote {options['out']} ({len(report.rows)} rows)"))
