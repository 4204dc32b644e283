"""
Command: bench

Seeded comparison of binary vs distance clustering over the suite's noise
levels, plus r_d × theta_d and K sweeps.

Usage:
  python -m src.manage bench --suite configs/bench_suite.json --out reports/bench.json
"""

from django.core.management.base import BaseCommand

from src.apps.bench.services import run_suite
from src.apps.bench.tables import summary_table, sweep_table
from src.apps.files.services import write_model
from src.cli.options import add_run_arguments, load_suite, render, start_run


class Command(BaseCommand):
    help = "Run the benchmark suite and write a JSON report."

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument("--suite", type=str, default=None, help="BenchSuite JSON.")
        parser.add_argument("--out", type=str, required=True, help="Report JSON path.")
        parser.add_argument(
            "--no-sweeps",
            action="store_true",
            dest="no_sweeps",
            help="Skip the parameter sweeps.",
        )

    def handle(self, *args, **options):
        start_run(options)
        suite = load_suite(options["suite"])
        if options["no_sweeps"]:
            suite = suite.model_copy(update={"sweeps": False})

        report = run_suite(suite, threads=options["threads"])
        write_model(options["out"], report)

        tables = [summary_table(report.summary, title=f"Suite '{suite.name}'")]
        tables += [sweep_table(pts, title=f"Sweep {name}") for name, pts in report.sweeps.items()]
        self.stdout.write(render(*tables, color=self.stdout.isatty()), ending="")
        self.stdout.write(self.style.SUCCESS(f"✓ wrote {options['out']} ({len(report.rows)} rows)"))
