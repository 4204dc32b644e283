"""
Command: eval

Scores a results file against the ground truth of its cloud, prints the
report and, with ``--write``, stores it back into the results file.

Usage:
  python -m src.manage eval --results results/s3.json --cloud scenes/s3.npz
"""

from django.core.management.base import BaseCommand

from src.apps.bench.tables import eval_table
from src.apps.evaluation.services import evaluate_scene
from src.apps.files.services import (
    dump_json,
    load_cloud,
    read_results,
    results_proposals,
    write_model,
)
from src.cli.options import add_run_arguments, load_catalog, render, start_run
from src.common.exceptions import ValidationError


class Command(BaseCommand):
    help = "Evaluate a results file (AP over IoU overlaps, diagnostics)."

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument("--results", type=str, required=True, help="Results JSON.")
        parser.add_argument("--cloud", type=str, required=True, help="Cloud with ground truth.")
        parser.add_argument("--catalog", type=str, default=None, help="ClassCatalog JSON.")
        parser.add_argument(
            "--write",
            action="store_true",
            help="Store the report in the results file.",
        )
        parser.add_argument("--json", action="store_true", help="Print the report as JSON.")

    def handle(self, *args, **options):
        start_run(options)
        results = read_results(options["results"])
        record = load_cloud(options["cloud"], load_catalog(options["catalog"]))
        if not record.cloud.has_ground_truth:
            raise ValidationError(f"{options['cloud']} carries no ground truth")

        proposals = results_proposals(results, record.cloud)
        report = evaluate_scene(record.cloud, proposals, record.catalog)

        if options["write"]:
            write_model(options["results"], results.model_copy(update={"eval": report}))
        if options["json"]:
            self.stdout.write(dump_json(report.model_dump(mode="json")))
            return
        self.stdout.write(
            render(eval_table(report, title=options["results"]), color=self.stdout.isatty()),
            ending="",
        )
        if report.map is None:
            self.stdout.write(self.style.WARNING("no ground-truth instances: AP undefined"))
        else:
            self.stdout.write(
                f"mAP {report.map:.3f}  AP50 {report.ap50:.3f}  AP25 {report.ap25:.3f}"
            )
