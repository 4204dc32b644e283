"""
Command: segment

Runs the segmentation pipeline on a cloud file and writes a results file.
When the cloud carries ground truth the EvalReport is embedded too.

Usage:
  python -m src.manage segment --cloud scenes/s3.npz --out results/s3.json
  python -m src.manage segment --cloud scenes/s3.ply --catalog catalog.json \
      --mode distance --no-voting --out results/s3.json
"""

from django.core.management.base import BaseCommand

from src.apps.evaluation.services import evaluate_scene
from src.apps.files.services import build_results, load_cloud, write_model
from src.apps.pipeline.services import segment
from src.cli.options import (
    add_pipeline_arguments,
    add_run_arguments,
    load_catalog,
    pipeline_config,
    start_run,
)


class Command(BaseCommand):
    help = "Segment a cloud into scored instance proposals."

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument("--cloud", type=str, required=True, help="Cloud file (.npz or .ply).")
        parser.add_argument("--catalog", type=str, default=None, help="ClassCatalog JSON.")
        parser.add_argument("--out", type=str, required=True, help="Results JSON path.")
        parser.add_argument(
            "--no-eval",
            action="store_true",
            dest="no_eval",
            help="Do not embed the EvalReport even if ground truth is present.",
        )
        add_pipeline_arguments(parser)

    def handle(self, *args, **options):
        start_run(options)
        config = pipeline_config(options)
        record = load_cloud(options["cloud"], load_catalog(options["catalog"]))
        result = segment(record.cloud, record.catalog, config, scene_id=options["cloud"])

        report = None
        if record.cloud.has_ground_truth and not options["no_eval"]:
            report = evaluate_scene(record.cloud, result.proposals, record.catalog)

        results = build_results(
            cloud_path=options["cloud"],
            cloud=record.cloud,
            catalog=record.catalog,
            config=config,
            result=result,
            report=report,
        )
        write_model(options["out"], results)
        summary = f"{len(result.proposals)} instances"
        if report is not None and report.map is not None:
            summary += f", mAP {report.map:.3f}"
        self.stdout.write(self.style.SUCCESS(f"✓ wrote {options['out']} ({summary})"))
