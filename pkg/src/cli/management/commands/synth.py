"""
Command: synth

Generates a seeded synthetic scene and writes it as a cloud file (.npz) or
ASCII PLY. The predicted channels hold the oracle predictor's output:
ground truth corrupted by the noise model (exact when no noise is given).

Usage:
  python -m src.manage synth --seed 3 --out scenes/s3.npz
  python -m src.manage synth --config configs/scene.json --noise configs/noise.json \
      --seed 3 --out scenes/s3.npz
"""

from pathlib import Path

from django.core.management.base import BaseCommand

from src.apps.files.services import load_model, write_cloud, write_model, write_ply
from src.apps.synth.schemas import NoiseModel, SceneConfig
from src.apps.synth.services import apply_noise, generate_scene, provenance, synthetic_catalog
from src.cli.options import add_run_arguments, start_run


class Command(BaseCommand):
    help = "Generate a synthetic labeled scene."

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument("--config", type=str, default=None, help="SceneConfig JSON.")
        parser.add_argument("--noise", type=str, default=None, help="NoiseModel JSON.")
        parser.add_argument("--seed", type=int, default=None, help="Scene seed (overrides config).")
        parser.add_argument(
            "--noise-seed",
            type=int,
            default=None,
            help="Noise seed (default: the scene seed).",
        )
        parser.add_argument("--out", type=str, required=True, help="Output .npz or .ply path.")
        parser.add_argument(
            "--catalog-out",
            type=str,
            default=None,
            help="Also write the class catalog JSON (needed to segment PLY files).",
        )

    def handle(self, *args, **options):
        start_run(options)
        scene = SceneConfig()
        if options["config"]:
            scene = load_model(Path(options["config"]), SceneConfig)
        if options["seed"] is not None:
            scene = scene.model_copy(update={"seed": options["seed"]})
        noise = load_model(Path(options["noise"]), NoiseModel) if options["noise"] else NoiseModel()
        noise_seed = options["noise_seed"] if options["noise_seed"] is not None else scene.seed
        noise = noise.model_copy(update={"seed": noise_seed})

        clean = generate_scene(scene)
        catalog = synthetic_catalog(scene, clean)
        cloud = clean if noise.is_exact else apply_noise(clean, noise, catalog)

        out = Path(options["out"])
        if out.suffix.lower() == ".ply":
            write_ply(out, cloud)
        else:
            write_cloud(out, cloud, catalog, provenance=provenance(scene, noise))
        if options["catalog_out"]:
            write_model(options["catalog_out"], catalog)

        self.stdout.write(
            self.style.SUCCESS(
                f"✓ wrote {out} ({cloud.n_points} points, "
                f"{int(clean.gt_instance.max()) + 1} instances, seed {scene.seed})"
            )
        )
