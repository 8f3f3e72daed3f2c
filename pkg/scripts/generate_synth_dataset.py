"""
Write a synthetic FSDS dataset for configs that use source = "file"
"""
import argparse
import logging
import os
import sys

# Add the repository root to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.scenes.fsds import save_dataset
from src.scenes.synth import synth_image_dataset, synth_label_dataset
from src.utils.helpers import STREAM_SCENE, derive_rng

logger = logging.getLogger(__name__)


def main():
    """Generate and save one dataset"""
    parser = argparse.ArgumentParser(description="Generate a synthetic FSDS dataset")
    parser.add_argument("output", type=str, help="Target .fsds path")
    parser.add_argument("--kind", choices=["label", "image"], default="label", help="Vector or [1, H, W] samples")
    parser.add_argument("--samples", type=int, default=2000, help="Number of samples")
    parser.add_argument("--classes", type=int, default=10, help="Number of classes")
    parser.add_argument("--dim", type=int, default=20, help="Feature dimension (label kind)")
    parser.add_argument("--size", type=int, default=8, help="Image side length (image kind)")
    parser.add_argument("--class-sep", type=float, default=3.0, help="Class-centre distance (label kind)")
    parser.add_argument("--noise", type=float, default=1.0, help="Gaussian noise scale")
    parser.add_argument("--seed", type=int, default=0, help="Root seed")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO)
    rng = derive_rng(args.seed, STREAM_SCENE)
    if args.kind == "image":
        ds = synth_image_dataset(args.samples, args.classes, args.size, args.size, rng, noise=args.noise)
    else:
        ds = synth_label_dataset(args.samples, args.classes, args.dim, args.class_sep, rng, noise=args.noise)

    save_dataset(ds, args.output)
    logger.info(f"✅ wrote {len(ds)} samples, shape {ds.sample_shape}, {ds.num_classes} classes to {args.output}")


if __name__ == "__main__":
    main()
