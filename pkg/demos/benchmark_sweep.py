"""Small end-to-end benchmark sweep with a CSV table and an SVG plot.

Two surfaces, two methods, two label ratios, twenty episodes per cell.
Artifacts land in demo_out/ next to this script. Rerunning reproduces
the CSV byte for byte apart from the wall-time column.
"""

import os

from spectral_icl.harness import SweepConfig, emit_plot, run_sweep
from spectral_icl.manifolds import ManifoldSpec


def main():
    out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "demo_out")
    os.makedirs(out, exist_ok=True)

    cfg = SweepConfig(
        manifolds=[
            ("sphere", ManifoldSpec("sphere")),
            ("cylinder", ManifoldSpec("cylinder")),
        ],
        methods=["eig-icl", "eig-lr"],
        label_ratios=[0.1, 0.3],
        n=100,
        episodes_per_cell=20,
        base_seed=42,
    )

    csv_path = os.path.join(out, "sweep.csv")
    result = run_sweep(cfg, out_csv=csv_path, workers=4)

    print("manifold   method    ratio   mean acc   std acc   mean loss")
    for row in result.rows:
        print(f"{row['manifold']:10s} {row['method']:9s} {row['label_ratio']:.2f}"
              f"   {row['mean_accuracy']:.4f}    {row['std_accuracy']:.4f}"
              f"    {row['mean_loss']:.4f}")

    svg_path = os.path.join(out, "sweep.svg")
    emit_plot(result.rows, svg_path)
    print(f"\nwrote {csv_path}")
    print(f"wrote {svg_path}")


if __name__ == "__main__":
    main()
