"""Accuracy against SNR and the compute price of each variant.

Prints the calibrated accuracy curves for both scenarios and the
per-sample cost table, then saves one figure per scenario.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cetsim import ALL_VARIANTS, Scenario, default_table, sensing_accuracy
from cetsim.calibration import compute_cost

table = default_table()
snrs = np.arange(-10, 31, 5)

for scenario in Scenario:
    print(f"\n{scenario.label} (scenario {scenario.value})")
    print("variant     " + "".join(f"{s:>7}" for s in snrs))
    for v in ALL_VARIANTS:
        print(f"{v.to_text():<12}" + "".join(f"{sensing_accuracy(v, scenario, s, table):7.3f}" for s in snrs))

print(f"\nchance level with {table.quality.num_beams} beams: {table.chance:.4f}")

print("\nvariant       GFLOPs  mem MB  infer ms")
for v in ALL_VARIANTS:
    c = compute_cost(v, table)
    print(f"{v.to_text():<12} {c.flops_g:7.2f} {c.memory_mb:7.1f} {c.inference_ms:9.2f}")

out = Path("demo_output")
out.mkdir(exist_ok=True)
fine = np.linspace(-10, 30, 81)
for scenario in Scenario:
    fig, ax = plt.subplots()
    for v in ALL_VARIANTS:
        ax.plot(fine, [sensing_accuracy(v, scenario, s, table) for s in fine], label=v.to_text())
    ax.set(xlabel="SNR (dB)", ylabel="Top-1 beam accuracy", title=scenario.label)
    ax.legend(fontsize="small")
    fig.savefig(out / f"curves_{scenario.label.lower()}.png", dpi=100)
    plt.close(fig)
print(f"\nfigures written to {out}/")
