"""Plot metric CSVs written by `ftc optimize`, `ftc consensus` or `ftc preset`.

usage: python docs/plot_metrics.py OUT.png FILE.csv [FILE.csv ...]
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(out, files):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for f in files:
        df = pd.read_csv(f)
        column = "grad_at_mean_sq" if "grad_at_mean_sq" in df else "consensus_error"
        ax.semilogy(df["iter"], df[column].clip(lower=1e-300), label=Path(f).stem)
        ax.set_ylabel(column)
    ax.set_xlabel("iteration")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


if __name__ == "__main__":
    if len(sys.argv) < 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2:])
