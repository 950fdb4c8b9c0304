"""Loading a cohort and looking at it.

Point COIMBRA_CSV at the public UCI file (dataR2.csv) to use the real data;
otherwise a synthetic cohort with the same layout is written and loaded.
"""
import os
import tempfile
from pathlib import Path

from llmconfound import load_dataset, summarize, synthetic_cohort

path = os.environ.get("COIMBRA_CSV")
if path is None:
    path = Path(tempfile.mkdtemp()) / "synthetic.csv"
    synthetic_cohort(seed=0).to_csv(path)
    print(f"COIMBRA_CSV not set; using a synthetic cohort at {path}")

ds = load_dataset(path)

# Classification 1 -> Healthy, 2 -> Cancer (UCI encoding)
print(len(ds), "patients:", ds.n_cancer, "cancer,", ds.n_healthy, "healthy")
print(ds.records[0])

summary = summarize(ds)
print(summary.to_text())

# the same numbers as JSON, for scripts
print(summary.to_json()[:200], "...")

# validation fails fast, with a location
from llmconfound import DatasetError
from llmconfound.dataset import parse_dataset

bad = Path(path).read_text().replace(",1\n", ",0\n", 1)
try:
    parse_dataset(bad)
except DatasetError as err:
    print("rejected:", err)
