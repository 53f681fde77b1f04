"""From a raw session log to an emission table, heatmap and dominant path.

Writes ``demo_log.csv``, ``demo_model.json`` and ``demo_heatmap.svg`` into a
temporary directory and prints the text report.
"""
# %%
import tempfile
from pathlib import Path

from tactichmm import ActionAlphabet, PlantedSpec, TrainConfig, build_report, paper_planted_model, sample, train
from tactichmm import ingest, modelfile
from tactichmm.report import render_heatmap

out = Path(tempfile.mkdtemp(prefix="tactichmm-"))

# %%
# A synthetic log in the CSV layout expected by the ingester.
corpus, _ = sample(PlantedSpec(paper_planted_model(), 120, (40, 120), seed=3))
log_path = out / "demo_log.csv"
with open(log_path, "w", newline="") as fh:
    ingest.write_csv(corpus, fh)
print(log_path.read_text().splitlines()[:4])

# %%
# Read it back, pinning the alphabet order Q, V, S, W, T.
events = ingest.read_log(log_path)
sessions = ingest.encode(events, ActionAlphabet.paper())
fit = train(sessions, 5, TrainConfig(restarts=5, seed=0))
modelfile.save(fit.model, out / "demo_model.json", {"seed": 0})

# %%
report = build_report(fit.model, threshold=0.05)
print(report.to_text())
render_heatmap(fit.model.transition, out / "demo_heatmap.svg")
print("files in", out, sorted(p.name for p in out.iterdir()))
