# %% [markdown]
# # ROC curves as data
#
# The package writes curves as plain CSV (`threshold,fpr,tpr`) rather than
# plots. Here they are rendered with matplotlib if it is available.

# %%
import io

import numpy as np

from icucet.featurize import featurize_cohort
from icucet.ingest import parse_event_blocks, parse_stays, select_cohort
from icucet.labeler import LABELS, label_cohort
from icucet.learners import fit_model
from icucet.metrics import evaluate, write_roc
from icucet.splitter import stratified_shuffle_split
from icucet.synth import SynthConfig, generate_cohort

stays_csv, events_csv, _ = generate_cohort(SynthConfig(n_stays=3000, signal_strength=1.5))
cohort = select_cohort(parse_stays(io.BytesIO(stays_csv)), parse_event_blocks(io.BytesIO(events_csv)))
_, X = featurize_cohort(cohort)
_, Y = label_cohort(cohort)
sp = stratified_shuffle_split(Y, 0.2, seed=1)
model = fit_model("gbt", X[sp.train_indices], Y[sp.train_indices], {"n_estimators": 30})
metrics, curves, _ = evaluate(model, X[sp.test_indices], Y[sp.test_indices])

# %%
buf = io.StringIO()
write_roc(buf, curves[2])
print("\n".join(buf.getvalue().splitlines()[:6]))

# %%
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(5, 5))
    for lab, c, auc in zip(LABELS, curves, metrics.roc_auc):
        ax.plot(c.fpr, c.tpr, label=f"{lab} ({auc:.2f})")
    ax.plot([0, 1], [0, 1], "k:", lw=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.legend()
    plt.show()
else:
    print(np.round(metrics.roc_auc, 3))
