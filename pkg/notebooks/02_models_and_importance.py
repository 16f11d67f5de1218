# %% [markdown]
# # Four model families on one split
#
# Multi-label prediction is turned into a 16-class problem (one class per
# label combination). Every family sees the same stratified 80/20 split.

# %%
import io
import time

import numpy as np

from icucet.featurize import featurize_cohort
from icucet.ingest import parse_event_blocks, parse_stays, select_cohort
from icucet.labeler import LABELS, label_cohort
from icucet.learners import fit_model
from icucet.metrics import evaluate, permutation_importance
from icucet.splitter import stratified_shuffle_split
from icucet.synth import SynthConfig, generate_cohort

stays_csv, events_csv, _ = generate_cohort(SynthConfig(n_stays=4000, signal_strength=2.0))
cohort = select_cohort(parse_stays(io.BytesIO(stays_csv)), parse_event_blocks(io.BytesIO(events_csv)))
_, X = featurize_cohort(cohort)
_, Y = label_cohort(cohort)
split = stratified_shuffle_split(Y, 0.2, seed=42)
Xtr, Ytr = X[split.train_indices], Y[split.train_indices]
Xte, Yte = X[split.test_indices], Y[split.test_indices]
print("prevalence gaps", np.round(Ytr.mean(axis=0) - Yte.mean(axis=0), 4))

# %% [markdown]
# Smaller ensembles than the defaults keep this quick; pass `None` as the
# params to get the full-size configurations.

# %%
profiles = {"logreg": {}, "forest": {"n_estimators": 50}, "gbt": {"n_estimators": 50}, "mlp": {}}
models = {}
for fam, params in profiles.items():
    t = time.perf_counter()
    models[fam] = fit_model(fam, Xtr, Ytr, params, seed=42)
    m, _, _ = evaluate(models[fam], Xte, Yte)
    print(f"{fam:>7} {time.perf_counter() - t:5.1f}s  F1 {np.round(m.f1, 2)}  AUC {np.round(m.roc_auc, 2)}")

# %% [markdown]
# Permutation importance: how much per-label F1 drops when one feature is
# shuffled. Each label should lean on the feature its generator shifted.

# %%
rep = permutation_importance(models["gbt"], Xte, Yte, repeats=3, seed=42)
for lab in LABELS:
    top = rep.ranking(lab)[:3]
    i = LABELS.index(lab)
    print(f"{lab:>12}: " + ", ".join(f"{f} {rep.mean[i, rep.features.index(f)]:.3f}" for f in top))
