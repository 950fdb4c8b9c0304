"""Synthetic stand-in cohorts with the Coimbra column layout.

These are simulated patients for offline runs and tests, not real data.
Marginals are rough lognormal/normal shapes in plausible clinical ranges;
HOMA is derived from glucose and insulin with the usual
``glucose * insulin / 405`` formula.

The diagnosis is assigned by ranking a latent risk that mixes the mock
confounder likelihoods (``confounder_weight``) with a clinical term in
resistin and glucose plus noise; the top ``n_cancer`` patients are labelled
Cancer.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset, Label, PatientRecord
from .llm_features import CONFOUNDERS, mock_likelihood


def synthetic_cohort(
    n_cancer: int = 64,
    n_healthy: int = 52,
    seed: int = 0,
    confounder_weight: float = 0.85,
    noise: float = 0.03,
) -> Dataset:
    if n_cancer < 1 or n_healthy < 1:
        raise ValueError("both classes need at least one patient")
    if not 0.0 <= confounder_weight <= 1.0:
        raise ValueError("confounder_weight must lie in [0, 1]")
    n = n_cancer + n_healthy
    rng = np.random.default_rng(seed)
    age = rng.uniform(24, 89, n).round(0)
    bmi = np.clip(rng.normal(27.5, 5.0, n), 16.0, 45.0).round(2)
    glucose = np.clip(rng.lognormal(np.log(93), 0.2, n), 60, 250).round(0)
    insulin = rng.lognormal(np.log(7.0), 0.7, n).round(3)
    homa = (glucose * insulin / 405.0).round(6)
    leptin = rng.lognormal(np.log(20.0), 0.7, n).round(4)
    adiponectin = rng.lognormal(np.log(8.0), 0.5, n).round(4)
    resistin = rng.lognormal(np.log(11.0), 0.6, n).round(4)
    mcp1 = rng.lognormal(np.log(450.0), 0.5, n).round(3)

    draft = [
        PatientRecord(i, *map(float, vals), label=Label.HEALTHY)
        for i, vals in enumerate(zip(age, bmi, glucose, insulin, homa, leptin, adiponectin, resistin, mcp1))
    ]
    confounder = np.array([np.mean([mock_likelihood(p, c) for c in CONFOUNDERS]) for p in draft])
    clinical = 1.0 / (1.0 + np.exp(-(np.log(resistin / 11.0) + np.log(glucose / 93.0) * 2.0)))
    latent = confounder_weight * confounder + (1.0 - confounder_weight) * clinical + rng.normal(0.0, noise, n)
    cancer = np.zeros(n, dtype=bool)
    cancer[np.argsort(-latent, kind="stable")[:n_cancer]] = True

    records = tuple(
        PatientRecord(p.id, *p.features(), label=Label.CANCER if cancer[p.id] else Label.HEALTHY) for p in draft
    )
    return Dataset(records)
