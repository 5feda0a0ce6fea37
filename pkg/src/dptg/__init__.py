"""Differentially private text anonymization toolkit.

Word-level embedding perturbation with per-word privacy budgets, an
exponential-mechanism view of temperature-controlled softmax sampling,
and an evaluation harness for authorship attacks, sentiment retention,
and language degradation.
"""

__version__ = "0.1.0"
