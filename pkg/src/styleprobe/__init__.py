"""styleprobe: probing toolkit for authorship embeddings.

Content-masking interventions, episode retrieval evaluation (MRR),
paraphrase gating and drift analysis, and group-pooled label
discrimination (ROC / EER / AUC), with embeddings supplied by pluggable
providers.
"""

__version__ = "0.1.0"
