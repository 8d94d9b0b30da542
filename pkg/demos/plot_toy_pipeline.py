"""
End to end on a two-topic corpus
================================

Documents from two classes use disjoint vocabularies. Nested
cross-validation fits center, PCA and ICA inside every split, trains the
SVM on the resulting features, and the final model's mixing matrix is read
as weighted word lists.
"""

import numpy as np

from icadetect import evaluation, pipeline, synthetic, text
from icadetect.ica import IcaConfig

rng = np.random.default_rng(0)
texts, labels = synthetic.topic_corpus(200, rng)
docs = [text.Document(str(i), t, text.Label(l)) for i, (t, l) in enumerate(zip(texts, labels))]
counts = text.build_matrix(docs)
X = text.tfidf(counts)
y = text.label_signs(docs)
print(f"{X.shape[0]} terms x {X.shape[1]} documents")

grid = pipeline.HyperGrid(orders=(5, 10), c_values=(1.0, 10.0), sigma_factors=(1.0,),
                          gamma_factors=(1.0,), degrees=(2,))
ica = IcaConfig(seed=0, restarts=2)
report = pipeline.nested_cv(X.values, y, grid, seed=0, ica_config=ica)
print(evaluation.metrics_table(report.summary))
print("selected order:", pipeline.select_order(report))

# refit on everything and look at the components
order, param, c = pipeline.final_selection(report, "gaussian")
tm = pipeline.train_final(X.values, y, "gaussian", order, param, c, ica, grid)
assoc = evaluation.component_class_association(tm.train_features.T, y)
print(evaluation.lexicon_table(evaluation.lexicons(tm.extractor.a_hat, X.vocab, assoc, k=6)))
