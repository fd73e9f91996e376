#!/usr/bin/env python3
"""Smoke test for the lexforge_py extension module.

Builds the extension with cargo (unless LEXFORGE_SKIP_BUILD is set), imports
it, and drives a miniature end-to-end run on the bundled toy fixture:
ontology -> graph -> SCCs -> seeds -> kappa -> expansion -> TF-IDF ->
classification -> evaluation -> full pipeline.

Usage: python3 python/smoke_test.py
"""

import math
import os
import shutil
import subprocess
import sys
import tempfile

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURE = os.path.join(REPO, "crates", "core", "fixtures", "toy")


def build_and_import():
    if not os.environ.get("LEXFORGE_SKIP_BUILD"):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "lexforge-py"],
            cwd=REPO,
            check=True,
        )
    staging = tempfile.mkdtemp(prefix="lexforge_py_")
    shutil.copy(
        os.path.join(REPO, "target", "release", "liblexforge_py.so"),
        os.path.join(staging, "lexforge_py.so"),
    )
    sys.path.insert(0, staging)
    import lexforge_py

    return lexforge_py


def main():
    lf = build_and_import()
    print(f"lexforge_py {lf.__version__}")

    # Ontology.
    ontology = lf.Ontology.load(os.path.join(FIXTURE, "ontology.jsonl"))
    assert len(ontology) == 44, len(ontology)
    by_pos, by_relation = ontology.stats()
    assert by_pos["adjective"] == 27
    assert by_relation["antonym"] == 18
    pos, senses, gloss, _examples = ontology.synset("adj.good.01")
    assert pos == "adjective" and "good" in senses and "pleasing" in gloss

    # Graph, SCCs, seeds.
    graph = lf.PolarityGraph.build(ontology, relations=["antonym"], symmetrize=True)
    assert graph.node_count() == 44
    partition = graph.kosaraju()
    assert len(partition) == 27
    assert partition.histogram() == {"1": 15, "2-5": 12}
    seeds = partition.select_seeds(min_size=2)
    assert len(seeds) == 12 and seeds[0] == "adj.bad.01"
    covered, uncovered = graph.check_seed_coverage(seeds, min_size=2)
    assert uncovered == [] and len(covered) == 29

    # Fleiss' kappa: perfect agreement and a known fixture value.
    assert lf.fleiss_kappa([["positive", "negative"], ["positive", "negative"]]) == 1.0
    kappa = lf.fleiss_kappa(
        [
            ["positive", "negative", "positive", "neutral"],
            ["positive", "negative", "negative", "neutral"],
        ]
    )
    assert abs(kappa - 13.0 / 21.0) < 1e-9, kappa

    # PMI and orientation.
    counts = lf.NGramCounts.load(
        os.path.join(FIXTURE, "unigrams.tsv"), os.path.join(FIXTURE, "bigrams.tsv")
    )
    value = lf.pmi("superb", "good", counts)
    assert abs(value - math.log2(5 * 10000 / (25 * 200))) < 1e-9
    assert lf.so_pmi("superb", counts) > 0
    assert lf.so_pmi("filthy", counts) < 0
    assert lf.so_pmi("unseen-token", counts) is None
    assert lf.implied_label("positive", "antonym") == "negative"
    assert lf.implied_label("negative", "hypernym") == "negative"

    # Expansion: the antonym chain flips signs round by round.
    expanded = lf.expand(
        ontology, {"adj.bright.01": "positive"}, case=3, algorithm="default"
    )
    assert expanded["adj.dark.01"] == ("negative", 1, "relation-rule")
    assert expanded["adj.light.02"] == ("positive", 2, "relation-rule")
    with_pmi = lf.expand(
        ontology, {"adj.bright.01": "positive"}, case=3, algorithm="pmi", counts=counts
    )
    assert with_pmi["adj.light.02"] == ("negative", 2, "pmi")

    # Tokenization and preprocessing.
    assert lf.tokenize("A b. C") == [["A", "b"], ["C"]]
    tokens = lf.preprocess(
        "the goodness of moving water",
        stemmer_rules=os.path.join(FIXTURE, "stemmer_rules.tsv"),
        tagger_lexicon=os.path.join(FIXTURE, "tagger_lexicon.tsv"),
    )
    assert "good" in tokens  # goodness -> good via the ness rule
    assert "moving" not in tokens  # tagged verb, filtered out

    # TF-IDF + classifiers.
    docs = [lf.tokenize(ontology.document_text(i))[0] for i in ontology.ids()]
    vectorizer = lf.Vectorizer(docs)
    vec = vectorizer.vectorize(["pleasing", "quality"])
    norm = math.sqrt(sum(w * w for _, w in vec))
    assert abs(norm - 1.0) < 1e-9

    train_tokens = [
        (["pleasing", "admirable", "delight"], "positive"),
        (["unpleasant", "inferior", "distress"], "negative"),
        (["object", "mineral", "plant"], "neutral"),
    ]
    knn = lf.KnnClassifier(k=1, metric="cosine-distance")
    knn.fit(
        [vectorizer.vectorize(t) for t, _ in train_tokens],
        [l for _, l in train_tokens],
    )
    assert knn.predict(vectorizer.vectorize(["pleasing", "delight"])) == "positive"
    centroid = lf.CentroidClassifier(similarity="cosine")
    centroid.fit(
        [vectorizer.vectorize(t) for t, _ in train_tokens],
        [l for _, l in train_tokens],
    )
    assert centroid.predict(vectorizer.vectorize(["unpleasant"])) == "negative"

    # Evaluation.
    accuracy, macro_f, per_category, confusion = lf.evaluate_labels(
        {"a": "positive", "b": "negative", "c": "neutral"},
        {"a": "positive", "b": "negative", "c": "neutral"},
    )
    assert accuracy == 1.0 and macro_f == 1.0
    assert sum(sum(row) for row in confusion) == 3
    assert per_category["positive"] == (1.0, 1.0, 1.0)

    # Full pipeline from a generated config.
    with tempfile.TemporaryDirectory(prefix="lexforge_run_") as tmp:
        config_path = os.path.join(tmp, "project.toml")
        out_dir = os.path.join(tmp, "out")
        with open(config_path, "w") as f:
            f.write(
                f"""
[paths]
ontology = "{FIXTURE}/ontology.jsonl"
unigrams = "{FIXTURE}/unigrams.tsv"
bigrams = "{FIXTURE}/bigrams.tsv"
output_dir = "{out_dir}"

[annotation]
seed_sheets = ["{FIXTURE}/seed_annotator_a.tsv", "{FIXTURE}/seed_annotator_b.tsv"]
seed_tiebreak = "{FIXTURE}/seed_tiebreak.tsv"
gold_sheets = ["{FIXTURE}/gold_annotator_a.tsv", "{FIXTURE}/gold_annotator_b.tsv"]
gold_tiebreak = "{FIXTURE}/gold_tiebreak.tsv"

[preprocess]
stemmer_rules = "{FIXTURE}/stemmer_rules.tsv"
tagger_lexicon = "{FIXTURE}/tagger_lexicon.tsv"

[classify]
folds = 5
knn_k = [1, 3, 5]
"""
            )
        ok, problems = lf.validate_config(config_path)
        assert ok, problems
        result = lf.run_pipeline(config_path)
        assert result.completed, result.message
        assert result.selected_dataset.startswith("Data-")
        assert os.path.exists(result.lexicon_path)
        with open(result.lexicon_path) as f:
            assert len(f.readlines()) == 45  # header + 44 synsets

    print("smoke test passed")


if __name__ == "__main__":
    main()
