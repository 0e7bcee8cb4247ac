"""Smoke test for the groundeval extension module.

Build the module first, then run from the repository root:

    cargo build -p groundeval-py
    cp target/debug/libgroundeval_py.so crates/py/python/groundeval.so
    python3 crates/py/python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import groundeval as ge

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..", ".."))
FIX = os.path.join(ROOT, "crates", "core", "tests", "fixtures")


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    assert ge.normalize("The cat, sat!") == ["cat", "sat"]
    assert ge.normalize("The cat", strip_articles=False) == ["the", "cat"]

    o = ge.bag_overlap(["a", "a", "b"], ["a", "b", "b"])
    assert o.overlap == 2 and close(o.precision, 2 / 3)
    assert ge.bag_overlap(["a", "a"], ["a"], set_overlap=True).overlap == 1

    assert ge.exact_match("The Answer.", ["answer"]) == 1.0
    assert close(ge.token_f1("paris france", ["paris"]), 2 / 3)
    assert ge.rouge_l("x y z", ["x y z"]) == 1.0
    refs = ["one two three four five"]
    assert close(ge.corpus_bleu(refs, [refs]), 100.0)
    try:
        ge.corpus_bleu(["a"], [])
    except ValueError:
        pass
    else:
        raise AssertionError("length mismatch accepted")

    k = ge.knowledge_f1("it was written by shakespeare", "shakespeare wrote it")
    assert 0 < k.f1 < 1
    pp = ge.knowledge_f1_pp("who wrote it", "it was written by shakespeare", "shakespeare wrote it")
    assert pp.f1 <= k.f1

    a = ge.lexical_alignment("where is paris", "paris is in france")
    assert close(a.recall, 2 / 3)
    assert ge.alignment_level("where is paris", "paris is in france") in ("high", "low")

    (tree,) = ge.parse_bracketed("(ROOT (S (NP (PRP It)) (VP (VBZ rains)) (. .)))")
    assert tree.label == "ROOT" and tree.leaves() == ["It", "rains", "."]
    assert ge.classify_structure("(ROOT (NP (DT a) (NN cat)))") == "fragment"

    conllu = "1\tHe\the\tPRON\tPRP\t_\t2\tnsubj\t_\t_\n2\tleft\tleave\tVERB\tVBD\t_\t0\troot\t_\t_\n"
    (sent,) = ge.parse_conllu(conllu)
    assert sent[0][:2] == (1, "He")
    assert ge.detect_pronoun(conllu)

    r = ge.chi_square_gof([883.0, 417.0], [650.0, 650.0])
    assert r.df == 1 and r.significant and r.p_value < 1e-30
    assert close(ge.chi_square_sf(2.0, 2), math.exp(-1.0), 1e-14)
    assert close(ge.majority_agreement([["a", "a", "b"], ["a", "b"]]), 50.0)

    corpus = ge.Corpus.load(
        os.path.join(FIX, "corpus", "dialogues.jsonl"),
        knowledge=os.path.join(FIX, "corpus", "knowledge.jsonl"),
        references=os.path.join(FIX, "corpus", "references.jsonl"),
    )
    assert len(corpus) == 6
    assert corpus.question("c1", 1) == "Who wrote the play Hamlet?"
    scores = corpus.score(os.path.join(FIX, "corpus", "responses.alpha.jsonl"), "alpha")
    assert close(scores["exact_match"], 100 / 6)

    phen = ge.Corpus.load(os.path.join(FIX, "phenomena", "dialogues.jsonl"))
    prof = phen.profile(
        os.path.join(FIX, "phenomena", "responses.fixture.jsonl"),
        "m",
        parses=os.path.join(FIX, "phenomena", "parses"),
    )
    assert close(prof["mean_length"], 105 / 26)

    try:
        ge.Corpus.load(os.path.join(FIX, "missing.jsonl"))
    except OSError:
        pass
    else:
        raise AssertionError("missing file accepted")

    print("smoke test ok:", ge.__version__)


if __name__ == "__main__":
    main()
