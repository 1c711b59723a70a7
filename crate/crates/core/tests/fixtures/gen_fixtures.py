#!/usr/bin/env python3
"""Regenerate the synthetic treebanks and tagger corpora in this directory.

The language is a toy head-final SOV grammar with transliterated Tamil-like
stems and case/tense suffixes. Output is deterministic for a given seed.

    python3 gen_fixtures.py
"""

import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

NOUN_CASES = [
    ("", "Case=Nom|Number=Sing"),
    ("ai", "Case=Acc|Number=Sing"),
    ("ukku", "Case=Dat|Number=Sing"),
    ("il", "Case=Loc|Number=Sing"),
    ("udan", "Case=Com|Number=Sing"),
    ("kal", "Case=Nom|Number=Plur"),
]
VERB_FINITE = [
    ("kiraan", "Gender=Masc|Mood=Ind|Number=Sing|Person=3|Tense=Pres"),
    ("kiraal", "Gender=Fem|Mood=Ind|Number=Sing|Person=3|Tense=Pres"),
    ("thaan", "Gender=Masc|Mood=Ind|Number=Sing|Person=3|Tense=Past"),
    ("thaal", "Gender=Fem|Mood=Ind|Number=Sing|Person=3|Tense=Past"),
]
CONVERB = ("thu", "VerbForm=Conv")
ADJ_SUFFIX = "iya"
ADV_SUFFIX = "aaga"

PRONOUNS = [
    ("avan", "Case=Nom|Gender=Masc|Number=Sing|Person=3"),
    ("aval", "Case=Nom|Gender=Fem|Number=Sing|Person=3"),
    ("naan", "Case=Nom|Number=Sing|Person=1"),
]

CONSONANTS = "kgcjtdnpbmyrlvsh"
VOWELS = ["a", "i", "u", "e", "o", "aa", "ii", "uu"]


def stem(rng, syllables):
    return "".join(rng.choice(CONSONANTS) + rng.choice(VOWELS) for _ in range(syllables))


def fresh_stems(rng, n, taken):
    out = []
    while len(out) < n:
        s = stem(rng, rng.choice([2, 3]))
        if s not in taken:
            taken.add(s)
            out.append(s)
    return out


class Word:
    def __init__(self, form, lemma, upos, xpos, feats):
        self.form, self.lemma, self.upos, self.xpos, self.feats = form, lemma, upos, xpos, feats
        self.head = None
        self.deprel = None


def noun(rng, nouns, case=None):
    suffix, feats = case or rng.choice(NOUN_CASES)
    s = rng.choice(nouns)
    return Word(s + suffix, s, "NOUN", "NN", feats)


def sentence(rng, lex):
    """A head-final clause; returns words with heads as word objects."""
    words = []
    verb_stem = rng.choice(lex["verbs"])
    suffix, feats = rng.choice(VERB_FINITE)
    root = Word(verb_stem + suffix, verb_stem, "VERB", "VF", feats)
    root.deprel = "root"

    def attach(w, head, rel):
        w.head, w.deprel = head, rel
        words.append(w)

    if rng.random() < 0.3:
        adv = rng.choice(lex["advs"])
        attach(Word(adv + ADV_SUFFIX, adv, "ADV", "RB", ""), root, "advmod")
    if rng.random() < 0.5:
        p, f = rng.choice(PRONOUNS)
        attach(Word(p, p, "PRON", "PRP", f), root, "nsubj")
    else:
        subj = noun(rng, lex["nouns"], NOUN_CASES[0])
        if rng.random() < 0.4:
            a = rng.choice(lex["adjs"])
            attach(Word(a + ADJ_SUFFIX, a, "ADJ", "JJ", ""), subj, "amod")
        attach(subj, root, "nsubj")
    if rng.random() < 0.5:
        suffix, feats = rng.choice(NOUN_CASES[2:5])
        attach(noun(rng, lex["nouns"], (suffix, feats)), root, "obl")
    clause_head = root
    if rng.random() < 0.35:
        v = rng.choice(lex["verbs"])
        conv = Word(v + CONVERB[0], v, "VERB", "VNAV", CONVERB[1])
        conv.head, conv.deprel = root, "advcl"
        clause_head = conv
    if rng.random() < 0.7:
        obj = noun(rng, lex["nouns"], NOUN_CASES[1])
        if rng.random() < 0.4:
            a = rng.choice(lex["adjs"])
            attach(Word(a + ADJ_SUFFIX, a, "ADJ", "JJ", ""), obj, "amod")
        attach(obj, clause_head, "obj")
    if clause_head is not root:
        words.append(clause_head)
    words.append(root)
    if rng.random() < 0.85:
        attach(Word(".", ".", "PUNCT", "DOT", ""), root, "punct")
    return words


def flat(words):
    """Every word attached straight to the root; re-attached words become dep."""
    root = next(w for w in words if w.deprel == "root")
    out = []
    for w in words:
        c = Word(w.form, w.lemma, w.upos, w.xpos, w.feats)
        if w is root:
            c.head, c.deprel = None, "root"
        elif w.head is root:
            c.head, c.deprel = root, w.deprel
        else:
            c.head, c.deprel = root, "dep"
        out.append(c)
    # heads still point at the original root object
    return out, root


def conllu(sentences, sent_prefix, treebank_id=None, text=True):
    out = []
    for i, item in enumerate(sentences):
        words, root = item if isinstance(item, tuple) else (item, None)
        index = {id(w): k + 1 for k, w in enumerate(words)}
        if root is not None:
            index[id(root)] = next(k + 1 for k, w in enumerate(words) if w.deprel == "root")
        out.append("# sent_id = %s-%d" % (sent_prefix, i + 1))
        if treebank_id:
            out.append("# treebank_id = %s" % treebank_id)
        if text:
            out.append("# text = " + " ".join(w.form for w in words))
        for k, w in enumerate(words):
            head = "0" if w.deprel == "root" else str(index[id(w.head)])
            out.append("\t".join([
                str(k + 1), w.form, w.lemma, w.upos, w.xpos, w.feats or "_",
                head, w.deprel, "_", "_",
            ]))
        out.append("")
    return "\n".join(out) + "\n"


def tagged(sentences, sent_prefix):
    """Tagger corpus: only FORM, LEMMA, UPOS."""
    out = []
    for i, words in enumerate(sentences):
        out.append("# sent_id = %s-%d" % (sent_prefix, i + 1))
        for k, w in enumerate(words):
            out.append("\t".join([str(k + 1), w.form, w.lemma, w.upos, "_", "_", "_", "_", "_", "_"]))
        out.append("")
    return "\n".join(out) + "\n"


def lexicon(rng, taken, nouns, verbs, adjs, advs):
    return {
        "nouns": fresh_stems(rng, nouns, taken),
        "verbs": fresh_stems(rng, verbs, taken),
        "adjs": fresh_stems(rng, adjs, taken),
        "advs": fresh_stems(rng, advs, taken),
    }


def write(rel, text):
    path = os.path.join(HERE, rel)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(text)


def main():
    rng = random.Random(20210304)
    taken = set(p for p, _ in PRONOUNS)

    lex = lexicon(rng, taken, 12, 8, 4, 3)
    write("treebanks/tb50.conllu", conllu([sentence(rng, lex) for _ in range(50)], "tb50"))

    small = lexicon(rng, taken, 10, 6, 3, 2)
    write("treebanks/tb20.conllu", conllu([sentence(rng, small) for _ in range(20)], "tb20"))

    conflict = [sentence(rng, small) for _ in range(20)]
    write("treebanks/conflict_a.conllu", conllu(conflict, "conflict", "tb_a"))
    write("treebanks/conflict_b.conllu", conllu([flat(s) for s in conflict], "conflict", "tb_b"))

    toy = lexicon(rng, taken, 6, 4, 2, 2)
    write("tagger/toy_unambiguous.conllu", tagged([sentence(rng, toy) for _ in range(15)], "toy"))

    train_lex = lexicon(rng, taken, 30, 20, 8, 6)
    write("tagger/suffix_train.conllu", tagged([sentence(rng, train_lex) for _ in range(150)], "train"))
    heldout_lex = lexicon(rng, taken, 30, 20, 8, 6)
    heldout, tokens = [], 0
    while tokens < 200:
        s = sentence(rng, heldout_lex)
        if tokens + len(s) > 200:
            continue
        heldout.append(s)
        tokens += len(s)
        if tokens == 199:
            # no sentence is one word long
            tokens -= len(heldout.pop())
    write("tagger/suffix_heldout.conllu", tagged(heldout, "heldout"))


if __name__ == "__main__":
    main()
