"""Regenerate the bundled corpus and lexicon under ``src/tieqviet/data``.

Sources (both Apache-2.0 wheels, fetched with ``pip download --no-deps``):

* ``underthesea`` -- the word-segmented VLSP-2013 POS test output, which is
  detokenized back into plain sentences, and the Viet74K dictionary.
* ``wordfreq`` -- the small Vietnamese frequency list, used for lexicon counts.

Usage::

    pip download --no-deps underthesea==9.5.0 wordfreq==3.1.1 -d /tmp/wheels
    python scripts/build_data.py /tmp/wheels
"""
import argparse
import gzip
import re
import sys
import unicodedata
import zipfile
from pathlib import Path

import msgpack

OUT = Path(__file__).resolve().parents[1] / "src" / "tieqviet" / "data"
POS_TEST = "underthesea/pipeline/pos_tag/models/pos_crf_vlsp2013_20230303/test_output.txt"
VIET74K = "underthesea/corpus/data/Viet74K.txt"
WORDFREQ_VI = "wordfreq/data/small_vi.msgpack.gz"

N_SENTENCES = 600

_TONED = {
    "a": "aáàảãạ", "ă": "ăắằẳẵặ", "â": "âấầẩẫậ", "e": "eéèẻẽẹ", "ê": "êếềểễệ",
    "i": "iíìỉĩị", "o": "oóòỏõọ", "ô": "ôốồổỗộ", "ơ": "ơớờởỡợ", "u": "uúùủũụ",
    "ư": "ưứừửữự", "y": "yýỳỷỹỵ",
}
VOWELS = "".join(_TONED.values())
FRONT = _TONED["i"] + _TONED["e"] + _TONED["ê"] + _TONED["y"]
TONE_MARKED = "".join(v[1:] for v in _TONED.values())
ONSETS = sorted(
    "b c ch d đ g gh gi h k kh l m n ng ngh nh p ph qu r s t th tr v x".split(),
    key=len, reverse=True,
)
_SYLLABLE = re.compile(
    r"^(?P<onset>%s)?(?P<nucleus>[%s]{1,3})(?P<coda>ch|ng|nh|c|m|n|p|t)?$"
    % ("|".join(ONSETS), VOWELS)
)


def native_syllable(word):
    """True when ``word`` follows native Vietnamese spelling conventions."""
    if sum(ch in TONE_MARKED for ch in word) > 1:
        return False
    # "gì", "gìn": the gi onset merged with a toned i nucleus
    if len(word) >= 2 and word[0] == "g" and word[1] in _TONED["i"][1:]:
        word = "gi" + word[1:]
        return bool(re.fullmatch(r"gi[%s]{1,2}(ch|ng|nh|c|m|n|p|t)?" % VOWELS, word))
    m = _SYLLABLE.match(word)
    if not m:
        return False
    onset, nucleus = m.group("onset") or "", m.group("nucleus")
    front = nucleus[0] in FRONT
    if onset in ("k", "gh", "ngh") and not front:
        return False
    if onset in ("c", "g", "ng") and front:
        return False
    return True


def detokenize(tokens):
    s = " ".join(tokens)
    s = re.sub(r" ([.,;:!?)\]…%”])", r"\1", s)
    s = re.sub(r"([(\[“]) ", r"\1", s)
    return s


def read_sentences(wheel):
    with zipfile.ZipFile(wheel) as z:
        text = z.read(POS_TEST).decode("utf-8")
    sents, cur = [], []
    for line in text.splitlines():
        if not line.strip():
            if cur:
                sents.append(cur)
                cur = []
            continue
        cur.append(line.split("\t")[0])
    if cur:
        sents.append(cur)
    return [unicodedata.normalize("NFC", detokenize(t)) for t in sents]


def eligible(sentence):
    return (
        len(sentence) >= 30
        and sentence[0].isalpha()
        and sentence[0].isupper()
        and "..." not in sentence
    )


def read_wordfreq(wheel):
    with zipfile.ZipFile(wheel) as z:
        buckets = msgpack.unpackb(gzip.decompress(z.read(WORDFREQ_VI)), raw=False)
    counts = {}
    for cb, words in enumerate(buckets[1:]):
        # bucket index is frequency in centibels below 1; scale to a per-1e8-token count
        count = max(1, round(10 ** (8 - cb / 100)))
        for w in words:
            counts.setdefault(w, count)
    return counts


def read_syllables(wheel):
    with zipfile.ZipFile(wheel) as z:
        text = z.read(VIET74K).decode("utf-8")
    syllables = set()
    for line in text.splitlines():
        for tok in re.split(r"[\s\-]+", line.strip()):
            tok = unicodedata.normalize("NFC", tok.lower())
            if tok and tok.isalpha():
                syllables.add(tok)
    return syllables


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("wheels", type=Path, help="directory holding the downloaded wheels")
    args = parser.parse_args(argv)
    ut = next(args.wheels.glob("underthesea-*.whl"))
    wf = next(args.wheels.glob("wordfreq-*.whl"))

    pool = []
    seen = set()
    for s in read_sentences(ut):
        if eligible(s) and s not in seen:
            seen.add(s)
            pool.append(s)
    step = len(pool) / N_SENTENCES
    corpus = [pool[int(i * step)] for i in range(N_SENTENCES)]
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "corpus_vi.txt").write_text("\n".join(corpus) + "\n", encoding="utf-8")

    freq = read_wordfreq(wf)
    lexicon = sorted(w for w in read_syllables(ut) if native_syllable(w))
    with open(OUT / "lexicon_vi.tsv", "w", encoding="utf-8") as fh:
        for w in lexicon:
            fh.write(f"{w}\t{freq.get(w, 1)}\n")
    print(f"{len(pool)} eligible sentences, wrote {len(corpus)}; lexicon {len(lexicon)} words",
          file=sys.stderr)


if __name__ == "__main__":
    main()
