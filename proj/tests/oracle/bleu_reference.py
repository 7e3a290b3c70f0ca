#!/usr/bin/env python3
"""Independent sentence-BLEU reference used to freeze expected test values.

Implements the engine's documented scheme from scratch (no shared code):
NFC + Unicode-whitespace tokenization, clipped modified n-gram precision,
add-one smoothing on orders > 1, brevity penalty against the closest
reference length (ties -> shorter), geometric mean over orders 1..4.

Run to regenerate tests/bleu_fixtures.h:
    python3 tests/oracle/bleu_reference.py > tests/bleu_fixtures.h
"""

import math
import unicodedata


def tokenize(text):
    return unicodedata.normalize("NFC", text).split()


def ngram_counts(tokens, n):
    counts = {}
    for i in range(len(tokens) - n + 1):
        key = tuple(tokens[i : i + n])
        counts[key] = counts.get(key, 0) + 1
    return counts


def bleu(candidate, references, max_n=4):
    if not references:
        raise ValueError("no references")
    for ref in references:
        if not tokenize(ref):
            raise ValueError("empty reference")
    cand = tokenize(candidate)
    if not cand:
        return 0.0

    ref_tokens = [tokenize(r) for r in references]
    closest = len(ref_tokens[0])
    for toks in ref_tokens[1:]:
        diff = abs(len(toks) - len(cand))
        best = abs(closest - len(cand))
        if diff < best or (diff == best and len(toks) < closest):
            closest = len(toks)

    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = ngram_counts(cand, n)
        max_ref = {}
        for toks in ref_tokens:
            for gram, count in ngram_counts(toks, n).items():
                max_ref[gram] = max(max_ref.get(gram, 0), count)
        clipped = sum(min(c, max_ref.get(g, 0)) for g, c in cand_counts.items())
        total = sum(cand_counts.values())
        if n > 1:
            p = (clipped + 1) / (total + 1)
        else:
            if total == 0 or clipped == 0:
                return 0.0
            p = clipped / total
        log_sum += math.log(p)

    brevity = 1.0
    if len(cand) < closest:
        brevity = math.exp(1.0 - closest / len(cand))
    return brevity * math.exp(log_sum / max_n)


FIXTURES = [
    # (candidate, [references])
    ("the quick brown fox jumps over the lazy dog",
     ["the quick brown fox jumps over the lazy dog"]),
    ("the cat sat", ["the cat sat down"]),
    ("aaa bbb", ["ccc ddd"]),
    ("", ["a b"]),
    ("the small cat sat on the mat", ["the cat sat on the mat"]),
    ("the the the cat", ["the cat", "the big cat"]),
    ("a a a a", ["a a"]),
    ("hello", ["hello world"]),
    ("b c d", ["x y z w", "b c d"]),
    ("café au lait", ["café au lait"]),
    ("Ten příklad je velmi jednoduchý",
     ["Ten příklad je opravdu velmi jednoduchý"]),
    ("one two", ["one two three four five six"]),
    ("one two three four five six seven", ["one two three"]),
    ("x y z", ["a b c d", "p q"]),
    ("hello , world !", ["hello , world ."]),
    ("the answer is 42", ["the answer is 42 indeed", "answer 42"]),
    ("alpha　beta　gamma", ["alpha beta gamma delta"]),
    ("a b c d e f g h", ["a b c x e f g h"]),
    ("machine translation is hard to evaluate automatically",
     ["evaluating machine translation automatically is hard",
      "machine translation is difficult to score by machine"]),
    ("to be or not to be that is the question",
     ["to be or not to be this is the question"]),
]


def cpp_string(s):
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ord(ch) < 0x20:
            out.append("\\x%02x" % ord(ch))
        elif ord(ch) < 0x7F:
            out.append(ch)
        else:
            out.append("".join("\\x%02x" % b for b in ch.encode("utf-8")))
    return '"' + "".join(out) + '"'


def main():
    print("// Generated by tests/oracle/bleu_reference.py; do not edit by hand.")
    print("#pragma once")
    print()
    print("#include <string>")
    print("#include <vector>")
    print()
    print("struct BleuFixture {")
    print("  std::string candidate;")
    print("  std::vector<std::string> references;")
    print("  double expected;")
    print("};")
    print()
    print("inline const std::vector<BleuFixture>& bleu_fixtures() {")
    print("  static const std::vector<BleuFixture> fixtures = {")
    for cand, refs in FIXTURES:
        value = bleu(cand, refs)
        refs_cpp = ", ".join(cpp_string(r) for r in refs)
        print("      {%s, {%s}, %.17g}," % (cpp_string(cand), refs_cpp, value))
    print("  };")
    print("  return fixtures;")
    print("}")


if __name__ == "__main__":
    main()
