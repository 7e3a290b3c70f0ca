// Generated by tests/oracle/bleu_reference.py; do not edit by hand.
#pragma once

#include <string>
#include <vector>

struct BleuFixture {
  std::string candidate;
  std::vector<std::string> references;
  double expected;
};

inline const std::vector<BleuFixture>& bleu_fixtures() {
  static const std::vector<BleuFixture> fixtures = {
      {"the quick brown fox jumps over the lazy dog", {"the quick brown fox jumps over the lazy dog"}, 1},
      {"the cat sat", {"the cat sat down"}, 0.71653131057378927},
      {"aaa bbb", {"ccc ddd"}, 0},
      {"", {"a b"}, 0},
      {"the small cat sat on the mat", {"the cat sat on the mat"}, 0.70347115030070251},
      {"the the the cat", {"the cat", "the big cat"}, 0.45180100180492239},
      {"a a a a", {"a a"}, 0.45180100180492239},
      {"hello", {"hello world"}, 0.36787944117144233},
      {"b c d", {"x y z w", "b c d"}, 1},
      {"caf\xc3\xa9 au lait", {"cafe\xcc\x81 au lait"}, 1},
      {"Ten p\xc5\x99\xc3\xadklad je velmi jednoduch\xc3\xbd", {"Ten p\xc5\x99\xc3\xadklad je opravdu velmi jednoduch\xc3\xbd"}, 0.49473859088183875},
      {"one two", {"one two three four five six"}, 0.1353352832366127},
      {"one two three four five six seven", {"one two three"}, 0.33265096878635064},
      {"x y z", {"a b c d", "p q"}, 0},
      {"hello , world !", {"hello , world ."}, 0.65803700647624619},
      {"the answer is 42", {"the answer is 42 indeed", "answer 42"}, 0.77880078307140488},
      {"alpha\xe3\x80\x80beta\xe3\x80\x80gamma", {"alpha beta gamma delta"}, 0.71653131057378927},
      {"a b c d e f g h", {"a b c x e f g h"}, 0.59460355750136051},
      {"machine translation is hard to evaluate automatically", {"evaluating machine translation automatically is hard", "machine translation is difficult to score by machine"}, 0.42509008525376152},
      {"to be or not to be that is the question", {"to be or not to be this is the question"}, 0.69992710231611666},
  };
  return fixtures;
}
