// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "oracles/oracles.hpp"
#include "treeseek/rng.hpp"
#include "treeseek/text.hpp"

using namespace treeseek;

TEST_SUITE("text") {
  TEST_CASE("fnv1a64 published vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  }

  TEST_CASE("fnv1a64 agrees with the reference loop on random bytes") {
    SplitMix64 rng(5);
    for (int t = 0; t < 200; ++t) {
      std::string s(rng.below(40), '\0');
      for (char& c : s) c = static_cast<char>(rng.below(256));
      CHECK(fnv1a64(s) == oracle::fnv1a64(s));
    }
  }

  TEST_CASE("seeded hashes differ from the unseeded one") {
    CHECK(fnv1a64("abc", 1) != fnv1a64("abc"));
    CHECK(fnv1a64("abc", 1) != fnv1a64("abc", 2));
  }

  TEST_CASE("content keys") {
    CHECK(content_key("") == "fnv1a64:cbf29ce484222325");
    CHECK(content_key("a").size() == std::string("fnv1a64:").size() + 16);
  }

  TEST_CASE("utf8 validation reports the first bad byte") {
    CHECK_FALSE(find_invalid_utf8("plain ascii").has_value());
    CHECK_FALSE(find_invalid_utf8("h\xc3\xa9llo").has_value());
    CHECK(find_invalid_utf8("ab\xff").value() == 2);
    CHECK(find_invalid_utf8("a\xc3").value() == 1);        // truncated sequence
    CHECK(find_invalid_utf8("\xc0\xaf").value() == 0);     // overlong
    CHECK(find_invalid_utf8("x\xed\xa0\x80").value() == 1);  // surrogate
  }

  TEST_CASE("decode_utf8 counts code points") {
    CHECK(decode_utf8("h\xc3\xa9\xe2\x82\xac").size() == 3);
  }

  TEST_CASE("truncate_utf8 never splits a code point") {
    const std::string s = "a\xe2\x82\xac" "b";  // a, euro sign (3 bytes), b
    CHECK(truncate_utf8(s, 1) == "a");
    CHECK(truncate_utf8(s, 2) == "a");
    CHECK(truncate_utf8(s, 3) == "a");
    CHECK(truncate_utf8(s, 4) == "a\xe2\x82\xac");
    CHECK(truncate_utf8(s, 100) == s);
  }

  TEST_CASE("whitespace and split helpers") {
    CHECK(strip_whitespace(" def  mean (data) :\n") == "defmean(data):");
    CHECK(split("1,5,10", ',') == std::vector<std::string>{"1", "5", "10"});
  }

  TEST_CASE("splitmix64 is reproducible and bounded") {
    SplitMix64 a(9), b(9);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    SplitMix64 r(1);
    for (int i = 0; i < 1000; ++i) {
      const double u = r.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      CHECK(r.below(7) < 7);
    }
  }
}
