// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/gradient_suite.hpp"

#include <set>

TEST_SUITE("gradients") {
  TEST_CASE("analytic gradients agree with central differences") {
    for (std::uint64_t seed : {1ULL, 2024ULL}) {
      const auto checks = fixtures::full_gradient_suite(seed);
      std::set<std::string> prefixes;
      for (const auto& c : checks) {
        INFO(c.name);
        CHECK(c.size > 0);
        CHECK(c.rel_error < 1e-4);
        prefixes.insert(c.name.substr(0, c.name.find('.')));
      }
      CHECK(prefixes.size() >= 6);
    }
  }
}
