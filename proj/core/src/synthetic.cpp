// SPDX-License-Identifier: Apache-2.0
#include "treeseek/corpus.hpp"
#include "treeseek/error.hpp"
#include "treeseek/rng.hpp"

#include <array>
#include <cstdio>
#include <string>

namespace treeseek {
namespace {

struct Template {
  std::string_view name;
  std::string_view doc;
  std::string_view code;
};

// "{n}" is replaced by a collection noun.
constexpr std::array<Template, 16> kTemplates{{
    {"average", "Compute the average of the {n}.",
     "def average_{n}({n}):\n    return sum({n}) / len({n})\n"},
    {"largest", "Return the largest entry among the {n}.",
     "def largest_{n}({n}):\n    best = {n}[0]\n    for x in {n}:\n        if x > best:\n"
     "            best = x\n    return best\n"},
    {"count_above", "Count how many {n} exceed a threshold.",
     "def count_{n}_above({n}, threshold):\n    total = 0\n    for x in {n}:\n"
     "        if x > threshold:\n            total += 1\n    return total\n"},
    {"evens", "Keep only the even {n}.",
     "def even_{n}({n}):\n    return [x for x in {n} if x % 2 == 0]\n"},
    {"reverse", "Reverse the order of the {n}.",
     "def reverse_{n}({n}):\n    return {n}[::-1]\n"},
    {"sorted", "Sort the {n} in descending order.",
     "def sort_{n}({n}):\n    return sorted({n}, reverse=True)\n"},
    {"unique", "Remove duplicate {n} while keeping their order.",
     "def unique_{n}({n}):\n    seen = set()\n    out = []\n    for x in {n}:\n"
     "        if x not in seen:\n            seen.add(x)\n            out.append(x)\n"
     "    return out\n"},
    {"join", "Join the {n} into one comma separated string.",
     "def join_{n}({n}):\n    return \", \".join(str(x) for x in {n})\n"},
    {"normalize", "Scale the {n} so that they sum to one.",
     "def normalize_{n}({n}):\n    total = float(sum({n}))\n"
     "    return [x / total for x in {n}]\n"},
    {"squares", "Sum the squares of the {n}.",
     "def sum_squares_{n}({n}):\n    acc = 0\n    for x in {n}:\n        acc += x * x\n"
     "    return acc\n"},
    {"index", "Find the position of a target among the {n}, or minus one.",
     "def find_in_{n}({n}, target):\n    for i, x in enumerate({n}):\n"
     "        if x == target:\n            return i\n    return -1\n"},
    {"histogram", "Build a dictionary counting each of the {n}.",
     "def histogram_{n}({n}):\n    counts = {}\n    for x in {n}:\n"
     "        counts[x] = counts.get(x, 0) + 1\n    return counts\n"},
    {"clip", "Clamp every one of the {n} into a lower and upper bound.",
     "def clip_{n}({n}, low, high):\n    return [min(max(x, low), high) for x in {n}]\n"},
    {"running", "Return the running totals of the {n}.",
     "def running_{n}({n}):\n    out = []\n    acc = 0\n    for x in {n}:\n"
     "        acc = acc + x\n        out.append(acc)\n    return out\n"},
    {"flatten", "Flatten nested lists of {n} into a single list.",
     "def flatten_{n}({n}):\n    flat = []\n    for group in {n}:\n"
     "        flat.extend(group)\n    return flat\n"},
    {"is_sorted", "Check whether the {n} are already in ascending order.",
     "def is_sorted_{n}({n}):\n    for a, b in zip({n}, {n}[1:]):\n        if a > b:\n"
     "            return False\n    return True\n"},
}};

constexpr std::array<std::string_view, 8> kNouns{
    "values", "prices", "scores", "weights", "items", "records", "samples", "readings"};

std::string fill(std::string_view pattern, std::string_view noun) {
  std::string out;
  out.reserve(pattern.size() + 32);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern.substr(i, 3) == "{n}") {
      out += noun;
      i += 2;
    } else {
      out.push_back(pattern[i]);
    }
  }
  return out;
}

}  // namespace

std::vector<CorpusSample> synthetic_corpus(int count, std::uint64_t seed) {
  const int capacity = static_cast<int>(kTemplates.size() * kNouns.size());
  if (count < 0 || count > capacity) {
    throw ContractViolation("synthetic corpus holds at most " + std::to_string(capacity) +
                            " samples");
  }
  std::vector<int> combos(capacity);
  for (int i = 0; i < capacity; ++i) combos[i] = i;
  SplitMix64 rng(seed);
  rng.shuffle(combos);

  std::vector<CorpusSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const auto& t = kTemplates[combos[i] % kTemplates.size()];
    const auto noun = kNouns[combos[i] / kTemplates.size()];
    char id[32];
    std::snprintf(id, sizeof id, "syn-%04d", i);
    out.push_back({id, "python", fill(t.code, noun), fill(t.doc, noun)});
  }
  return out;
}

}  // namespace treeseek
