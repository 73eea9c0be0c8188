#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pathrec/corpus.hpp"
#include "pathrec/rng.hpp"

namespace pathrec {

// Planted-pattern corpus: every session is [anchor, noise, target, target2]
// where anchor and both targets come from the user's home brand (targets
// follow the brand's ring order from the anchor) and the noise item comes
// from another brand. Picking the anchor instead of the last item is what
// makes the brand path to the next target learnable.
struct PlantedSpec {
  int n_brands = 20;
  int products_per_brand = 10;
  int n_users = 50;
  int sessions_per_user = 8;
  uint64_t seed = 7;
};

namespace detail {

inline std::string padded(const std::string& prefix, int value, int width) {
  std::ostringstream os;
  os << prefix << std::setw(width) << std::setfill('0') << value;
  return os.str();
}

}  // namespace detail

inline std::string planted_product(const PlantedSpec& spec, int brand,
                                   int slot) {
  return detail::padded("p", brand * spec.products_per_brand + slot, 3);
}

// Writes interactions.tsv and metadata.jsonl into dir.
inline void write_planted_corpus(const std::string& dir,
                                 const PlantedSpec& spec) {
  if (spec.n_brands < 2 || spec.products_per_brand < 3 || spec.n_users < 1 ||
      spec.sessions_per_user < 1) {
    throw std::invalid_argument("planted corpus spec too small");
  }
  Rng rng(spec.seed);

  std::ofstream meta(dir + "/metadata.jsonl");
  if (!meta) throw std::runtime_error("cannot write " + dir + "/metadata.jsonl");
  for (int b = 0; b < spec.n_brands; ++b) {
    for (int s = 0; s < spec.products_per_brand; ++s) {
      meta << "{\"id\": \"" << planted_product(spec, b, s)
           << "\", \"brand\": \"" << detail::padded("b", b, 2) << "\"}\n";
    }
  }

  std::ofstream inter(dir + "/interactions.tsv");
  if (!inter) {
    throw std::runtime_error("cannot write " + dir + "/interactions.tsv");
  }
  for (int u = 0; u < spec.n_users; ++u) {
    int home = u % spec.n_brands;
    std::string user = detail::padded("u", u, 2);
    for (int j = 0; j < spec.sessions_per_user; ++j) {
      // Deterministic anchor cycling keeps every product frequent enough to
      // survive the min-count filter.
      int slot = (u + j) % spec.products_per_brand;
      std::string anchor = planted_product(spec, home, slot);
      std::string target = planted_product(
          spec, home, (slot + 1) % spec.products_per_brand);
      std::string target2 = planted_product(
          spec, home, (slot + 2) % spec.products_per_brand);
      int other = static_cast<int>(
          rng.next_below(static_cast<uint64_t>(spec.n_brands - 1)));
      if (other >= home) ++other;
      std::string noise = planted_product(
          spec, other,
          static_cast<int>(rng.next_below(
              static_cast<uint64_t>(spec.products_per_brand))));
      int64_t day = static_cast<int64_t>(j) * kSecondsPerDay;
      const std::string* items[] = {&anchor, &noise, &target, &target2};
      for (int k = 0; k < 4; ++k) {
        inter << user << '\t' << *items[k] << '\t' << (day + k) << '\n';
      }
    }
  }
}

}  // namespace pathrec
