#include <cmath>

#include "ecbm/errors.hpp"
#include "ecbm/harness.hpp"

namespace ecbm {

namespace {

IndexList sample(std::size_t population, std::size_t count, std::mt19937_64& rng) {
  IndexList pool = all_indices(population);
  for (std::size_t i = 0; i < count; ++i) {
    const auto span = population - i;
    const auto pick = i + std::min(span - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(span)));
    std::swap(pool[i], pool[pick]);
  }
  pool.resize(count);
  return pool;
}

std::size_t count_for(double fraction, std::size_t total) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
}

}  // namespace

NoisyData inject_noise(const Dataset& d, const NoiseConfig& noise, std::uint64_t seed) {
  validate(d);
  if (!(noise.fraction >= 0.0 && noise.fraction <= 0.5)) throw ConfigError("noise fraction must lie in [0, 0.5]");
  std::mt19937_64 rng(mix_seed(seed, 200));
  NoisyData out{d, {}};
  const auto n = d.size();
  const auto k = d.num_concepts();
  switch (noise.level) {
    case EditLevel::ConceptLabel: {
      ConceptLabelEdit fix;
      for (auto cell : sample(n * k, count_for(noise.fraction, n * k), rng)) {
        const auto r = static_cast<Eigen::Index>(cell / k);
        const auto j = static_cast<Eigen::Index>(cell % k);
        const double original = d.concepts(r, j);
        out.data.concepts(r, j) = 1.0 - original;
        fix.cells.push_back({cell / k, cell % k, original});
      }
      out.correction = fix;
      break;
    }
    case EditLevel::Concept: {
      ConceptRemoval fix;
      if (noise.fraction > 0.0) {
        const auto m = std::max<std::size_t>(1, count_for(noise.fraction, k));
        if (m >= k) throw ConfigError("concept noise would corrupt every concept");
        fix.concepts = sample(k, m, rng);
        const auto rows = sample(n, count_for(noise.portion, n), rng);
        for (auto j : fix.concepts)
          for (auto r : rows) {
            auto& v = out.data.concepts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
            v = 1.0 - v;
          }
      }
      out.correction = fix;
      break;
    }
    case EditLevel::Data: {
      DataRemoval fix;
      fix.rows = sample(n, count_for(noise.fraction, n), rng);
      const auto classes = d.num_classes;
      for (auto r : fix.rows) {
        const auto shift = 1 + std::min(classes - 2, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(classes - 1)));
        out.data.labels[r] = static_cast<int>((static_cast<std::size_t>(d.labels[r]) + shift) % classes);
      }
      out.correction = fix;
      break;
    }
  }
  return out;
}

}  // namespace ecbm
