#include <chrono>
#include <cmath>

#include "ecbm/errors.hpp"
#include "ecbm/harness.hpp"
#include "ecbm/losses.hpp"
#include "ecbm/oracle.hpp"

namespace ecbm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Metrics evaluate(const Cbm& m, const Dataset& test) {
  const auto pred = predict(m, test.inputs);
  return Metrics{macro_f1(pred, test.labels, test.num_classes), accuracy(pred, test.labels)};
}

std::size_t request_size(const EditRequest& r) {
  if (const auto* e = std::get_if<ConceptLabelEdit>(&r)) return e->cells.size();
  if (const auto* m = std::get_if<ConceptRemoval>(&r)) return m->concepts.size();
  return std::get<DataRemoval>(r).rows.size();
}

EditRequest slice(const EditRequest& r, std::size_t begin, std::size_t end) {
  if (const auto* e = std::get_if<ConceptLabelEdit>(&r))
    return ConceptLabelEdit{{e->cells.begin() + static_cast<std::ptrdiff_t>(begin),
                             e->cells.begin() + static_cast<std::ptrdiff_t>(end)}};
  if (const auto* m = std::get_if<ConceptRemoval>(&r))
    return ConceptRemoval{{m->concepts.begin() + static_cast<std::ptrdiff_t>(begin),
                           m->concepts.begin() + static_cast<std::ptrdiff_t>(end)}};
  const auto& rows = std::get<DataRemoval>(r).rows;
  return DataRemoval{{rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end)}};
}

// Position of each original index among the survivors, npos when already removed.
IndexList positions(const IndexList& survivors, std::size_t total) {
  IndexList pos(total, npos);
  for (std::size_t p = 0; p < survivors.size(); ++p) pos[survivors[p]] = p;
  return pos;
}

IndexList remap(const IndexList& original, const IndexList& pos) {
  IndexList out;
  for (auto i : original) {
    if (pos[i] == npos) throw ConfigError("index removed twice during periodic editing");
    out.push_back(pos[i]);
  }
  return out;
}

IndexList drop_positions(const IndexList& survivors, const IndexList& removed) {
  IndexList keep;
  for (auto p : complement(removed, survivors.size())) keep.push_back(survivors[p]);
  return keep;
}

std::size_t round_size(const ScenarioConfig& c, const Dataset& d) {
  switch (c.noise.level) {
    case EditLevel::ConceptLabel:
      return static_cast<std::size_t>(std::llround(c.round_fraction * static_cast<double>(d.size() * d.num_concepts())));
    case EditLevel::Concept:
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c.round_fraction * static_cast<double>(d.num_concepts()))));
    case EditLevel::Data:
      return static_cast<std::size_t>(std::llround(c.round_fraction * static_cast<double>(d.size())));
  }
  return 0;
}

}  // namespace

RunRecord run_edit_vs_retrain(const ScenarioConfig& c) {
  validate(c);
  RunRecord rec;
  rec.kind = "edit_vs_retrain";
  rec.config = c;
  const auto spec = cbm_spec(c);
  const auto opts = edit_options(c);
  for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
    const std::uint64_t seed = c.seed + rep;
    try {
      const auto data = synth_dataset(c, seed);
      const auto tc = train_config(c, seed);
      RepetitionRecord r;
      r.seed = seed;
      r.original = evaluate(train_cbm(data.train, spec, tc).model, data.test);
      const auto noisy = inject_noise(data.train, c.noise, seed);
      const auto noisy_model = train_cbm(noisy.data, spec, tc).model;
      r.noisy = evaluate(noisy_model, data.test);
      auto t0 = Clock::now();
      const auto edited = apply_edit(noisy_model, noisy.data, noisy.correction, opts);
      r.edit_seconds = seconds_since(t0);
      t0 = Clock::now();
      const auto retrained = retrain_after_edit(noisy.data, noisy.correction, spec, tc);
      r.retrain_seconds = seconds_since(t0);
      r.edited = evaluate(edited.model, data.test);
      r.retrained = evaluate(retrained.model, data.test);
      const auto cmp = compare(edited.model, retrained.model, data.test);
      r.agreement = cmp.agreement;
      r.concept_relative = cmp.concept_relative;
      r.label_relative = cmp.label_relative;
      rec.repetitions.push_back(r);
    } catch (const NumericalError& e) {
      rec.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  return rec;
}

RunRecord run_periodic(const ScenarioConfig& c, std::size_t rounds) {
  validate(c);
  RunRecord rec;
  rec.kind = "periodic";
  rec.config = c;
  rec.config.rounds = rounds;
  const auto spec = cbm_spec(c);
  const auto opts = edit_options(c);
  for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
    const std::uint64_t seed = c.seed + rep;
    PeriodicRecord per;
    per.seed = seed;
    if (rounds == 0) {
      rec.periodic.push_back(per);
      continue;
    }
    const auto data = synth_dataset(c, seed);
    const auto noisy = inject_noise(data.train, c.noise, seed);
    const auto step = round_size(c, data.train);
    if (step == 0 || rounds * step > request_size(noisy.correction))
      throw ConfigError("rounds times the per-round increment exceeds the injected noise");
    const auto tc = train_config(c, seed);
    try {
      Cbm current = train_cbm(noisy.data, spec, tc).model;
      Dataset current_data = noisy.data;
      IndexList survivors =
          all_indices(c.noise.level == EditLevel::Concept ? noisy.data.num_concepts() : noisy.data.size());
      const auto total = survivors.size();
      for (std::size_t r = 0; r < rounds; ++r) {
        EditRequest chunk = slice(noisy.correction, r * step, (r + 1) * step);
        const auto pos = positions(survivors, total);
        if (auto* m = std::get_if<ConceptRemoval>(&chunk)) m->concepts = remap(m->concepts, pos);
        if (auto* d = std::get_if<DataRemoval>(&chunk)) d->rows = remap(d->rows, pos);
        RoundRecord rr;
        rr.round = r + 1;
        auto t0 = Clock::now();
        auto edited = apply_edit(current, current_data, chunk, opts);
        rr.edit_seconds = seconds_since(t0);
        current = std::move(edited.model);
        current_data = apply_request(current_data, chunk);
        if (const auto* m = std::get_if<ConceptRemoval>(&chunk)) survivors = drop_positions(survivors, m->concepts);
        if (const auto* d = std::get_if<DataRemoval>(&chunk)) survivors = drop_positions(survivors, d->rows);
        t0 = Clock::now();
        const auto retrained = retrain_after_edit(noisy.data, slice(noisy.correction, 0, (r + 1) * step), spec, tc);
        rr.retrain_seconds = seconds_since(t0);
        rr.edited = evaluate(current, data.test);
        rr.retrained = evaluate(retrained.model, data.test);
        per.rounds.push_back(rr);
      }
    } catch (const NumericalError& e) {
      rec.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
    }
    rec.periodic.push_back(per);
  }
  return rec;
}

RunRecord run_importance(const ScenarioConfig& c, std::size_t top_t, std::size_t bottom_t) {
  validate(c);
  if (top_t + bottom_t > c.k) throw ConfigError("top_t + bottom_t exceeds the number of concepts");
  if (std::max(top_t, bottom_t) >= c.k) throw ConfigError("cannot remove every concept");
  RunRecord rec;
  rec.kind = "importance";
  rec.config = c;
  rec.config.top_t = top_t;
  rec.config.bottom_t = bottom_t;
  const auto spec = cbm_spec(c);
  const auto opts = edit_options(c);
  for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
    const std::uint64_t seed = c.seed + rep;
    try {
      const auto data = synth_dataset(c, seed);
      const auto tc = train_config(c, seed);
      const Cbm original = train_cbm(data.train, spec, tc).model;
      ImportanceRecord im;
      im.seed = seed;
      im.original = evaluate(original, data.test);
      im.ranking = concept_importance(original, data.train, opts, c.importance_metric, &data.train);
      for (std::size_t i = 0; i < top_t; ++i) im.top.push_back(im.ranking[i].concept_id);
      for (std::size_t i = 0; i < bottom_t; ++i) im.bottom.push_back(im.ranking[im.ranking.size() - 1 - i].concept_id);
      auto perturb = [&](const IndexList& set, Metrics& edited, Metrics& retrained) {
        if (set.empty()) {
          edited = retrained = im.original;
          return;
        }
        const ConceptRemoval req{set};
        edited = evaluate(apply_edit(original, data.train, req, opts).model, data.test);
        retrained = evaluate(retrain_after_edit(data.train, req, spec, tc).model, data.test);
      };
      perturb(im.top, im.top_edited, im.top_retrained);
      perturb(im.bottom, im.bottom_edited, im.bottom_retrained);
      rec.importance.push_back(im);
    } catch (const NumericalError& e) {
      rec.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  return rec;
}

}  // namespace ecbm
