#include <json.hpp>

#include "ecbm/errors.hpp"
#include "ecbm/losses.hpp"
#include "ecbm/oracle.hpp"

namespace ecbm {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty()) throw DimensionError("prediction and truth lengths differ");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, std::size_t num_classes) {
  if (pred.size() != truth.size() || pred.empty()) throw DimensionError("prediction and truth lengths differ");
  std::vector<double> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = static_cast<std::size_t>(pred[i]);
    const auto t = static_cast<std::size_t>(truth[i]);
    if (p >= num_classes || t >= num_classes) throw DimensionError("class index out of range");
    if (p == t) {
      tp[p] += 1;
    } else {
      fp[p] += 1;
      fn[t] += 1;
    }
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;
    sum += 2 * tp[c] / denom;
    ++present;
  }
  return sum / static_cast<double>(present);
}

ComparisonReport compare(const Cbm& a, const Cbm& b, const Dataset& test) {
  validate(a);
  validate(b);
  validate(test);
  const Vector ga = a.g.parameters(), gb = b.g.parameters();
  const Vector fa = a.f.parameters(), fb = b.f.parameters();
  if (ga.size() != gb.size() || fa.size() != fb.size()) throw DimensionError("models have different shapes");
  if (a.g.input_dim() != test.input_dim() || a.f.num_classes() != test.num_classes)
    throw DimensionError("models do not match the test data");
  ComparisonReport r;
  r.concept_distance = (ga - gb).norm();
  r.label_distance = (fa - fb).norm();
  r.concept_relative = r.concept_distance / std::max(gb.norm(), 1e-300);
  r.label_relative = r.label_distance / std::max(fb.norm(), 1e-300);
  const auto pa = predict(a, test.inputs);
  const auto pb = predict(b, test.inputs);
  r.accuracy_a = accuracy(pa, test.labels);
  r.accuracy_b = accuracy(pb, test.labels);
  r.f1_a = macro_f1(pa, test.labels, test.num_classes);
  r.f1_b = macro_f1(pb, test.labels, test.num_classes);
  r.agreement = accuracy(pa, pb);
  r.test_rows = test.size();
  return r;
}

std::string report_to_json(const ComparisonReport& r) {
  nlohmann::json j = {{"concept_distance", r.concept_distance},
                      {"concept_relative", r.concept_relative},
                      {"label_distance", r.label_distance},
                      {"label_relative", r.label_relative},
                      {"accuracy_a", r.accuracy_a},
                      {"accuracy_b", r.accuracy_b},
                      {"f1_a", r.f1_a},
                      {"f1_b", r.f1_b},
                      {"agreement", r.agreement},
                      {"test_rows", r.test_rows}};
  return j.dump(2) + "\n";
}

}  // namespace ecbm
