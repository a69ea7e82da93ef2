#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ecbm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexList = std::vector<std::size_t>;

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

enum class Activation { Tanh, Identity };
enum class ConceptLink { SigmoidBce, Mse };
enum class LabelLoss { SoftmaxCe, Mse };

std::string_view to_string(Activation a);
std::string_view to_string(ConceptLink l);
std::string_view to_string(LabelLoss l);
Activation parse_activation(std::string_view s);
ConceptLink parse_concept_link(std::string_view s);
LabelLoss parse_label_loss(std::string_view s);

struct Dataset {
  RowMatrix inputs;    // n x d_i
  RowMatrix concepts;  // n x k
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::vector<std::string> concept_names;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(inputs.cols()); }
  std::size_t num_concepts() const { return static_cast<std::size_t>(concepts.cols()); }
};

// Throws DimensionError on inconsistent shapes or out-of-range labels.
void validate(const Dataset& d);

IndexList all_indices(std::size_t n);
// Sorted indices in [0, n) that are not in `removed`.
IndexList complement(const IndexList& removed, std::size_t n);
// Sorts, deduplicates and range-checks an index set.
IndexList normalize_indices(IndexList idx, std::size_t n, std::string_view what);

Dataset select_rows(const Dataset& d, const IndexList& rows);
Dataset drop_rows(const Dataset& d, const IndexList& rows);
Dataset drop_concepts(const Dataset& d, const IndexList& concepts);

struct DenseLayer {
  RowMatrix weight;  // fan_out x fan_in
  Vector bias;       // fan_out
  Activation activation = Activation::Identity;

  std::size_t fan_in() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t fan_out() const { return static_cast<std::size_t>(weight.rows()); }
};

// Weight block (row-major) followed by the bias block, layer by layer.
struct LayerSlot {
  std::size_t weight_offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t bias_offset = npos;

  bool has_bias() const { return bias_offset != npos; }
  std::size_t weight_index(std::size_t r, std::size_t c) const { return weight_offset + r * cols + c; }
};

struct ParamLayout {
  std::vector<LayerSlot> slots;
  std::size_t size = 0;
};

struct ConceptPredictor {
  std::vector<DenseLayer> layers;
  ConceptLink link = ConceptLink::SigmoidBce;

  std::size_t input_dim() const { return layers.front().fan_in(); }
  std::size_t num_concepts() const { return layers.back().fan_out(); }
  bool is_linear() const { return layers.size() == 1; }
  ParamLayout layout() const;
  Vector parameters() const;
  void set_parameters(const Vector& theta);
};

struct LabelPredictor {
  RowMatrix weight;  // d_o x k
  Vector bias;       // d_o, empty when has_bias is false
  bool has_bias = true;
  LabelLoss loss = LabelLoss::SoftmaxCe;

  std::size_t num_concepts() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(weight.rows()); }
  ParamLayout layout() const;
  Vector parameters() const;
  void set_parameters(const Vector& theta);
};

struct Cbm {
  ConceptPredictor g;
  LabelPredictor f;
};

// Structural checks on a model: layer chaining, output activation, label width.
void validate(const Cbm& m);

struct CbmSpec {
  std::vector<std::size_t> hidden;  // empty means a single linear concept layer
  ConceptLink link = ConceptLink::SigmoidBce;
  LabelLoss label_loss = LabelLoss::SoftmaxCe;
  bool label_bias = true;
};

// Draws a double uniformly in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);
// Standard normal via Box-Muller; portable across standard libraries.
double standard_normal(std::mt19937_64& rng);
// SplitMix64 finalizer, used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

ConceptPredictor init_concept_predictor(std::size_t input_dim, std::size_t num_concepts, const CbmSpec& spec,
                                        std::uint64_t seed);
LabelPredictor init_label_predictor(std::size_t num_concepts, std::size_t num_classes, const CbmSpec& spec,
                                    std::uint64_t seed);
CbmSpec spec_of(const Cbm& m);

// Removes output rows of the last concept layer and matching label columns.
Cbm delete_concepts(const Cbm& m, const IndexList& concepts);
// Inserts zero rows / columns at `concepts` (positions in the enlarged model).
Cbm insert_zero_concepts(const Cbm& m, const IndexList& concepts);

}  // namespace ecbm
