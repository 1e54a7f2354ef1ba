#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rift::dut {

// Architectural roles of the DUT parameter tensors. Each role is one
// quantization group: a single symmetric per-tensor scale covers all blocks.
enum class GroupKind : int {
  kAttnQ = 0,
  kAttnK,
  kAttnV,
  kAttnO,
  kFfnIn,
  kFfnOut,
  kNormScale,
  kNormBias,
  kClassifier,
};
inline constexpr int kNumGroups = 9;

const char* group_name(GroupKind k);
GroupKind group_from_name(const std::string& name);

struct ArchConfig {
  int n_blocks = 2;
  int d_model = 64;
  int n_heads = 4;
  int ffn_hidden = 128;
  int n_classes = 8;
  int seq_len = 4;

  // Synthetic task knobs. Class frequencies decay geometrically so the
  // evaluation set has genuine minority classes; noise_sigma controls
  // cluster overlap.
  int n_samples = 192;
  double noise_sigma = 0.35;
  double imbalance_ratio = 0.8;

  // Training budget for build_dut.
  int max_train_steps = 4000;
  int batch_size = 64;
  double learn_rate = 3e-3;
  double target_accuracy = 0.92;

  int n_norms() const { return 2 * n_blocks + 1; }
  int feature_dim() const { return seq_len * d_model; }
  // Throws std::invalid_argument("invalid architecture: ...") on bad fields.
  void validate() const;
};

struct ParamGroup {
  GroupKind kind = GroupKind::kAttnQ;
  std::string name;
  std::vector<int> shape;
  std::vector<double> float_weights;  // shadow weights (training precision)
  std::vector<std::int8_t> q_weights;
  float scale = 1.0f;
  // Dequantized view used by the evaluation path. Invariant:
  // deq[i] == float(q_weights[i]) * scale at all times, including while
  // faults are applied.
  std::vector<float> deq;

  std::size_t size() const { return q_weights.size(); }
};

struct RepDataset {
  std::size_t n_samples = 0;
  std::size_t dim = 0;  // seq_len * d_model
  std::vector<float> features;  // n_samples x dim, row-major
  std::vector<std::int32_t> labels;
  int n_classes = 0;

  const float* sample(std::size_t i) const { return features.data() + i * dim; }
};

struct EvalResult {
  double accuracy = 0.0;  // exact fraction correct
  double loss = 0.0;      // mean cross-entropy
  int n_evaluations_counter_delta = 1;
};

class QuantizedModel {
 public:
  ArchConfig arch;
  std::uint64_t seed = 0;
  std::vector<ParamGroup> groups;  // always kNumGroups, in GroupKind order

  // Fault application registry, managed by rift::fault. Each entry is a
  // canonically sorted list of (param_index, bit) sites currently applied.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint8_t>>>
      applied_fault_sets;

  QuantizedModel() = default;
  QuantizedModel(const QuantizedModel& other);
  QuantizedModel& operator=(const QuantizedModel& other);

  std::size_t n_params() const;
  bool quantized() const { return quantized_; }
  void mark_quantized() { quantized_ = true; }

  // global_index bijection: flat index <-> (group, offset).
  std::pair<int, std::size_t> locate(std::size_t flat_index) const;
  std::size_t flat_index(int group, std::size_t offset) const;
  GroupKind group_of(std::size_t flat_index) const {
    return groups[static_cast<std::size_t>(locate(flat_index).first)].kind;
  }

  std::uint64_t eval_count() const {
    return eval_count_.load(std::memory_order_relaxed);
  }
  void bump_eval_count() const {
    eval_count_.fetch_add(1, std::memory_order_relaxed);
  }

 private:
  friend void finalize_layout(QuantizedModel&);
  std::vector<std::size_t> group_offsets_;  // prefix sums, size kNumGroups+1
  bool quantized_ = false;
  mutable std::atomic<std::uint64_t> eval_count_{0};
};

// Recomputes the flat-index layout after groups are (re)assigned.
void finalize_layout(QuantizedModel& m);

// Procedural classification task: one Gaussian token pattern per class plus
// isotropic noise, class counts apportioned by imbalance_ratio.
RepDataset make_dataset(const ArchConfig& arch, std::uint64_t seed);
RepDataset make_dataset(const ArchConfig& arch, std::uint64_t seed,
                        const std::vector<int>& class_counts);

// Trains a fresh network on make_dataset(arch, seed) until the quantized
// accuracy reaches arch.target_accuracy, then freezes the int8 weights.
// Deterministic given (arch, seed). Throws std::runtime_error if the budget
// of max_train_steps is exhausted first.
QuantizedModel build_dut(const ArchConfig& arch, std::uint64_t seed);

// Assembles a model directly from externally supplied shadow weights and
// quantizes it (no training). Weight vectors must match the group sizes.
QuantizedModel assemble_model(const ArchConfig& arch, std::uint64_t seed,
                              const std::array<std::vector<double>, kNumGroups>& weights);

// Symmetric per-group int8 quantization of the current shadow weights:
// scale = max|w| / 127 (1 for an all-zero tensor),
// q = round(clamp(w / scale, -127, 127)), deq = float(q) * scale.
void quantize_weights(QuantizedModel& m);

// Exact classification accuracy of the quantized model on `data`, computed
// through the dequantized int8 forward pass. Bumps the model's evaluation
// counter by exactly 1.
EvalResult evaluate(const QuantizedModel& m, const RepDataset& data);

// d(mean cross-entropy * loss_scale)/d(shadow weight), reverse-mode, in
// double precision, evaluated at the float shadow weights (the quantizer is
// treated as identity). Returns a flat vector in global_index order.
std::vector<double> gradients(const QuantizedModel& m, const RepDataset& data,
                              double loss_scale = 1.0);

// Forward pass in shadow (double) precision; used by training and exposed
// for diagnostics. Does not touch the evaluation counter.
double shadow_accuracy(const QuantizedModel& m, const RepDataset& data);

}  // namespace rift::dut
