#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sagnn {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  void fill(double v);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double max_abs_diff(const Matrix& a, const Matrix& b);

// Plain (untaped) kernels.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix concat_cols(const Matrix& a, const Matrix& b);
Matrix relu(const Matrix& a);
Matrix sigmoid(const Matrix& a);
// All-zero rows are returned unchanged.
Matrix row_l2_normalize(const Matrix& a);

enum class Aggregator : std::uint8_t { Mean, Max, Sum, WeightedSum };

std::string_view to_string(Aggregator kind);
Aggregator parse_aggregator(std::string_view text);  // mean|max|sum|wsum

// Collapses all rows to one row. `weights` is read only for WeightedSum and
// must then have one entry per row summing to 1.
Matrix aggregate(const Matrix& rows, std::span<const double> weights, Aggregator kind);

inline constexpr double kProbabilityClamp = 1e-7;

// Mean over the batch of -[y log p + (1-y) log(1-p)], p clamped to
// [kProbabilityClamp, 1 - kProbabilityClamp].
double bce_loss(const Matrix& probabilities, std::span<const double> labels);

// Trainable tensor with its gradient slot and AdamW state.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix value);

  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::uint64_t step_count = 0;

  void zero_grad();
};

// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

// Reverse-mode recorder. Every op appends a node holding its output and a
// closure that pushes the output gradient to its inputs; backward() replays
// the closures in exact reverse order, accumulates into Parameter::grad, and
// clears the tape.
class Tape {
 public:
  Var constant(Matrix value);
  Var param(Parameter& p);

  const Matrix& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var concat_cols(Var a, Var b);
  Var concat_rows(Var a, Var b);
  Var gather_rows(Var a, std::vector<std::uint32_t> rows);
  Var add(Var a, Var b);
  // Adds a 1 x cols row to every row of `a`.
  Var add_row(Var a, Var row);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var row_l2_normalize(Var a);
  // Segment s covers rows [offsets[s], offsets[s+1]) and yields output row s.
  // `weights` has one entry per input row (WeightedSum only; each segment's
  // weights must sum to 1). Max routes gradient to the first maximal row.
  Var segment_aggregate(Var rows, std::vector<std::size_t> offsets, std::vector<double> weights,
                        Aggregator kind);
  Var aggregate(Var rows, std::vector<double> weights, Aggregator kind);
  Var bce_loss(Var probabilities, std::vector<double> labels);

  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, const Matrix&)> backprop;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  Var push(Matrix value, bool needs_grad);
  Matrix& grad(std::uint32_t id);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

struct OptimConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t total_steps = 1;
  double warmup_fraction = 0.06;

  void validate() const;
};

// Multiplier on the base learning rate: 0 -> 1 linearly over the first
// warmup_fraction * total_steps steps, then 1 -> 0 linearly at total_steps.
// Steps past the end return 0.
double linear_warmup_schedule(std::uint64_t step, std::uint64_t total_steps,
                              double warmup_fraction);

// One AdamW update (decoupled decay, bias-corrected moments) at learning
// rate learning_rate * schedule(global_step); zeroes gradients afterwards.
// Returns the learning rate that was applied.
double adamw_step(std::span<Parameter* const> params, const OptimConfig& cfg,
                  std::uint64_t global_step);

// Checkpoint: "SAGW", u32 version, u32 count, then per tensor name, shape and
// raw little-endian doubles.
void save_parameters(std::span<const Parameter* const> params, const std::filesystem::path& path);
// Loads values by name into `params`; every name must be present with a
// matching shape.
void load_parameters(std::span<Parameter* const> params, const std::filesystem::path& path);

}  // namespace sagnn
