#include "sagnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <unordered_set>

#include <cblas.h>

#include "binary_io.hpp"
#include "sagnn/error.hpp"
#include "text_util.hpp"

namespace sagnn {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void require_finite(const Matrix& m, const char* op) {
  if (!m.all_finite()) throw RuntimeFailure(std::string("non-finite value in ") + op);
}

// c += op(a) * op(b), row-major.
void gemm(bool trans_a, bool trans_b, const Matrix& a, const Matrix& b, Matrix& c) {
  const auto m = static_cast<blasint>(c.rows());
  const auto n = static_cast<blasint>(c.cols());
  const auto k = static_cast<blasint>(trans_a ? a.rows() : a.cols());
  if (m == 0 || n == 0 || k == 0) return;
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans, m, n, k,
              1.0, a.data().data(), static_cast<blasint>(a.cols()), b.data().data(), static_cast<blasint>(b.cols()),
              1.0, c.data().data(), n);
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) { gemm(false, false, a, b, c); }
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) { gemm(false, true, a, b, c); }
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) { gemm(true, false, a, b, c); }

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_segments(const std::vector<std::size_t>& offsets, std::size_t rows,
                    const std::vector<double>& weights, Aggregator kind) {
  require(offsets.size() >= 2, "aggregate needs at least one segment");
  require(offsets.front() == 0 && offsets.back() == rows, "segment offsets do not cover the rows");
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    require(offsets[s] < offsets[s + 1], "aggregate over an empty segment");
  }
  if (kind == Aggregator::WeightedSum) {
    require(weights.size() == rows, "weighted_sum needs one weight per row");
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      double total = 0.0;
      for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) total += weights[r];
      require(std::abs(total - 1.0) <= 1e-9, "weighted_sum weights must sum to 1");
    }
  }
}

struct SegmentResult {
  Matrix out;
  std::vector<std::size_t> argmax;  // per (segment, col), Max only
};

SegmentResult segment_forward(const Matrix& x, const std::vector<std::size_t>& offsets,
                              const std::vector<double>& weights, Aggregator kind) {
  const std::size_t segments = offsets.size() - 1, d = x.cols();
  SegmentResult res{Matrix(segments, d), {}};
  if (kind == Aggregator::Max) res.argmax.assign(segments * d, 0);
  for (std::size_t s = 0; s < segments; ++s) {
    auto out = res.out.row(s);
    const std::size_t lo = offsets[s], hi = offsets[s + 1];
    switch (kind) {
      case Aggregator::Sum:
        for (std::size_t r = lo; r < hi; ++r) {
          auto in = x.row(r);
          for (std::size_t c = 0; c < d; ++c) out[c] += in[c];
        }
        break;
      case Aggregator::Mean: {
        // Same arithmetic as WeightedSum with uniform weights, so the two
        // agree bit for bit.
        const double inv = 1.0 / static_cast<double>(hi - lo);
        for (std::size_t r = lo; r < hi; ++r) {
          auto in = x.row(r);
          for (std::size_t c = 0; c < d; ++c) out[c] += inv * in[c];
        }
        break;
      }
      case Aggregator::WeightedSum:
        for (std::size_t r = lo; r < hi; ++r) {
          auto in = x.row(r);
          for (std::size_t c = 0; c < d; ++c) out[c] += weights[r] * in[c];
        }
        break;
      case Aggregator::Max:
        for (std::size_t c = 0; c < d; ++c) {
          std::size_t best = lo;
          for (std::size_t r = lo + 1; r < hi; ++r) {
            if (x(r, c) > x(best, c)) best = r;
          }
          out[c] = x(best, c);
          res.argmax[s * d + c] = best;
        }
        break;
    }
  }
  return res;
}

}  // namespace

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, "matrix data length does not match shape");
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    require(row.size() == c, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: shape mismatch");
  Matrix c(a.rows(), b.cols());
  gemm_nn(a, b, c);
  return c;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "concat_cols: row count mismatch");
  Matrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy(a.row(r).begin(), a.row(r).end(), c.row(r).begin());
    std::copy(b.row(r).begin(), b.row(r).end(), c.row(r).begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return c;
}

Matrix relu(const Matrix& a) {
  Matrix c = a;
  for (auto& v : c.data()) v = v > 0.0 ? v : 0.0;
  return c;
}

Matrix sigmoid(const Matrix& a) {
  Matrix c = a;
  for (auto& v : c.data()) v = sigmoid_scalar(v);
  return c;
}

Matrix row_l2_normalize(const Matrix& a) {
  Matrix c = a;
  for (std::size_t r = 0; r < c.rows(); ++r) {
    auto row = c.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& v : row) v *= inv;
  }
  return c;
}

std::string_view to_string(Aggregator kind) {
  switch (kind) {
    case Aggregator::Mean: return "mean";
    case Aggregator::Max: return "max";
    case Aggregator::Sum: return "sum";
    case Aggregator::WeightedSum: return "wsum";
  }
  return "?";
}

Aggregator parse_aggregator(std::string_view text) {
  if (text == "mean") return Aggregator::Mean;
  if (text == "max") return Aggregator::Max;
  if (text == "sum") return Aggregator::Sum;
  if (text == "wsum" || text == "weighted_sum") return Aggregator::WeightedSum;
  throw ValidationError("unknown aggregator '" + std::string(text) + "'");
}

Matrix aggregate(const Matrix& rows, std::span<const double> weights, Aggregator kind) {
  require(rows.rows() >= 1, "aggregate over empty input");
  std::vector<std::size_t> offsets{0, rows.rows()};
  std::vector<double> w(weights.begin(), weights.end());
  check_segments(offsets, rows.rows(), w, kind);
  return segment_forward(rows, offsets, w, kind).out;
}

double bce_loss(const Matrix& probabilities, std::span<const double> labels) {
  require(probabilities.cols() == 1 && probabilities.rows() == labels.size() && !labels.empty(),
          "bce_loss: expects an n x 1 column and n labels");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] == 0.0 || labels[i] == 1.0, "bce_loss: labels must be 0 or 1");
    const double p = std::clamp(probabilities.data()[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------- Parameter

Parameter::Parameter(std::string name_, Matrix value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(value.rows(), value.cols()),
      adam_m(value.rows(), value.cols()),
      adam_v(value.rows(), value.cols()) {}

void Parameter::zero_grad() { grad.fill(0.0); }

// ---------------------------------------------------------------- Tape

Var Tape::push(Matrix value, bool needs_grad) {
  consumed_ = false;
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ValidationError("variable does not belong to this tape");
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

Matrix& Tape::grad(std::uint32_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty() && n.value.size() > 0) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Matrix value) {
  if (!value.all_finite()) throw ValidationError("non-finite input matrix");
  return push(std::move(value), false);
}

Var Tape::param(Parameter& p) {
  if (!p.value.all_finite()) throw RuntimeFailure("non-finite parameter " + p.name);
  auto v = push(p.value, true);
  nodes_[v.id].param = &p;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  require(av.cols() == bv.rows(), "matmul: shape mismatch (" + std::to_string(av.rows()) + "x" +
                                      std::to_string(av.cols()) + " by " + std::to_string(bv.rows()) +
                                      "x" + std::to_string(bv.cols()) + ")");
  Matrix out(av.rows(), bv.cols());
  gemm_nn(av, bv, out);
  require_finite(out, "matmul");
  auto v = push(std::move(out), needs(a) || needs(b));
  nodes_[v.id].backprop = [a, b](Tape& t, const Matrix& g) {
    if (t.needs(a)) gemm_nt(g, t.nodes_[b.id].value, t.grad(a.id));
    if (t.needs(b)) gemm_tn(t.nodes_[a.id].value, g, t.grad(b.id));
  };
  return v;
}

Var Tape::concat_cols(Var a, Var b) {
  auto out = sagnn::concat_cols(value(a), value(b));
  const std::size_t left = value(a).cols();
  auto v = push(std::move(out), needs(a) || needs(b));
  nodes_[v.id].backprop = [a, b, left](Tape& t, const Matrix& g) {
    const std::size_t right = g.cols() - left;
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto grow = g.row(r);
      if (t.needs(a)) {
        auto dst = t.grad(a.id).row(r);
        for (std::size_t c = 0; c < left; ++c) dst[c] += grow[c];
      }
      if (t.needs(b)) {
        auto dst = t.grad(b.id).row(r);
        for (std::size_t c = 0; c < right; ++c) dst[c] += grow[left + c];
      }
    }
  };
  return v;
}

Var Tape::concat_rows(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  require(av.cols() == bv.cols(), "concat_rows: column count mismatch");
  std::vector<double> data;
  data.reserve(av.size() + bv.size());
  data.insert(data.end(), av.data().begin(), av.data().end());
  data.insert(data.end(), bv.data().begin(), bv.data().end());
  const std::size_t top = av.rows();
  auto v = push(Matrix(av.rows() + bv.rows(), av.cols(), std::move(data)), needs(a) || needs(b));
  nodes_[v.id].backprop = [a, b, top](Tape& t, const Matrix& g) {
    const std::size_t split = top * g.cols();
    if (t.needs(a)) {
      auto& ga = t.grad(a.id).data();
      for (std::size_t i = 0; i < split; ++i) ga[i] += g.data()[i];
    }
    if (t.needs(b)) {
      auto& gb = t.grad(b.id).data();
      for (std::size_t i = split; i < g.size(); ++i) gb[i - split] += g.data()[i];
    }
  };
  return v;
}

Var Tape::gather_rows(Var a, std::vector<std::uint32_t> rows) {
  const auto& av = value(a);
  Matrix out(rows.size(), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < av.rows(), "gather_rows: index out of range");
    std::copy(av.row(rows[i]).begin(), av.row(rows[i]).end(), out.row(i).begin());
  }
  auto v = push(std::move(out), needs(a));
  nodes_[v.id].backprop = [a, rows = std::move(rows)](Tape& t, const Matrix& g) {
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto src = g.row(i);
      auto dst = ga.row(rows[i]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  };
  return v;
}

Var Tape::add(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "add: shape mismatch");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += bv.data()[i];
  require_finite(out, "add");
  auto v = push(std::move(out), needs(a) || needs(b));
  nodes_[v.id].backprop = [a, b](Tape& t, const Matrix& g) {
    for (Var x : {a, b}) {
      if (!t.needs(x)) continue;
      auto& gx = t.grad(x.id).data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g.data()[i];
    }
  };
  return v;
}

Var Tape::add_row(Var a, Var row) {
  const auto& av = value(a);
  const auto& rv = value(row);
  require(rv.rows() == 1 && rv.cols() == av.cols(), "add_row: expects a 1 x cols row");
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += rv(0, c);
  }
  require_finite(out, "add_row");
  auto v = push(std::move(out), needs(a) || needs(row));
  nodes_[v.id].backprop = [a, row](Tape& t, const Matrix& g) {
    if (t.needs(a)) {
      auto& ga = t.grad(a.id).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g.data()[i];
    }
    if (t.needs(row)) {
      auto dst = t.grad(row.id).row(0);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += g(r, c);
      }
    }
  };
  return v;
}

Var Tape::relu(Var a) {
  auto v = push(sagnn::relu(value(a)), needs(a));
  nodes_[v.id].backprop = [a](Tape& t, const Matrix& g) {
    const auto& x = t.nodes_[a.id].value.data();
    auto& ga = t.grad(a.id).data();
    const double* gd = g.data().data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] > 0.0 ? gd[i] : 0.0;
  };
  return v;
}

Var Tape::sigmoid(Var a) {
  auto v = push(sagnn::sigmoid(value(a)), needs(a));
  nodes_[v.id].backprop = [a, out = v](Tape& t, const Matrix& g) {
    const auto& s = t.nodes_[out.id].value.data();
    auto& ga = t.grad(a.id).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g.data()[i] * s[i] * (1.0 - s[i]);
  };
  return v;
}

Var Tape::row_l2_normalize(Var a) {
  const auto& av = value(a);
  std::vector<double> norms(av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double sq = 0.0;
    for (double x : av.row(r)) sq += x * x;
    norms[r] = std::sqrt(sq);
  }
  auto v = push(sagnn::row_l2_normalize(av), needs(a));
  nodes_[v.id].backprop = [a, out = v, norms = std::move(norms)](Tape& t, const Matrix& g) {
    const auto& y = t.nodes_[out.id].value;
    auto& ga = t.grad(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto grow = g.row(r);
      auto dst = ga.row(r);
      if (norms[r] == 0.0) {
        // Zero rows pass through unchanged, so the map is the identity there.
        for (std::size_t c = 0; c < grow.size(); ++c) dst[c] += grow[c];
        continue;
      }
      auto yrow = y.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < grow.size(); ++c) dot += yrow[c] * grow[c];
      const double inv = 1.0 / norms[r];
      for (std::size_t c = 0; c < grow.size(); ++c) dst[c] += (grow[c] - yrow[c] * dot) * inv;
    }
  };
  return v;
}

Var Tape::segment_aggregate(Var rows, std::vector<std::size_t> offsets, std::vector<double> weights,
                            Aggregator kind) {
  const auto& x = value(rows);
  check_segments(offsets, x.rows(), weights, kind);
  auto res = segment_forward(x, offsets, weights, kind);
  auto v = push(std::move(res.out), needs(rows));
  nodes_[v.id].backprop = [rows, kind, offsets = std::move(offsets), weights = std::move(weights),
                           argmax = std::move(res.argmax)](Tape& t, const Matrix& g) {
    auto& gx = t.grad(rows.id);
    const std::size_t d = g.cols();
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      auto gs = g.row(s);
      const std::size_t lo = offsets[s], hi = offsets[s + 1];
      if (kind == Aggregator::Max) {
        for (std::size_t c = 0; c < d; ++c) gx(argmax[s * d + c], c) += gs[c];
        continue;
      }
      for (std::size_t r = lo; r < hi; ++r) {
        double scale = 1.0;
        if (kind == Aggregator::Mean) scale = 1.0 / static_cast<double>(hi - lo);
        if (kind == Aggregator::WeightedSum) scale = weights[r];
        auto dst = gx.row(r);
        for (std::size_t c = 0; c < d; ++c) dst[c] += scale * gs[c];
      }
    }
  };
  return v;
}

Var Tape::aggregate(Var rows, std::vector<double> weights, Aggregator kind) {
  require(value(rows).rows() >= 1, "aggregate over empty input");
  return segment_aggregate(rows, {0, value(rows).rows()}, std::move(weights), kind);
}

Var Tape::bce_loss(Var probabilities, std::vector<double> labels) {
  const double loss = sagnn::bce_loss(value(probabilities), labels);
  if (!std::isfinite(loss)) throw RuntimeFailure("non-finite loss");
  auto v = push(Matrix(1, 1, loss), needs(probabilities));
  nodes_[v.id].backprop = [probabilities, labels = std::move(labels)](Tape& t, const Matrix& g) {
    const auto& p = t.nodes_[probabilities.id].value.data();
    auto& gp = t.grad(probabilities.id).data();
    const double scale = g(0, 0) / static_cast<double>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      // The clamp is flat outside its interval.
      if (p[i] < kProbabilityClamp || p[i] > 1.0 - kProbabilityClamp) continue;
      gp[i] += scale * (p[i] - labels[i]) / (p[i] * (1.0 - p[i]));
    }
  };
  return v;
}

void Tape::backward(Var loss) {
  if (consumed_ || nodes_.empty()) throw ValidationError("backward called without a recorded forward pass");
  const auto& out = node(loss).value;
  require(out.rows() == 1 && out.cols() == 1, "backward needs a scalar loss");
  grad(loss.id)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backprop) n.backprop(*this, n.grad);
    if (n.param != nullptr) {
      auto& pg = n.param->grad;
      if (pg.rows() != n.grad.rows() || pg.cols() != n.grad.cols()) pg = Matrix(n.grad.rows(), n.grad.cols());
      for (std::size_t k = 0; k < pg.size(); ++k) pg.data()[k] += n.grad.data()[k];
    }
  }
  nodes_.clear();
  consumed_ = true;
}

// ---------------------------------------------------------------- Optimizer

void OptimConfig::validate() const {
  require(learning_rate >= 0.0, "learning_rate must be >= 0");
  require(warmup_fraction > 0.0 && warmup_fraction < 1.0, "warmup_fraction must be in (0, 1)");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "betas must be in [0, 1)");
  require(epsilon > 0.0, "epsilon must be > 0");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(total_steps >= 1, "total_steps must be >= 1");
}

double linear_warmup_schedule(std::uint64_t step, std::uint64_t total_steps, double warmup_fraction) {
  if (step >= total_steps) return 0.0;
  const double s = static_cast<double>(step);
  const double total = static_cast<double>(total_steps);
  const double warm = warmup_fraction * total;
  if (s < warm) return s / warm;
  return (total - s) / (total - warm);
}

double adamw_step(std::span<Parameter* const> params, const OptimConfig& cfg, std::uint64_t global_step) {
  cfg.validate();
  if (global_step > cfg.total_steps) {
    std::cerr << "warning: optimizer step " << global_step << " beyond total_steps " << cfg.total_steps
              << ", learning rate clamped to 0\n";
  }
  const double lr = cfg.learning_rate * linear_warmup_schedule(global_step, cfg.total_steps, cfg.warmup_fraction);
  std::unordered_set<Parameter*> done;
  for (Parameter* p : params) {
    if (!done.insert(p).second) continue;  // shared parameters update once
    ++p->step_count;
    const double t = static_cast<double>(p->step_count);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    auto& w = p->value.data();
    auto& g = p->grad.data();
    auto& m = p->adam_m.data();
    auto& v = p->adam_v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= lr * cfg.weight_decay * w[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
    p->zero_grad();
  }
  return lr;
}

// ---------------------------------------------------------------- Checkpoints

void save_parameters(std::span<const Parameter* const> params, const std::filesystem::path& path) {
  std::vector<const Parameter*> unique;
  for (const Parameter* p : params) {
    if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(p);
  }
  auto out = text::open_out(path.string());
  out.write("SAGW", 4);
  binio::put(out, kCheckpointVersion);
  binio::put(out, static_cast<std::uint32_t>(unique.size()));
  for (const Parameter* p : unique) {
    binio::put_string(out, p->name);
    binio::put(out, static_cast<std::uint64_t>(p->value.rows()));
    binio::put(out, static_cast<std::uint64_t>(p->value.cols()));
    for (double v : p->value.data()) binio::put_f64(out, v);
  }
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

void load_parameters(std::span<Parameter* const> params, const std::filesystem::path& path) {
  auto in = text::open_in(path.string());
  binio::expect_magic(in, "SAGW");
  auto version = binio::get<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw ValidationError("checkpoint version " + std::to_string(version) + " unsupported");
  }
  auto count = binio::get<std::uint32_t>(in, "tensor count");
  std::vector<std::pair<std::string, Matrix>> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = binio::get_string(in, "tensor name");
    auto rows = binio::get<std::uint64_t>(in, "tensor shape");
    auto cols = binio::get<std::uint64_t>(in, "tensor shape");
    if (rows * cols > (1ULL << 32)) throw ValidationError("corrupt tensor shape in checkpoint");
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = binio::get_f64(in, "tensor data");
    tensors.emplace_back(std::move(name), std::move(m));
  }
  for (Parameter* p : params) {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& t) { return t.first == p->name; });
    if (it == tensors.end()) throw ValidationError("checkpoint is missing tensor " + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
      throw ValidationError("checkpoint tensor " + p->name + " has the wrong shape");
    }
    p->value = it->second;
  }
}

}  // namespace sagnn
