#pragma once

#include <cstddef>
#include <vector>

#include "rttseg/mixture.hpp"
#include "rttseg/random.hpp"
#include "rttseg/series.hpp"

namespace rttseg {

using StateSequence = std::vector<std::size_t>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct StateSummary {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double expected_duration = 1.0;  // steps; +inf for an absorbing state
};

/// Finite HMM with Gaussian-mixture emissions.
struct HmmModel {
  Matrix transition;                     // K x K, row-stochastic
  std::vector<double> initial;           // K-simplex
  std::vector<GaussianMixture> emissions;
  std::vector<double> beta;              // K + 1 global weights (HDP-HMM fits only)
  std::vector<StateSummary> per_state;

  std::size_t num_states() const noexcept { return emissions.size(); }

  /// Recomputes per_state from emissions and the diagonal of transition.
  void refresh_summaries();

  /// Throws InvalidArgument on shape mismatches or rows that do not sum to 1.
  void validate() const;
};

/// log p(y_{1:T} | model) by the forward recursion in log space. Missing
/// observations contribute an emission factor of 1.
double forward_log_likelihood(const HmmModel& model, const RegularSeries& series);

/// Most probable state path; ties resolve to the lower state id.
StateSequence viterbi(const HmmModel& model, const RegularSeries& series);

/// log p(z_{1:T}, y_{1:T} | model) for a given path.
double path_log_prob(const HmmModel& model, const RegularSeries& series,
                     const StateSequence& states);

struct Simulation {
  RegularSeries series;
  StateSequence states;
};

Simulation simulate(const HmmModel& model, std::size_t length, Rng& rng,
                    std::int64_t start_time = 0, std::int64_t interval = 240);

/// Mean sojourn time 1 / (1 - p_self) in steps. Throws DomainError unless
/// 0 <= p_self < 1.
double expected_duration(double p_self);

/// Convenience constructor for tests and tools: Gaussian emissions, given
/// transition matrix and initial distribution.
HmmModel make_gaussian_hmm(const Matrix& transition, std::vector<double> initial,
                           const std::vector<GaussParams>& emissions);

}  // namespace rttseg
