/*
 * Copyright 2026 The stereosim Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef STEREOSIM_METRICS_HPP
#define STEREOSIM_METRICS_HPP

#include <map>
#include <string>
#include <vector>

#include "stereosim/evaluation.hpp"
#include "stereosim/runlog.hpp"
#include "stereosim/types.hpp"

namespace stereosim::metrics {

// ---------------------------------------------------------------------------
// Index kernels
// ---------------------------------------------------------------------------

struct CategoryScores {
  std::map<std::string, double> scores;  // category -> non-negative score
};

// (C_max / C_total) * ln(N). Range [ln(N)/N, ln(N)]; scale invariant.
double rsi(const CategoryScores& cs);

// Share of the modal judgment; ties use the tied maximum count.
double agreement_ratio(const std::vector<std::string>& judgments);

// Shannon entropy of the rating distribution over the 10 integer bins,
// normalized by ln(10); 0*ln(0) := 0.
double normalized_entropy(const std::vector<int>& ratings);

// AR * (1 - NE).
double gbc(double agreement, double entropy);
double gbc(const std::vector<std::string>& judgments, const std::vector<int>& ratings);

// |mean(high) - mean(low)| / 9, the maximum possible rating difference.
double cai(const std::vector<int>& high_ratings, const std::vector<int>& low_ratings);

// Splits pooled per-task ratings by the competence flag of each task; tasks
// absent from the task set fall back to the >5 / <5 mean-rating threshold.
double cai_by_task(const std::map<std::string, std::vector<int>>& per_job,
                   const std::vector<TaskType>& tasks);

struct WarmthCompetencePoint {
  double w_raw = 5.5;  // mean warmth rating in [1,10]
  double c_raw = 5.5;  // mean competence rating in [1,10]
  double w_n = 0;      // |w_raw - 5.5| / 2.25, in [0,2]
  double c_n = 0;
};

WarmthCompetencePoint make_wc_point(double w_raw, double c_raw);

// sqrt(w_n^2 + c_n^2) / (2*sqrt(2)), in [0,1].
double sii(const WarmthCompetencePoint& p);
double sii(double w_n, double c_n);

// ---------------------------------------------------------------------------
// Run-level pipeline
// ---------------------------------------------------------------------------
//
// Parsed evaluations feed the indices as follows (see docs/metrics.md):
//  - RSI: per subject, category scores are the summed ratings per task
//    (rating mass); the run value is the mean over subjects with any rating.
//  - AR: one judgment per (evaluator, subject) = the endorsed role (first in
//    task order when several); per-subject modal share, averaged.
//  - NE: pooled over every individual rating.
//  - CAI: pooled per-task ratings split by competence flag.
//  - SII: w_raw/c_raw are mean ratings over warm / competent tasks.

struct EvalSlice {
  std::vector<const eval::ParsedAssessment*> items;  // parsed == ok only
};

EvalSlice slice_rounds(const std::vector<eval::EvaluationRound>& rounds,
                       std::size_t first_n_rounds);

double rsi_from_slice(const EvalSlice& slice, const std::vector<TaskType>& tasks);
double agreement_from_slice(const EvalSlice& slice);
double entropy_from_slice(const EvalSlice& slice);
double cai_from_slice(const EvalSlice& slice, const std::vector<TaskType>& tasks);
double sii_from_slice(const EvalSlice& slice, const std::vector<TaskType>& tasks);

// Cumulative metrics at each round of the log. Throws MetricError when the
// log has no valid evaluation data.
std::vector<MetricPoint> metric_series(const logio::RunLog& log);

// Final cumulative report, with the per-episode series attached when the log
// holds more than one round.
MetricReport compute_report(const logio::RunLog& log);

// ---------------------------------------------------------------------------
// Cross-run aggregation
// ---------------------------------------------------------------------------

struct Histogram {
  double lo = 0, hi = 1;
  std::vector<int> counts;  // 10 bins over [lo, hi]
};

struct MetricSummary {
  double mean = 0;
  double sd = 0;      // sample standard deviation
  double ci_lo = 0;   // 95% CI, normal approximation
  double ci_hi = 0;
  Histogram histogram;
};

struct AggregateSummary {
  int n_reports = 0;
  std::map<std::string, MetricSummary> metrics;  // rsi, gbc, cai, sii
};

// Requires >= 2 reports. Histograms span [0,1] for gbc/cai/sii and
// [0, ln(max N)] for rsi.
AggregateSummary meta_aggregate(const std::vector<MetricReport>& reports);

// ---------------------------------------------------------------------------
// Small statistics helpers used by the aggregation and the acceptance tests
// ---------------------------------------------------------------------------

double mean(const std::vector<double>& xs);
double sample_sd(const std::vector<double>& xs);
double normal_cdf(double z);
// One-sided Welch test p-value for mean(a) > mean(b), normal approximation.
double welch_one_sided_p(const std::vector<double>& a, const std::vector<double>& b);
// Chi-square statistic against the uniform distribution over counts.size() cells.
double chi_square_uniform(const std::vector<long>& counts);

}  // namespace stereosim::metrics

#endif  // STEREOSIM_METRICS_HPP
