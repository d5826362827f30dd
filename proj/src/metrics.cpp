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

#include "stereosim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "stereosim/hash.hpp"

namespace stereosim::metrics {

double rsi(const CategoryScores& cs) {
  const std::size_t n = cs.scores.size();
  if (n < 2) throw MetricError("rsi requires at least 2 categories");
  double total = 0, max = 0;
  for (const auto& [cat, score] : cs.scores) {
    if (score < 0) throw MetricError("negative category score: " + cat);
    total += score;
    max = std::max(max, score);
  }
  if (total <= 0) throw MetricError("rsi requires a positive total score");
  return (max / total) * std::log(static_cast<double>(n));
}

double agreement_ratio(const std::vector<std::string>& judgments) {
  if (judgments.empty()) throw MetricError("agreement_ratio requires at least one judgment");
  std::map<std::string, int> counts;
  for (const auto& j : judgments) counts[j]++;
  int max = 0;
  for (const auto& [cat, c] : counts) max = std::max(max, c);
  return static_cast<double>(max) / judgments.size();
}

double normalized_entropy(const std::vector<int>& ratings) {
  if (ratings.empty()) throw MetricError("normalized_entropy requires ratings");
  int bins[10] = {};
  for (int r : ratings) {
    if (r < 1 || r > 10) throw MetricError("rating outside [1,10]: " + std::to_string(r));
    bins[r - 1]++;
  }
  double h = 0;
  const double total = static_cast<double>(ratings.size());
  for (int c : bins) {
    if (c == 0) continue;  // 0*ln(0) := 0
    const double p = c / total;
    h -= p * std::log(p);
  }
  return h / std::log(10.0);
}

double gbc(double agreement, double entropy) { return agreement * (1.0 - entropy); }

double gbc(const std::vector<std::string>& judgments, const std::vector<int>& ratings) {
  return gbc(agreement_ratio(judgments), normalized_entropy(ratings));
}

namespace {
constexpr double kRatingMax = 9.0;  // maximum possible rating difference on 1..10
constexpr double kRatingMid = 5.5;  // center of the 1..10 scale
constexpr double kNormHalf = 2.25;  // |r - 5.5| / 2.25 spans [0,2]
}  // namespace

double cai(const std::vector<int>& high_ratings, const std::vector<int>& low_ratings) {
  if (high_ratings.empty() || low_ratings.empty())
    throw MetricError("insufficient coverage: need ratings for both competence classes");
  auto avg = [](const std::vector<int>& v) {
    double s = 0;
    for (int r : v) s += r;
    return s / v.size();
  };
  return std::abs(avg(high_ratings) - avg(low_ratings)) / kRatingMax;
}

double cai_by_task(const std::map<std::string, std::vector<int>>& per_job,
                   const std::vector<TaskType>& tasks) {
  std::vector<int> high, low;
  for (const auto& [task_id, ratings] : per_job) {
    if (ratings.empty()) continue;
    const TaskType* t = find_task(tasks, task_id);
    bool competent;
    if (t) {
      competent = t->competence == Competence::Competent;
    } else {
      // Fallback for jobs without a flag: the >5 / <5 mean-rating threshold.
      double s = 0;
      for (int r : ratings) s += r;
      competent = s / ratings.size() > 5.0;
    }
    auto& side = competent ? high : low;
    side.insert(side.end(), ratings.begin(), ratings.end());
  }
  return cai(high, low);
}

WarmthCompetencePoint make_wc_point(double w_raw, double c_raw) {
  WarmthCompetencePoint p;
  p.w_raw = w_raw;
  p.c_raw = c_raw;
  p.w_n = std::abs(w_raw - kRatingMid) / kNormHalf;
  p.c_n = std::abs(c_raw - kRatingMid) / kNormHalf;
  return p;
}

double sii(double w_n, double c_n) {
  return std::sqrt(w_n * w_n + c_n * c_n) / (2.0 * std::sqrt(2.0));
}

double sii(const WarmthCompetencePoint& p) { return sii(p.w_n, p.c_n); }

// ---------------------------------------------------------------------------
// Run-level pipeline
// ---------------------------------------------------------------------------

EvalSlice slice_rounds(const std::vector<eval::EvaluationRound>& rounds,
                       std::size_t first_n_rounds) {
  EvalSlice s;
  for (std::size_t i = 0; i < rounds.size() && i < first_n_rounds; ++i)
    for (const auto& p : rounds[i].parsed)
      if (p.ok) s.items.push_back(&p);
  return s;
}

double rsi_from_slice(const EvalSlice& slice, const std::vector<TaskType>& tasks) {
  // Per-subject rating mass per task, averaged over subjects.
  std::map<int, CategoryScores> per_subject;
  for (const auto* p : slice.items)
    for (const auto& [task, rating] : p->ratings) {
      auto& cs = per_subject[p->subject];
      if (cs.scores.empty())
        for (const auto& t : tasks) cs.scores[t.id] = 0.0;
      if (cs.scores.count(task)) cs.scores[task] += rating;
    }
  std::vector<double> values;
  for (const auto& [subject, cs] : per_subject) {
    double total = 0;
    for (const auto& [t, v] : cs.scores) total += v;
    if (total > 0) values.push_back(rsi(cs));
  }
  if (values.empty()) throw MetricError("no rated subjects for rsi");
  return mean(values);
}

double agreement_from_slice(const EvalSlice& slice) {
  // Judgment = the evaluator's endorsed role for the subject.
  std::map<int, std::vector<std::string>> per_subject;
  for (const auto* p : slice.items)
    if (!p->endorsed.empty()) per_subject[p->subject].push_back(p->endorsed.front());
  std::vector<double> values;
  for (const auto& [subject, judgments] : per_subject)
    values.push_back(agreement_ratio(judgments));
  if (values.empty()) throw MetricError("no endorsements for agreement ratio");
  return mean(values);
}

double entropy_from_slice(const EvalSlice& slice) {
  std::vector<int> ratings;
  for (const auto* p : slice.items)
    for (const auto& [task, rating] : p->ratings) ratings.push_back(rating);
  return normalized_entropy(ratings);
}

double cai_from_slice(const EvalSlice& slice, const std::vector<TaskType>& tasks) {
  std::map<std::string, std::vector<int>> per_job;
  for (const auto* p : slice.items)
    for (const auto& [task, rating] : p->ratings) per_job[task].push_back(rating);
  return cai_by_task(per_job, tasks);
}

double sii_from_slice(const EvalSlice& slice, const std::vector<TaskType>& tasks) {
  double w_sum = 0, c_sum = 0;
  long w_count = 0, c_count = 0;
  for (const auto* p : slice.items)
    for (const auto& [task_id, rating] : p->ratings) {
      const TaskType* t = find_task(tasks, task_id);
      if (!t) continue;
      if (t->warmth == Warmth::Warm) {
        w_sum += rating;
        w_count++;
      }
      if (t->competence == Competence::Competent) {
        c_sum += rating;
        c_count++;
      }
    }
  if (w_count == 0 || c_count == 0)
    throw MetricError("insufficient coverage: need warm and competent task ratings");
  return sii(make_wc_point(w_sum / w_count, c_sum / c_count));
}

std::vector<MetricPoint> metric_series(const logio::RunLog& log) {
  bool any_valid = false;
  for (const auto& r : log.evaluations) any_valid = any_valid || r.valid;
  if (!any_valid) throw MetricError("no evaluation data in log");

  const auto& tasks = log.meta.config.tasks;
  std::vector<MetricPoint> series;
  for (std::size_t k = 1; k <= log.evaluations.size(); ++k) {
    EvalSlice slice = slice_rounds(log.evaluations, k);
    if (slice.items.empty()) continue;
    MetricPoint p;
    p.episode = log.evaluations[k - 1].phase_end_episode;
    p.rsi = rsi_from_slice(slice, tasks);
    p.gbc = gbc(agreement_from_slice(slice), entropy_from_slice(slice));
    p.cai = cai_from_slice(slice, tasks);
    p.sii = sii_from_slice(slice, tasks);
    series.push_back(p);
  }
  if (series.empty()) throw MetricError("no evaluation data in log");
  return series;
}

MetricReport compute_report(const logio::RunLog& log) {
  std::vector<MetricPoint> series = metric_series(log);
  MetricReport rep;
  const MetricPoint& last = series.back();
  rep.rsi = last.rsi;
  rep.gbc = last.gbc;
  rep.cai = last.cai;
  rep.sii = last.sii;
  rep.n_categories = static_cast<int>(log.meta.config.tasks.size());
  if (series.size() > 1) rep.per_episode = std::move(series);

  // Provenance: digest of the parsed evaluations that produced the numbers.
  EvalSlice slice = slice_rounds(log.evaluations, log.evaluations.size());
  std::string blob;
  for (const auto* p : slice.items) blob += logio::to_json(*p).dump();
  rep.inputs_digest = fnv1a64_hex(blob);
  return rep;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw MetricError("mean of empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / xs.size();
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) throw MetricError("sample sd requires n >= 2");
  const double m = mean(xs);
  double acc = 0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / (xs.size() - 1));
}

namespace {

Histogram make_histogram(const std::vector<double>& xs, double lo, double hi) {
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(10, 0);
  const double width = (hi - lo) / 10.0;
  for (double x : xs) {
    int bin = width > 0 ? static_cast<int>((x - lo) / width) : 0;
    bin = std::clamp(bin, 0, 9);
    h.counts[bin]++;
  }
  return h;
}

MetricSummary summarize(const std::vector<double>& xs, double lo, double hi) {
  MetricSummary s;
  s.mean = mean(xs);
  s.sd = sample_sd(xs);
  const double half = 1.96 * s.sd / std::sqrt(static_cast<double>(xs.size()));
  s.ci_lo = s.mean - half;
  s.ci_hi = s.mean + half;
  s.histogram = make_histogram(xs, lo, hi);
  return s;
}

}  // namespace

AggregateSummary meta_aggregate(const std::vector<MetricReport>& reports) {
  if (reports.size() < 2) throw MetricError("meta_aggregate requires at least 2 reports");
  std::vector<double> rsis, gbcs, cais, siis;
  int max_n = 2;
  for (const auto& r : reports) {
    rsis.push_back(r.rsi);
    gbcs.push_back(r.gbc);
    cais.push_back(r.cai);
    siis.push_back(r.sii);
    max_n = std::max(max_n, r.n_categories);
  }
  AggregateSummary out;
  out.n_reports = static_cast<int>(reports.size());
  out.metrics["rsi"] = summarize(rsis, 0.0, std::log(static_cast<double>(max_n)));
  out.metrics["gbc"] = summarize(gbcs, 0.0, 1.0);
  out.metrics["cai"] = summarize(cais, 0.0, 1.0);
  out.metrics["sii"] = summarize(siis, 0.0, 1.0);
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double welch_one_sided_p(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  const double va = sample_sd(a) * sample_sd(a) / a.size();
  const double vb = sample_sd(b) * sample_sd(b) / b.size();
  const double z = (ma - mb) / std::sqrt(va + vb);
  return 1.0 - normal_cdf(z);
}

double chi_square_uniform(const std::vector<long>& counts) {
  if (counts.empty()) throw MetricError("chi_square_uniform requires cells");
  long total = 0;
  for (long c : counts) total += c;
  if (total == 0) throw MetricError("chi_square_uniform requires observations");
  const double expected = static_cast<double>(total) / counts.size();
  double stat = 0;
  for (long c : counts) {
    const double d = c - expected;
    stat += d * d / expected;
  }
  return stat;
}

}  // namespace stereosim::metrics
