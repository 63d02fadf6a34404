#include "xmh/eval.hpp"

#include <ostream>
#include <string>

#include "xmh/error.hpp"

namespace xmh {

namespace {

void check_ranking(std::span<const std::size_t> ranking, const RelevanceJudgment& relevance) {
  if (ranking.size() != relevance.size()) {
    throw InvalidInput("ranking has " + std::to_string(ranking.size()) +
                       " entries but the gallery has " + std::to_string(relevance.size()));
  }
  std::vector<std::uint8_t> seen(relevance.size(), 0);
  for (std::size_t pos : ranking) {
    if (pos >= relevance.size() || seen[pos]) {
      throw InvalidInput("ranking is not a permutation of the gallery");
    }
    seen[pos] = 1;
  }
}

std::size_t count_relevant(const RelevanceJudgment& relevance) {
  std::size_t n = 0;
  for (auto r : relevance) n += r != 0;
  return n;
}

}  // namespace

RelevanceJudgment make_relevance(const LabelSet& query, std::span<const LabelSet> gallery) {
  RelevanceJudgment rel(gallery.size());
  for (std::size_t j = 0; j < gallery.size(); ++j) rel[j] = query.intersects(gallery[j]) ? 1 : 0;
  return rel;
}

std::vector<std::size_t> ranking_positions(std::span<const RankedItem> ranked) {
  std::vector<std::size_t> out(ranked.size());
  for (std::size_t r = 0; r < ranked.size(); ++r) out[r] = ranked[r].position;
  return out;
}

double average_precision(std::span<const std::size_t> ranking, const RelevanceJudgment& relevance) {
  check_ranking(ranking, relevance);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (relevance[ranking[r]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) throw UndefinedQuery("average precision undefined: no relevant gallery items");
  return sum / static_cast<double>(hits);
}

MapResult mean_average_precision(std::span<const QueryOutcome> queries) {
  MapResult res;
  double sum = 0.0;
  for (const auto& q : queries) {
    check_ranking(q.ranking, q.relevance);
    if (count_relevant(q.relevance) == 0) {
      ++res.excluded;
      continue;
    }
    sum += average_precision(q.ranking, q.relevance);
    ++res.evaluated;
  }
  if (res.evaluated == 0) throw UndefinedQuery("MAP undefined: no query has a relevant item");
  res.map = sum / static_cast<double>(res.evaluated);
  return res;
}

std::vector<PrPoint> precision_recall_curve(std::span<const std::size_t> ranking,
                                            const RelevanceJudgment& relevance) {
  check_ranking(ranking, relevance);
  const std::size_t total = count_relevant(relevance);
  if (total == 0) throw UndefinedQuery("precision-recall undefined: no relevant gallery items");
  std::vector<PrPoint> curve;
  curve.reserve(ranking.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    hits += relevance[ranking[r]] != 0;
    curve.push_back({static_cast<double>(hits) / static_cast<double>(total),
                     static_cast<double>(hits) / static_cast<double>(r + 1)});
  }
  return curve;
}

double top_k_precision(std::span<const std::size_t> ranking, const RelevanceJudgment& relevance,
                       std::size_t k) {
  check_ranking(ranking, relevance);
  if (k < 1 || k > ranking.size()) {
    throw InvalidInput("top-k precision: k=" + std::to_string(k) + " outside [1, " +
                       std::to_string(ranking.size()) + "]");
  }
  std::size_t hits = 0;
  for (std::size_t r = 0; r < k; ++r) hits += relevance[ranking[r]] != 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::vector<PrPoint> mean_precision_recall_curve(std::span<const QueryOutcome> queries) {
  std::vector<PrPoint> mean;
  std::size_t used = 0;
  for (const auto& q : queries) {
    if (count_relevant(q.relevance) == 0) continue;
    const auto curve = precision_recall_curve(q.ranking, q.relevance);
    if (mean.empty()) mean.resize(curve.size());
    if (curve.size() != mean.size()) throw InvalidInput("queries ranked against different galleries");
    for (std::size_t r = 0; r < curve.size(); ++r) {
      mean[r].recall += curve[r].recall;
      mean[r].precision += curve[r].precision;
    }
    ++used;
  }
  for (auto& p : mean) {
    p.recall /= static_cast<double>(used);
    p.precision /= static_cast<double>(used);
  }
  return mean;
}

void write_pr_curve_csv(std::ostream& out, std::span<const PrPoint> curve) {
  out << "recall,precision\n";
  const auto old_prec = out.precision(9);
  for (const auto& p : curve) out << p.recall << ',' << p.precision << '\n';
  out.precision(old_prec);
}

RetrievalReport evaluate_retrieval(const RetrievalIndex& index, const CodeMatrix& queries,
                                   std::span<const LabelSet> query_labels) {
  if (query_labels.size() != queries.count()) {
    throw InvalidInput("one label set per query code is required");
  }
  std::vector<QueryOutcome> outcomes;
  outcomes.reserve(queries.count());
  for (std::size_t q = 0; q < queries.count(); ++q) {
    const auto ranked = rank_gallery(index, queries.column(q));
    outcomes.push_back({ranking_positions(ranked), make_relevance(query_labels[q], index.labels())});
  }
  RetrievalReport report;
  report.map = mean_average_precision(outcomes);
  report.pr_curve = mean_precision_recall_curve(outcomes);
  return report;
}

}  // namespace xmh
