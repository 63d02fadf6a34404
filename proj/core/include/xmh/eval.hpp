#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "xmh/core.hpp"
#include "xmh/retrieval.hpp"

namespace xmh {

// relevance[j] != 0 iff gallery item j is relevant to the query.
using RelevanceJudgment = std::vector<std::uint8_t>;

// Relevant means sharing at least one label with the query.
RelevanceJudgment make_relevance(const LabelSet& query, std::span<const LabelSet> gallery);

// Gallery positions in rank order.
std::vector<std::size_t> ranking_positions(std::span<const RankedItem> ranked);

// Mean over relevant ranks r of (relevant items in top r) / r, over the full
// ranking. Throws UndefinedQuery when nothing is relevant.
double average_precision(std::span<const std::size_t> ranking, const RelevanceJudgment& relevance);

struct QueryOutcome {
  std::vector<std::size_t> ranking;
  RelevanceJudgment relevance;
};

struct MapResult {
  double map = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // queries with no relevant gallery item
};

// Queries without any relevant item are skipped and counted in `excluded`.
MapResult mean_average_precision(std::span<const QueryOutcome> queries);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// One (recall, precision) point per rank.
std::vector<PrPoint> precision_recall_curve(std::span<const std::size_t> ranking,
                                            const RelevanceJudgment& relevance);

double top_k_precision(std::span<const std::size_t> ranking, const RelevanceJudgment& relevance,
                       std::size_t k);

// Rank-wise mean of the per-query curves; queries without relevant items are skipped.
std::vector<PrPoint> mean_precision_recall_curve(std::span<const QueryOutcome> queries);

// "recall,precision" header followed by one record per point.
void write_pr_curve_csv(std::ostream& out, std::span<const PrPoint> curve);

struct RetrievalReport {
  MapResult map;
  std::vector<PrPoint> pr_curve;
};

// Ranks every query against the index and scores it with label-overlap relevance.
RetrievalReport evaluate_retrieval(const RetrievalIndex& index, const CodeMatrix& queries,
                                   std::span<const LabelSet> query_labels);

}  // namespace xmh
