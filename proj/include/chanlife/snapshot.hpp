#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chanlife/graph.hpp"

namespace chanlife {

struct SnapshotRecord {
    std::string channel_id;
    std::string node_a;
    std::string node_b;
    Satoshi capacity = 0;
};

struct Snapshot {
    PaymentGraph graph;
    std::vector<std::string> channel_ids;  // indexed by ChannelId
    std::vector<std::string> warnings;
};

/// CSV with header `channel_id,node_a,node_b,capacity_sat`. Rows naming the
/// same node pair (in either order) are merged by summing capacities, with
/// a warning. Each channel starts balanced: fund_a = C/2, fund_b = C - C/2.
Snapshot read_snapshot(std::istream& in);
Snapshot load_snapshot(const std::filesystem::path& path);
void write_snapshot(std::ostream& out, const PaymentGraph& graph, const std::vector<std::string>& channel_ids = {});

/// Expected days until a balanced channel of capacity C unbalances under
/// uniform pair rate r: (C/w)^2 / (8 * ebc * r). Infinite when ebc == 0.
double balanced_lifespan_days(Satoshi capacity, double ebc, double rate, Satoshi omega);

struct SummaryStats {
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation
    double median = 0.0;
};

SummaryStats summarize(std::vector<double> values);

struct ChannelLifespan {
    ChannelId channel = 0;
    Satoshi capacity = 0;
    double ebc = 0.0;                // undirected edge betweenness
    double expected_payments = 0.0;  // (C/w)^2 / 4
    double expected_days = 0.0;      // +inf when ebc == 0
    bool infinite() const;
};

struct SnapshotAnalysis {
    double rate = 0.0;
    Satoshi omega = 0;
    double central_fraction = 0.14;
    std::vector<ChannelLifespan> channels;
    std::size_t infinite_count = 0;
    SummaryStats all;      // finite lifespans, days
    SummaryStats central;  // top central_fraction by betweenness, finite lifespans
};

/// Lifespan analysis from per-channel capacities and betweenness values.
SnapshotAnalysis analyze_channels(const std::vector<Satoshi>& capacities, const std::vector<double>& ebc,
                                  double rate, Satoshi omega, double central_fraction = 0.14);

/// Computes undirected betweenness once and applies analyze_channels.
SnapshotAnalysis analyze_snapshot(const PaymentGraph& graph, double rate, Satoshi omega,
                                  double central_fraction = 0.14);

struct BetweennessBatch {
    double mean_ebc = 0.0;
    double mean_lifespan_days = 0.0;
    std::size_t size = 0;
};

/// Channels with finite lifespan sorted by betweenness (descending), cut
/// into consecutive batches of batch_size; the last batch may be shorter.
std::vector<BetweennessBatch> betweenness_lifespan_batches(const SnapshotAnalysis& analysis, std::size_t batch_size);

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
};

/// Histogram of finite lifespans (days). Log-spaced bins cover the
/// heavy tail; values <= 0 are not representable on a log scale.
std::vector<HistogramBin> lifespan_histogram(const SnapshotAnalysis& analysis, std::size_t bins, bool log_scale);

/// Spearman rank correlation with average ranks for ties.
double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y);

void write_channel_lifespans(std::ostream& out, const PaymentGraph& graph, const SnapshotAnalysis& analysis,
                             const std::vector<std::string>& channel_ids = {});
void write_lifespan_summary(std::ostream& out, const SnapshotAnalysis& analysis);
void write_histogram(std::ostream& out, const std::vector<HistogramBin>& bins);
void write_batches(std::ostream& out, const std::vector<BetweennessBatch>& batches);

}  // namespace chanlife
