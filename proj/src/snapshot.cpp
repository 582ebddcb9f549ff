#include "chanlife/snapshot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "chanlife/csv.hpp"

namespace chanlife {

namespace {

constexpr const char* kSnapshotHeader = "channel_id,node_a,node_b,capacity_sat";

}  // namespace

Snapshot read_snapshot(std::istream& in) {
    std::vector<SnapshotRecord> records;
    std::map<std::pair<std::string, std::string>, std::size_t> by_pair;
    Snapshot snap;

    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (csv::trim(line).empty()) continue;
        if (header) {
            header = false;
            if (csv::trim(line) != kSnapshotHeader)
                throw ParseError(std::string("expected header '") + kSnapshotHeader + "'", line_no);
            continue;
        }
        const auto fields = csv::split(line);
        if (fields.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
        SnapshotRecord rec{fields[0], fields[1], fields[2], csv::parse_integer<Satoshi>(fields[3], "capacity_sat", line_no)};
        if (rec.node_a.empty() || rec.node_b.empty()) throw ParseError("empty node id", line_no);
        if (rec.node_a == rec.node_b) throw ParseError("channel connects node " + rec.node_a + " to itself", line_no);
        if (rec.capacity <= 0) throw ParseError("capacity must be positive", line_no);

        auto key = std::minmax(rec.node_a, rec.node_b);
        auto [it, fresh] = by_pair.emplace(std::pair{key.first, key.second}, records.size());
        if (!fresh) {
            SnapshotRecord& kept = records[it->second];
            kept.capacity += rec.capacity;
            snap.warnings.push_back("line " + std::to_string(line_no) + ": channel " + rec.channel_id +
                                    " duplicates channel " + kept.channel_id + " (" + rec.node_a + " - " +
                                    rec.node_b + "); capacities merged");
            continue;
        }
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw ParseError("snapshot contains no channels", 0);

    for (const auto& rec : records) {
        NodeId ids[2];
        const std::string* names[2] = {&rec.node_a, &rec.node_b};
        for (int i = 0; i < 2; ++i) {
            const auto found = snap.graph.find_node(*names[i]);
            ids[i] = found ? *found : snap.graph.add_node(*names[i]);
        }
        const Satoshi half = rec.capacity / 2;
        snap.graph.add_channel(ids[0], ids[1], half, rec.capacity - half);
        snap.channel_ids.push_back(rec.channel_id);
    }
    return snap;
}

Snapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open snapshot file " + path.string(), 0);
    return read_snapshot(in);
}

void write_snapshot(std::ostream& out, const PaymentGraph& graph, const std::vector<std::string>& channel_ids) {
    out << kSnapshotHeader << '\n';
    for (ChannelId c = 0; c < graph.channel_count(); ++c) {
        const Channel& ch = graph.channel(c);
        out << (c < channel_ids.size() ? channel_ids[c] : std::to_string(c)) << ',' << graph.label(ch.node_a) << ','
            << graph.label(ch.node_b) << ',' << ch.capacity() << '\n';
    }
}

double balanced_lifespan_days(Satoshi capacity, double ebc, double rate, Satoshi omega) {
    if (capacity <= 0) throw ParameterError("capacity must be positive");
    if (!(rate > 0.0)) throw ParameterError("payment rate must be positive");
    if (omega <= 0) throw ParameterError("payment size must be positive");
    if (!(ebc >= 0.0)) throw ParameterError("betweenness must be non-negative");
    if (ebc == 0.0) return std::numeric_limits<double>::infinity();
    const double steps = static_cast<double>(capacity) / static_cast<double>(omega);
    return steps * steps / (8.0 * ebc * rate);
}

bool ChannelLifespan::infinite() const { return std::isinf(expected_days); }

SummaryStats summarize(std::vector<double> values) {
    SummaryStats s;
    s.count = values.size();
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(s.count - 1));
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = s.count / 2;
    s.median = s.count % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    return s;
}

SnapshotAnalysis analyze_channels(const std::vector<Satoshi>& capacities, const std::vector<double>& ebc, double rate,
                                  Satoshi omega, double central_fraction) {
    if (capacities.size() != ebc.size()) throw ParameterError("capacity and betweenness counts differ");
    if (!(central_fraction >= 0.0 && central_fraction <= 1.0))
        throw ParameterError("central fraction must lie in [0, 1]");

    SnapshotAnalysis analysis;
    analysis.rate = rate;
    analysis.omega = omega;
    analysis.central_fraction = central_fraction;
    for (ChannelId c = 0; c < capacities.size(); ++c) {
        ChannelLifespan ch;
        ch.channel = c;
        ch.capacity = capacities[c];
        ch.ebc = ebc[c];
        const double half_steps = static_cast<double>(capacities[c]) / (2.0 * static_cast<double>(omega));
        ch.expected_payments = half_steps * half_steps;
        ch.expected_days = balanced_lifespan_days(capacities[c], ebc[c], rate, omega);
        if (ch.infinite()) ++analysis.infinite_count;
        analysis.channels.push_back(ch);
    }

    std::vector<double> finite;
    for (const auto& ch : analysis.channels)
        if (!ch.infinite()) finite.push_back(ch.expected_days);
    analysis.all = summarize(finite);

    std::vector<ChannelId> order(analysis.channels.size());
    std::iota(order.begin(), order.end(), ChannelId{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](ChannelId x, ChannelId y) { return analysis.channels[x].ebc > analysis.channels[y].ebc; });
    const auto top = static_cast<std::size_t>(std::llround(central_fraction * static_cast<double>(order.size())));
    std::vector<double> central;
    for (std::size_t i = 0; i < top; ++i) {
        const auto& ch = analysis.channels[order[i]];
        if (!ch.infinite()) central.push_back(ch.expected_days);
    }
    analysis.central = summarize(central);
    return analysis;
}

SnapshotAnalysis analyze_snapshot(const PaymentGraph& graph, double rate, Satoshi omega, double central_fraction) {
    if (graph.channel_count() == 0) throw ParameterError("snapshot graph has no channels");
    std::vector<Satoshi> capacities;
    capacities.reserve(graph.channel_count());
    for (const Channel& ch : graph.channels()) capacities.push_back(ch.capacity());
    return analyze_channels(capacities, undirected_edge_betweenness(graph), rate, omega, central_fraction);
}

std::vector<BetweennessBatch> betweenness_lifespan_batches(const SnapshotAnalysis& analysis, std::size_t batch_size) {
    if (batch_size < 1) throw ParameterError("batch size must be at least 1");
    std::vector<const ChannelLifespan*> finite;
    for (const auto& ch : analysis.channels)
        if (!ch.infinite()) finite.push_back(&ch);
    std::stable_sort(finite.begin(), finite.end(),
                     [](const ChannelLifespan* x, const ChannelLifespan* y) { return x->ebc > y->ebc; });

    std::vector<BetweennessBatch> batches;
    for (std::size_t start = 0; start < finite.size(); start += batch_size) {
        const std::size_t end = std::min(finite.size(), start + batch_size);
        BetweennessBatch batch;
        batch.size = end - start;
        for (std::size_t i = start; i < end; ++i) {
            batch.mean_ebc += finite[i]->ebc;
            batch.mean_lifespan_days += finite[i]->expected_days;
        }
        batch.mean_ebc /= static_cast<double>(batch.size);
        batch.mean_lifespan_days /= static_cast<double>(batch.size);
        batches.push_back(batch);
    }
    return batches;
}

std::vector<HistogramBin> lifespan_histogram(const SnapshotAnalysis& analysis, std::size_t bins, bool log_scale) {
    if (bins < 1) throw ParameterError("histogram needs at least one bin");
    std::vector<double> values;
    for (const auto& ch : analysis.channels)
        if (!ch.infinite() && (!log_scale || ch.expected_days > 0.0)) values.push_back(ch.expected_days);
    if (values.empty()) return {};

    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    auto to_axis = [&](double v) { return log_scale ? std::log10(v) : v; };
    auto from_axis = [&](double v) { return log_scale ? std::pow(10.0, v) : v; };
    const double lo = to_axis(*lo_it);
    const double hi = to_axis(*hi_it);
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;

    std::vector<HistogramBin> out(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        out[i].lower = from_axis(lo + width * static_cast<double>(i));
        out[i].upper = from_axis(lo + width * static_cast<double>(i + 1));
    }
    for (double v : values) {
        auto i = static_cast<std::size_t>((to_axis(v) - lo) / width);
        ++out[std::min(i, bins - 1)].count;
    }
    return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("spearman correlation needs two equal-length samples");
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

void write_channel_lifespans(std::ostream& out, const PaymentGraph& graph, const SnapshotAnalysis& analysis,
                             const std::vector<std::string>& channel_ids) {
    out << "channel_id,node_a,node_b,capacity_sat,edge_betweenness,expected_payments,expected_days,infinite\n";
    for (const auto& ch : analysis.channels) {
        const Channel& edge = graph.channel(ch.channel);
        out << (ch.channel < channel_ids.size() ? channel_ids[ch.channel] : std::to_string(ch.channel)) << ','
            << graph.label(edge.node_a) << ',' << graph.label(edge.node_b) << ',' << ch.capacity << ','
            << csv::format_double(ch.ebc) << ',' << csv::format_double(ch.expected_payments) << ',';
        if (!ch.infinite()) out << csv::format_double(ch.expected_days);
        out << ',' << (ch.infinite() ? 1 : 0) << '\n';
    }
}

void write_lifespan_summary(std::ostream& out, const SnapshotAnalysis& analysis) {
    out << "subset,channels,average_days,std_days,median_days,infinite_excluded\n";
    auto row = [&](const char* name, const SummaryStats& s, std::size_t infinite) {
        out << name << ',' << s.count << ',' << csv::format_double(s.mean) << ',' << csv::format_double(s.stddev)
            << ',' << csv::format_double(s.median) << ',' << infinite << '\n';
    };
    row("all", analysis.all, analysis.infinite_count);
    const std::size_t central_total = static_cast<std::size_t>(
        std::llround(analysis.central_fraction * static_cast<double>(analysis.channels.size())));
    row("central", analysis.central, central_total - analysis.central.count);
}

void write_histogram(std::ostream& out, const std::vector<HistogramBin>& bins) {
    out << "lower_days,upper_days,channels\n";
    for (const auto& b : bins)
        out << csv::format_double(b.lower) << ',' << csv::format_double(b.upper) << ',' << b.count << '\n';
}

void write_batches(std::ostream& out, const std::vector<BetweennessBatch>& batches) {
    out << "batch,channels,mean_edge_betweenness,mean_lifespan_days\n";
    for (std::size_t i = 0; i < batches.size(); ++i)
        out << i << ',' << batches[i].size << ',' << csv::format_double(batches[i].mean_ebc) << ','
            << csv::format_double(batches[i].mean_lifespan_days) << '\n';
}

}  // namespace chanlife
