#include "pft/eval.hpp"

#include "pft/error.hpp"
#include "pft/serialization.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace pft {

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace {

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Shortest representation that parses back to the same double.
std::string format_real(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

double parse_real_field(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw DataError("bad number '" + s + "' on line " + std::to_string(line) + " of metrics CSV");
    return v;
}

// Ranks rows within each group given by `key`.
template <typename Key>
std::vector<double> grouped_ranks(const std::vector<MetricRow>& rows, Key key) {
    std::map<decltype(key(rows.front())), std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < rows.size(); ++i) groups[key(rows[i])].push_back(i);
    std::vector<double> out(rows.size());
    for (const auto& [_, idx] : groups) {
        std::vector<double> values;
        for (auto i : idx) values.push_back(rows[i].nrmse);
        const auto r = average_ranks(values);
        for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = r[j];
    }
    return out;
}

} // namespace

EvaluationReport rank(std::vector<MetricRow> rows) {
    if (rows.empty()) throw DataError("cannot rank an empty result set");
    std::sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.dataset, a.model, a.strategy) < std::tie(b.dataset, b.model, b.strategy);
    });

    std::set<std::string> datasets;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> coverage;
    for (const auto& r : rows) {
        datasets.insert(r.dataset);
        coverage[{r.model, r.strategy}].push_back(r.dataset);
    }
    for (const auto& [pair, ds] : coverage) {
        const std::set<std::string> unique(ds.begin(), ds.end());
        if (unique.size() != ds.size() || unique != datasets)
            throw DataError("inconsistent dataset coverage for model '" + pair.first + "', strategy '" + pair.second + "'");
    }

    EvaluationReport report;
    report.local_ranks = grouped_ranks(rows, [](const MetricRow& r) { return std::make_pair(r.dataset, r.model); });
    report.global_ranks = grouped_ranks(rows, [](const MetricRow& r) { return r.dataset; });

    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < rows.size(); ++i) members[{rows[i].model, rows[i].strategy}].push_back(i);
    for (const auto& [pair, idx] : members) {
        std::vector<double> nr, local, global, total, adapt_s;
        for (auto i : idx) {
            nr.push_back(rows[i].nrmse);
            local.push_back(report.local_ranks[i]);
            global.push_back(report.global_ranks[i]);
            total.push_back(rows[i].runtime_total_s);
            adapt_s.push_back(rows[i].runtime_adapt_s);
        }
        StrategySummary s;
        s.model = pair.first;
        s.strategy = pair.second;
        s.datasets = static_cast<Index>(idx.size());
        s.avg_nrmse = mean_of(nr);
        s.std_nrmse = sample_sd(nr);
        s.avg_local_rank = mean_of(local);
        s.avg_global_rank = mean_of(global);
        s.std_global_rank = sample_sd(global);
        s.avg_runtime_total_s = mean_of(total);
        s.avg_runtime_adapt_s = mean_of(adapt_s);
        report.summary.push_back(std::move(s));
    }
    report.rows = std::move(rows);
    return report;
}

std::vector<PairedRow> paired_comparison(const EvaluationReport& report,
                                         const std::vector<std::pair<std::string, std::string>>& pairs) {
    const auto find = [&](const std::string& model, const char* strategy) -> const StrategySummary* {
        for (const auto& s : report.summary)
            if (s.model == model && s.strategy == strategy) return &s;
        return nullptr;
    };
    std::vector<PairedRow> out;
    for (const auto& [opt, under] : pairs) {
        const auto* bo = find(opt, "base");
        const auto* oo = find(opt, "online_tune");
        const auto* bu = find(under, "base");
        const auto* ou = find(under, "online_tune");
        if (!bo || !oo || !bu || !ou) continue;
        out.push_back({opt, bo->avg_nrmse, oo->avg_nrmse, bu->avg_nrmse, ou->avg_nrmse});
    }
    return out;
}

ReportFiles emit_report(const EvaluationReport& report, const std::filesystem::path& dir) {
    if (report.rows.empty()) throw DataError("refusing to write an empty report");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    ReportFiles files{dir / "metrics.csv", dir / "summary.csv", dir / "report.json"};

    {
        std::ofstream out(files.metrics_csv, std::ios::binary);
        if (!out) throw DataError("cannot write '" + files.metrics_csv.string() + "'");
        out << metrics_csv_header << '\n';
        for (const auto& r : report.rows)
            out << r.dataset << ',' << r.model << ',' << r.strategy << ',' << format_real(r.rmse) << ','
                << format_real(r.nrmse) << ',' << format_real(r.runtime_total_s) << ','
                << format_real(r.runtime_adapt_s) << ',' << r.n_forecasts << '\n';
        if (!out) throw DataError("write failed for '" + files.metrics_csv.string() + "'");
    }
    {
        std::ofstream out(files.summary_csv, std::ios::binary);
        if (!out) throw DataError("cannot write '" + files.summary_csv.string() + "'");
        out << "model,strategy,datasets,avg_nrmse,std_nrmse,avg_local_rank,avg_global_rank,std_global_rank,"
               "avg_runtime_total_s,avg_runtime_adapt_s\n";
        for (const auto& s : report.summary)
            out << s.model << ',' << s.strategy << ',' << s.datasets << ',' << format_real(s.avg_nrmse) << ','
                << format_real(s.std_nrmse) << ',' << format_real(s.avg_local_rank) << ','
                << format_real(s.avg_global_rank) << ',' << format_real(s.std_global_rank) << ','
                << format_real(s.avg_runtime_total_s) << ',' << format_real(s.avg_runtime_adapt_s) << '\n';
    }
    {
        std::ofstream out(files.json, std::ios::binary);
        if (!out) throw DataError("cannot write '" + files.json.string() + "'");
        nlohmann::json j = report;
        j["nrmse_normalizer"] = "range of test targets (max - min)";
        out << j.dump(2) << '\n';
    }
    return files;
}

void write_paired_csv(const std::vector<PairedRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "model,base_opt,online_opt,base_under_opt,online_under_opt\n";
    for (const auto& r : rows)
        out << r.model << ',' << format_real(r.base_opt) << ',' << format_real(r.online_opt) << ','
            << format_real(r.base_under) << ',' << format_real(r.online_under) << '\n';
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != metrics_csv_header)
        throw DataError("'" + path.string() + "' does not start with the metrics header");
    std::vector<MetricRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 8) throw DataError("line " + std::to_string(line_no) + " of metrics CSV has " +
                                           std::to_string(f.size()) + " fields");
        MetricRow r;
        r.dataset = f[0];
        r.model = f[1];
        r.strategy = f[2];
        r.rmse = parse_real_field(f[3], line_no);
        r.nrmse = parse_real_field(f[4], line_no);
        r.runtime_total_s = parse_real_field(f[5], line_no);
        r.runtime_adapt_s = parse_real_field(f[6], line_no);
        r.n_forecasts = static_cast<Index>(parse_real_field(f[7], line_no));
        rows.push_back(std::move(r));
    }
    return rows;
}

EvaluationReport read_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return nlohmann::json::parse(in).get<EvaluationReport>();
}

std::vector<std::filesystem::path> write_cluster_traces(const std::vector<Subsequence>& subsequences,
                                                        const Clustering& clustering,
                                                        const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::vector<std::filesystem::path> files;
    for (Index c = 0; c < clustering.k(); ++c) {
        const auto& cluster = clustering.clusters[static_cast<std::size_t>(c)];
        const auto path = dir / ("cluster_" + std::to_string(c) + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write '" + path.string() + "'");
        const Index p = cluster.centroid.size();
        out << "is_centroid,origin";
        for (Index j = 0; j < p; ++j) out << ",v" << j;
        out << '\n';
        for (Index m : cluster.members) {
            const auto& s = subsequences[static_cast<std::size_t>(m)];
            out << "0," << s.origin;
            for (Index j = 0; j < p; ++j) out << ',' << format_real(s.values[j]);
            out << '\n';
        }
        out << "1,-1";
        for (Index j = 0; j < p; ++j) out << ',' << format_real(cluster.centroid[j]);
        out << '\n';
        files.push_back(path);
    }
    return files;
}

} // namespace pft
